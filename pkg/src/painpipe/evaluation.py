"""Evaluation statistics: accuracy, ROC AUC, paired AUC comparison, splits.

AUC uses the Mann-Whitney formulation (ties count half), which equals the
trapezoidal area under the ROC curve. Two score sets over the same instances
are compared with the DeLong test for correlated ROC curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .validation import as_binary_labels

SIGNIFICANCE_LEVEL = 0.05


def accuracy(predictions, labels) -> float:
    """Fraction of correct predictions."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ContractError(
            f"predictions and labels differ in shape: {predictions.shape} vs {labels.shape}"
        )
    if predictions.size == 0:
        raise ContractError("cannot compute accuracy of an empty set")
    return float((predictions == labels).mean())


def format_percent(fraction: float) -> str:
    """Report formatting: percentage with two decimals."""
    return f"{100.0 * fraction:.2f}"


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_values = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _check_scored_set(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = as_binary_labels(labels)
    if scores.shape != labels.shape:
        raise ContractError(
            f"scores and labels differ in shape: {scores.shape} vs {labels.shape}"
        )
    if not np.all(np.isfinite(scores)):
        raise ContractError("scores contain non-finite values")
    if len(np.unique(labels)) < 2:
        raise ContractError("AUC requires both classes present")
    return scores, labels


def auc(scores, labels) -> float:
    """P(random positive outscores random negative), ties counted half."""
    scores, labels = _check_scored_set(scores, labels)
    ranks = _average_ranks(scores)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class DelongResult:
    auc_a: float
    auc_b: float
    z: float
    p_value: float
    significant: bool


def _delong_components(scores: np.ndarray, labels: np.ndarray):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    psi = np.greater.outer(pos, neg).astype(np.float64)
    psi += 0.5 * np.equal.outer(pos, neg)
    return psi.mean(axis=1), psi.mean(axis=0), psi.mean()


def delong_test(labels, scores_a, scores_b) -> DelongResult:
    """DeLong paired test for two correlated score sets on the same instances.

    Returns both AUCs, the z statistic, the two-sided p-value, and the
    significance flag at the 0.05 level. Equal AUC estimates give z = 0 and
    p = 1 by definition.
    """
    scores_a, labels = _check_scored_set(scores_a, labels)
    scores_b, labels_b = _check_scored_set(scores_b, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos < 2 or n_neg < 2:
        raise ContractError("DeLong variance needs >= 2 instances per class")

    v10_a, v01_a, auc_a = _delong_components(scores_a, labels)
    v10_b, v01_b, auc_b = _delong_components(scores_b, labels)
    s10 = np.cov(np.stack([v10_a, v10_b]), ddof=1)
    s01 = np.cov(np.stack([v01_a, v01_b]), ddof=1)
    variance = (s10[0, 0] + s10[1, 1] - 2 * s10[0, 1]) / n_pos \
        + (s01[0, 0] + s01[1, 1] - 2 * s01[0, 1]) / n_neg

    diff = auc_a - auc_b
    if diff == 0.0:
        z, p = 0.0, 1.0
    elif variance <= 0.0:
        z = math.inf if diff > 0 else -math.inf
        p = 0.0
    else:
        z = diff / math.sqrt(variance)
        p = math.erfc(abs(z) / math.sqrt(2.0))
    return DelongResult(
        auc_a=float(auc_a),
        auc_b=float(auc_b),
        z=float(z),
        p_value=float(p),
        significant=bool(p < SIGNIFICANCE_LEVEL),
    )


@dataclass(frozen=True)
class SplitPlan:
    """Subject-disjoint train/test assignment."""

    train_subjects: tuple[str, ...]
    test_subjects: tuple[str, ...]
    seed: int

    def __post_init__(self) -> None:
        train, test = set(self.train_subjects), set(self.test_subjects)
        if train & test:
            raise ContractError(f"subjects on both sides: {sorted(train & test)}")
        if not train or not test:
            raise ContractError("both split sides must be non-empty")

    def train_mask(self, subject_ids) -> np.ndarray:
        train = set(self.train_subjects)
        return np.array([s in train for s in subject_ids])

    def test_mask(self, subject_ids) -> np.ndarray:
        test = set(self.test_subjects)
        return np.array([s in test for s in subject_ids])


def subject_split(subject_ids, test_fraction: float, seed: int) -> SplitPlan:
    """Shuffle subjects with a seeded generator and cut at ceil((1-f) * S).

    No subject ever appears on both sides. The tiny epsilon guards the ceil
    against float products like 16.000000000000004 rounding a side up.
    """
    subjects = sorted(set(subject_ids))
    if len(subjects) < 2:
        raise ContractError(f"need >= 2 subjects to split, got {len(subjects)}")
    if not 0.0 < test_fraction < 1.0:
        raise ContractError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(subjects))
    n_train = math.ceil((1.0 - test_fraction) * len(subjects) - 1e-9)
    if n_train < 1 or n_train >= len(subjects):
        raise ContractError(
            f"split leaves an empty side: {n_train} train of {len(subjects)} subjects"
        )
    shuffled = [subjects[i] for i in order]
    return SplitPlan(
        train_subjects=tuple(sorted(shuffled[:n_train])),
        test_subjects=tuple(sorted(shuffled[n_train:])),
        seed=seed,
    )
