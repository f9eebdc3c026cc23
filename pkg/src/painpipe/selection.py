"""Feature ranking and selection: Relief-f and symmetric uncertainty.

Both selectors produce a deterministic descending ranking (ties broken by
original column index) and expose a fit/transform estimator interface so
they slot into standard pipelines. Scores are computed on the training
split only; transform just picks columns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ContractError
from .validation import check_X_y

DEFAULT_BINS = 10
DEFAULT_K_NEIGHBORS = 10


def entropy(values) -> float:
    """Shannon entropy (bits) of the empirical distribution of symbols."""
    arr = np.asarray(values)
    if arr.size == 0:
        raise ContractError("entropy of an empty sequence is undefined")
    _, counts = np.unique(arr, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def discretize(values, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equal-width binning over [min, max]; half-open bins, last bin closed.

    A constant feature maps to a single symbol.
    """
    if bins < 2:
        raise ContractError(f"bins must be >= 2, got {bins}")
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ContractError("cannot discretize non-finite values")
    lo, hi = v.min(), v.max()
    if hi <= lo:
        return np.zeros(v.shape, dtype=np.int64)
    idx = np.floor((v - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def _joint_entropy(a: np.ndarray, b: np.ndarray) -> float:
    pairs = a.astype(np.int64) * (int(b.max()) + 1) + b.astype(np.int64)
    return entropy(pairs)


def symmetric_uncertainty(x, y, bins: int = DEFAULT_BINS) -> float:
    """SU = 2 * (H(X) + H(Y) - H(X,Y)) / (H(X) + H(Y)), in [0, 1].

    Both inputs are discretized with the same equal-width rule, so already
    discrete inputs (e.g. class labels) are relabeled bijectively and their
    entropies are unchanged.
    """
    xs = discretize(np.asarray(x, dtype=np.float64), bins)
    ys = discretize(np.asarray(y, dtype=np.float64), bins)
    if xs.shape != ys.shape:
        raise ContractError(f"length mismatch: {xs.shape} vs {ys.shape}")
    hx = entropy(xs)
    hy = entropy(ys)
    if hx + hy == 0.0:
        return 0.0
    hxy = _joint_entropy(xs, ys)
    su = 2.0 * (hx + hy - hxy) / (hx + hy)
    return float(min(1.0, max(0.0, su)))


def relieff_weights(
    X,
    y,
    k_neighbors: int = DEFAULT_K_NEIGHBORS,
    sample_count: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Relief-f feature weights in [-1, 1].

    Features are range-normalized to [0, 1] internally; for every sampled
    instance the k nearest hits (same class) and k nearest misses (other
    class) under Euclidean distance contribute per-feature value differences,
    misses positively and hits negatively. Distance ties break toward the
    lower instance index. ``sample_count=None`` scores every instance and is
    fully deterministic; sampling is deterministic given ``seed``.
    """
    X, y = check_X_y(X, y, require_both_classes=True)
    n, d = X.shape
    if k_neighbors < 1:
        raise ContractError(f"k_neighbors must be >= 1, got {k_neighbors}")
    for cls in (0, 1):
        have = int((y == cls).sum())
        if have < k_neighbors + 1:
            raise ContractError(
                f"class {cls} has {have} instances, need >= {k_neighbors + 1}"
            )

    mins = X.min(axis=0)
    ranges = X.max(axis=0) - mins
    Xn = np.zeros_like(X)
    varying = ranges > 0
    Xn[:, varying] = (X[:, varying] - mins[varying]) / ranges[varying]

    if sample_count is None:
        sample = np.arange(n)
    else:
        if not 1 <= sample_count <= n:
            raise ContractError(f"sample_count must be in [1, {n}], got {sample_count}")
        rng = np.random.default_rng(seed)
        sample = np.sort(rng.choice(n, size=sample_count, replace=False))

    m = len(sample)
    k = k_neighbors
    weights = np.zeros(d)
    for i in sample:
        diffs = np.abs(Xn - Xn[i])
        dist = np.sqrt((diffs ** 2).sum(axis=1))
        dist[i] = np.inf
        order = np.argsort(dist, kind="stable")
        same = y[order] == y[i]
        hits = order[same][:k]
        misses = order[~same][:k]
        weights += diffs[misses].sum(axis=0) / (m * k)
        weights -= diffs[hits].sum(axis=0) / (m * k)
    return weights


@dataclass(frozen=True)
class FeatureRanking:
    """Feature names ordered by descending score; ties keep column order."""

    method: str
    names: tuple[str, ...]
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.names) != len(self.scores):
            raise ContractError("names and scores must align")
        if any(not np.isfinite(s) for s in self.scores):
            raise ContractError("ranking scores must be finite")
        if any(a < b for a, b in zip(self.scores, self.scores[1:])):
            raise ContractError("ranking scores must be non-increasing")

    def top(self, n: int) -> list[str]:
        return select_top(self, n)


def rank_features(scores: np.ndarray, names: list[str], method: str) -> FeatureRanking:
    scores = np.asarray(scores, dtype=np.float64)
    if len(names) != scores.shape[0]:
        raise ContractError("one score per feature name required")
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(
        method=method,
        names=tuple(names[i] for i in order),
        scores=tuple(float(scores[i]) for i in order),
    )


def select_top(ranking: FeatureRanking, n: int) -> list[str]:
    """First n ranked feature names, order preserved."""
    if not 0 <= n <= len(ranking.names):
        raise ContractError(
            f"cannot select {n} of {len(ranking.names)} ranked features"
        )
    return list(ranking.names[:n])


def write_ranking(path: str | Path, ranking: FeatureRanking) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["rank", "feature", "score", "method"])
        for rank, (name, score) in enumerate(zip(ranking.names, ranking.scores), start=1):
            writer.writerow([rank, name, repr(score), ranking.method])


def read_ranking(path: str | Path) -> FeatureRanking:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ContractError(f"{path}: empty ranking file")
    return FeatureRanking(
        method=rows[0]["method"],
        names=tuple(row["feature"] for row in rows),
        scores=tuple(float(row["score"]) for row in rows),
    )


def _default_names(d: int) -> list[str]:
    return [f"f{i}" for i in range(d)]


class SymmetricUncertaintySelector(BaseEstimator, TransformerMixin):
    """Ranks features by symmetric uncertainty with the class labels."""

    def __init__(self, n_features: int = 10, bins: int = DEFAULT_BINS,
                 feature_names: list[str] | None = None):
        self.n_features = n_features
        self.bins = bins
        self.feature_names = feature_names

    def fit(self, X, y):
        X, y = check_X_y(X, y, require_both_classes=True)
        if self.n_features > X.shape[1]:
            raise ContractError(
                f"cannot select {self.n_features} of {X.shape[1]} features"
            )
        names = self.feature_names or _default_names(X.shape[1])
        scores = np.array(
            [symmetric_uncertainty(X[:, j], y, bins=self.bins) for j in range(X.shape[1])]
        )
        self.scores_ = scores
        self.ranking_ = rank_features(scores, names, method="su")
        self.support_indices_ = np.argsort(-scores, kind="stable")[: self.n_features]
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        return X[:, self.support_indices_]

    def selected_names(self) -> list[str]:
        return list(self.ranking_.names[: self.n_features])


class ReliefFSelector(BaseEstimator, TransformerMixin):
    """Ranks features by Relief-f weights."""

    def __init__(self, n_features: int = 10, k_neighbors: int = DEFAULT_K_NEIGHBORS,
                 sample_count: int | None = None, seed: int = 0,
                 feature_names: list[str] | None = None):
        self.n_features = n_features
        self.k_neighbors = k_neighbors
        self.sample_count = sample_count
        self.seed = seed
        self.feature_names = feature_names

    def fit(self, X, y):
        X, y = check_X_y(X, y, require_both_classes=True)
        if self.n_features > X.shape[1]:
            raise ContractError(
                f"cannot select {self.n_features} of {X.shape[1]} features"
            )
        names = self.feature_names or _default_names(X.shape[1])
        weights = relieff_weights(
            X, y, k_neighbors=self.k_neighbors,
            sample_count=self.sample_count, seed=self.seed,
        )
        self.scores_ = weights
        self.ranking_ = rank_features(weights, names, method="relieff")
        self.support_indices_ = np.argsort(-weights, kind="stable")[: self.n_features]
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        return X[:, self.support_indices_]

    def selected_names(self) -> list[str]:
        return list(self.ranking_.names[: self.n_features])


def make_selector(method: str, n_features: int, feature_names: list[str] | None = None,
                  bins: int = DEFAULT_BINS, k_neighbors: int = DEFAULT_K_NEIGHBORS,
                  seed: int = 0):
    """Selector factory keyed by the method tags used in configs and reports."""
    if method == "su":
        return SymmetricUncertaintySelector(
            n_features=n_features, bins=bins, feature_names=feature_names)
    if method == "relieff":
        return ReliefFSelector(
            n_features=n_features, k_neighbors=k_neighbors, seed=seed,
            feature_names=feature_names)
    raise ContractError(f"unknown selection method {method!r}")
