"""The four classifiers: Gaussian naive Bayes, kNN, linear SVM, random forest.

Each model follows the fit/predict estimator convention and additionally
exposes ``score_samples`` returning one real value per instance, higher
meaning more pain-like, suitable for ROC analysis. Labels are 0 (no-pain)
and 1 (pain); a prediction is pain iff its score reaches the model's
decision threshold (0.5 for the probability-like models, 0 for the SVM
margin). The only exception is kNN with an even vote split, where the
documented tie rule (side with the nearer neighbor) decides the label.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ContractError, TrainingError, WeightFormatError
from .validation import as_float_matrix, check_matching_width, check_X_y

MODEL_MAGIC = b"PPMD"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float


def predict_one(model, row) -> Prediction:
    """Single-instance convenience wrapper over predict/score_samples."""
    X = np.asarray(row, dtype=np.float64).reshape(1, -1)
    return Prediction(label=int(model.predict(X)[0]),
                      score=float(model.score_samples(X)[0]))


class GaussianNaiveBayes(BaseEstimator):
    """Per-class feature Gaussians with empirical priors.

    Variances are floored at ``1e-9 * (global feature variance + 1e-12)`` so
    constant features yield equal (and thus cancelling) likelihoods instead
    of singular ones. Scores are posterior pain probabilities.
    """

    threshold = 0.5

    def fit(self, X, y):
        X, y = check_X_y(X, y, require_both_classes=True)
        n, d = X.shape
        floor = 1e-9 * (X.var(axis=0) + 1e-12)
        self.priors_ = np.array([(y == c).mean() for c in (0, 1)])
        self.means_ = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
        self.vars_ = np.maximum(
            np.stack([X[y == c].var(axis=0) for c in (0, 1)]), floor
        )
        self.n_features_in_ = d
        return self

    def _log_joint(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros((X.shape[0], 2))
        for c in (0, 1):
            mean, var = self.means_[c], self.vars_[c]
            log_pdf = -0.5 * (np.log(2 * np.pi * var) + (X - mean) ** 2 / var)
            out[:, c] = np.log(self.priors_[c]) + log_pdf.sum(axis=1)
        return out

    def score_samples(self, X) -> np.ndarray:
        X = as_float_matrix(X)
        check_matching_width(X, self.n_features_in_)
        lj = self._log_joint(X)
        # posterior of class 1 via the stable two-class logistic form
        return 1.0 / (1.0 + np.exp(np.clip(lj[:, 0] - lj[:, 1], -700, 700)))

    def predict(self, X) -> np.ndarray:
        return (self.score_samples(X) >= self.threshold).astype(np.int64)


class KNearestNeighbors(BaseEstimator):
    """Lazy Euclidean kNN; the training set is stored and queried at predict time.

    Distance ties break toward the lower training-instance index; exact vote
    ties (even k only) take the nearer neighbor's class. Scores are pain-vote
    fractions.
    """

    threshold = 0.5

    def __init__(self, k: int = 3):
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if not 1 <= self.k <= X.shape[0]:
            raise ContractError(f"k={self.k} invalid for {X.shape[0]} training instances")
        self.X_ = X
        self.y_ = y
        self.n_features_in_ = X.shape[1]
        return self

    def _neighbors(self, x: np.ndarray) -> np.ndarray:
        dist = np.sqrt(((self.X_ - x) ** 2).sum(axis=1))
        return np.argsort(dist, kind="stable")[: self.k]

    def score_samples(self, X) -> np.ndarray:
        X = as_float_matrix(X)
        check_matching_width(X, self.n_features_in_)
        return np.array([self.y_[self._neighbors(x)].mean() for x in X])

    def predict(self, X) -> np.ndarray:
        X = as_float_matrix(X)
        check_matching_width(X, self.n_features_in_)
        labels = np.zeros(X.shape[0], dtype=np.int64)
        for i, x in enumerate(X):
            nn = self._neighbors(x)
            score = self.y_[nn].mean()
            if score == 0.5:
                labels[i] = self.y_[nn[0]]
            else:
                labels[i] = int(score > 0.5)
        return labels


class LinearSVM(BaseEstimator):
    """Soft-margin linear SVM trained by dual coordinate descent.

    The bias is learned through a constant augmented feature (so it is
    lightly regularized like the rest of the weight vector). Training stops
    when the relative duality gap drops below ``tol``; exceeding ``max_iter``
    epochs raises TrainingError with the residual gap. Scores are signed
    margins w.x + b, positive on the pain side.
    """

    threshold = 0.0

    def __init__(self, c: float = 1.0, tol: float = 1e-4, max_iter: int = 2000):
        self.c = c
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, require_both_classes=True)
        if self.c <= 0:
            raise ContractError(f"c must be > 0, got {self.c}")
        n, d = X.shape
        signs = 2.0 * y - 1.0
        Xa = np.column_stack([X, np.ones(n)])
        q_diag = (Xa ** 2).sum(axis=1)
        alpha = np.zeros(n)
        w = np.zeros(d + 1)

        gap = np.inf
        for _ in range(self.max_iter):
            for i in range(n):
                g = signs[i] * (w @ Xa[i]) - 1.0
                if (alpha[i] <= 0 and g >= 0) or (alpha[i] >= self.c and g <= 0):
                    continue
                new = min(max(alpha[i] - g / q_diag[i], 0.0), self.c)
                if new != alpha[i]:
                    w += (new - alpha[i]) * signs[i] * Xa[i]
                    alpha[i] = new
            margins = signs * (Xa @ w)
            primal = 0.5 * (w @ w) + self.c * np.maximum(0.0, 1.0 - margins).sum()
            dual = alpha.sum() - 0.5 * (w @ w)
            gap = primal - dual
            if gap <= self.tol * max(1.0, abs(primal)):
                break
        else:
            raise TrainingError(
                f"svm did not converge in {self.max_iter} epochs; duality gap {gap:.3e}"
            )
        self.coef_ = w[:-1]
        self.intercept_ = float(w[-1])
        self.n_features_in_ = d
        return self

    def score_samples(self, X) -> np.ndarray:
        X = as_float_matrix(X)
        check_matching_width(X, self.n_features_in_)
        return X @ self.coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return (self.score_samples(X) >= self.threshold).astype(np.int64)


class _Tree:
    """Binary decision tree stored as parallel node arrays."""

    __slots__ = ("feature", "threshold", "left", "right", "label")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.label: list[int] = []

    def add_leaf(self, label: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(int(label))
        return len(self.feature) - 1

    def add_split(self, feature: int, threshold: float) -> int:
        self.feature.append(int(feature))
        self.threshold.append(float(threshold))
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(-1)
        return len(self.feature) - 1

    def predict_one(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return self.label[node]

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {
            "feature": np.asarray(self.feature, dtype=np.int64),
            "threshold": np.asarray(self.threshold, dtype=np.float64),
            "left": np.asarray(self.left, dtype=np.int64),
            "right": np.asarray(self.right, dtype=np.int64),
            "label": np.asarray(self.label, dtype=np.int64),
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "_Tree":
        tree = cls()
        tree.feature = [int(v) for v in arrays["feature"]]
        tree.threshold = [float(v) for v in arrays["threshold"]]
        tree.left = [int(v) for v in arrays["left"]]
        tree.right = [int(v) for v in arrays["right"]]
        tree.label = [int(v) for v in arrays["label"]]
        return tree


def _gini(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    p = y.mean()
    return 2.0 * p * (1.0 - p)


def _majority(y: np.ndarray) -> int:
    ones = int(y.sum())
    zeros = y.size - ones
    return 1 if ones > zeros else 0


class RandomForest(BaseEstimator):
    """Bagged Gini trees with sqrt(d) random feature candidates per node.

    Trees grow until pure (or until no candidate split separates the node)
    with minimum leaf size 1. Per-tree RNG streams are spawned from the
    forest seed, so the ensemble is bit-reproducible and independent of tree
    training order. Scores are the fraction of trees voting pain.
    """

    threshold = 0.5

    def __init__(self, n_trees: int = 100, seed: int = 0):
        self.n_trees = n_trees
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.n_trees < 1:
            raise ContractError(f"need at least one tree, got {self.n_trees}")
        n, d = X.shape
        n_candidates = max(1, int(np.floor(np.sqrt(d))))
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        self.trees_ = []
        for tree_seed in seeds:
            rng = np.random.default_rng(tree_seed)
            sample = rng.integers(0, n, size=n)
            tree = _Tree()
            self._grow(tree, X[sample], y[sample], rng, n_candidates)
            self.trees_.append(tree)
        self.n_features_in_ = d
        return self

    def _grow(self, tree: _Tree, X: np.ndarray, y: np.ndarray,
              rng: np.random.Generator, n_candidates: int) -> int:
        if np.all(y == y[0]) or y.size < 2:
            return tree.add_leaf(y[0] if y.size else 0)
        features = rng.choice(X.shape[1], size=n_candidates, replace=False)
        parent = _gini(y)
        best_gain = 0.0
        best: tuple[int, float] | None = None
        for f in features:
            values = np.unique(X[:, f])
            for lo, hi in zip(values[:-1], values[1:]):
                thr = 0.5 * (lo + hi)
                mask = X[:, f] <= thr
                n_left = int(mask.sum())
                if n_left == 0 or n_left == y.size:
                    continue
                gain = parent - (
                    n_left * _gini(y[mask]) + (y.size - n_left) * _gini(y[~mask])
                ) / y.size
                if gain > best_gain:
                    best_gain = gain
                    best = (int(f), thr)
        if best is None:
            return tree.add_leaf(_majority(y))
        f, thr = best
        node = tree.add_split(f, thr)
        mask = X[:, f] <= thr
        tree.left[node] = self._grow(tree, X[mask], y[mask], rng, n_candidates)
        tree.right[node] = self._grow(tree, X[~mask], y[~mask], rng, n_candidates)
        return node

    def score_samples(self, X) -> np.ndarray:
        X = as_float_matrix(X)
        check_matching_width(X, self.n_features_in_)
        votes = np.zeros(X.shape[0])
        for tree in self.trees_:
            votes += [tree.predict_one(x) for x in X]
        return votes / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return (self.score_samples(X) >= self.threshold).astype(np.int64)


CLASSIFIER_KINDS = ("nb", "knn", "svm", "rf")


def make_classifier(kind: str, params: dict | None = None):
    """Classifier factory keyed by the kind tags used in configs and reports."""
    params = dict(params or {})
    if kind == "nb":
        return GaussianNaiveBayes(**params)
    if kind == "knn":
        return KNearestNeighbors(**params)
    if kind == "svm":
        return LinearSVM(**params)
    if kind == "rf":
        return RandomForest(**params)
    raise ContractError(f"unknown classifier kind {kind!r}; expected {CLASSIFIER_KINDS}")


# -- persistence (PPMD container) ---------------------------------------------

_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i8")}
_CODE_FOR_KIND = {"f4": 1, "f8": 2, "i8": 3}


def _kind_of(model) -> str:
    return {GaussianNaiveBayes: "nb", KNearestNeighbors: "knn",
            LinearSVM: "svm", RandomForest: "rf"}[type(model)]


def _model_state(model) -> dict[str, dict[str, np.ndarray]]:
    kind = _kind_of(model)
    if kind == "nb":
        return {"gaussians": {"priors": model.priors_, "means": model.means_,
                              "vars": model.vars_}}
    if kind == "knn":
        return {"training_set": {"X": model.X_, "y": model.y_}}
    if kind == "svm":
        return {"hyperplane": {"coef": model.coef_,
                               "intercept": np.array([model.intercept_])}}
    entries = {}
    for t, tree in enumerate(model.trees_):
        entries[f"tree_{t:05d}"] = tree.as_arrays()
    return entries


def save_model(path: str | Path, model, feature_names: list[str]) -> None:
    """Write a trained model as a PPMD v1 container (bit-exact roundtrip)."""
    kind = _kind_of(model)
    header = {
        "kind": kind,
        "params": model.get_params(),
        "feature_names": list(feature_names),
        "threshold": model.threshold,
        "n_features": model.n_features_in_,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    state = _model_state(model)
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<II", MODEL_VERSION, len(header_bytes)))
        f.write(header_bytes)
        f.write(struct.pack("<I", len(state)))
        for name in sorted(state):
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            tensors = state[name]
            f.write(struct.pack("<B", len(tensors)))
            for key in sorted(tensors):
                arr = np.ascontiguousarray(tensors[key])
                code = _CODE_FOR_KIND[arr.dtype.str[1:]]
                key_bytes = key.encode("utf-8")
                f.write(struct.pack("<H", len(key_bytes)))
                f.write(key_bytes)
                f.write(struct.pack("<BB", code, arr.ndim))
                f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
                arr.tofile(f)


def _read_exact(f, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise EOFError(f"truncated model file: wanted {n} bytes, got {len(data)}")
    return data


def load_model(path: str | Path):
    """Reconstruct a trained model from a PPMD container.

    Returns (model, feature_names).
    """
    with open(path, "rb") as f:
        if _read_exact(f, 4) != MODEL_MAGIC:
            raise WeightFormatError(f"{path}: bad magic, not a PPMD file")
        version, header_len = struct.unpack("<II", _read_exact(f, 8))
        if version != MODEL_VERSION:
            raise WeightFormatError(f"{path}: unsupported version {version}")
        header = json.loads(_read_exact(f, header_len).decode("utf-8"))
        (entry_count,) = struct.unpack("<I", _read_exact(f, 4))
        state: dict[str, dict[str, np.ndarray]] = {}
        for _ in range(entry_count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2))
            name = _read_exact(f, name_len).decode("utf-8")
            (tensor_count,) = struct.unpack("<B", _read_exact(f, 1))
            tensors: dict[str, np.ndarray] = {}
            for _ in range(tensor_count):
                (key_len,) = struct.unpack("<H", _read_exact(f, 2))
                key = _read_exact(f, key_len).decode("utf-8")
                code, rank = struct.unpack("<BB", _read_exact(f, 2))
                if code not in _DTYPE_CODES:
                    raise WeightFormatError(f"{path}: unknown dtype code {code}")
                dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank))
                n_items = int(np.prod(dims)) if rank else 1
                arr = np.fromfile(f, dtype=_DTYPE_CODES[code], count=n_items)
                if arr.size != n_items:
                    raise EOFError(f"{path}: truncated tensor {name}/{key}")
                tensors[key] = arr.reshape(dims)
            state[name] = tensors

    kind = header["kind"]
    model = make_classifier(kind, header["params"])
    model.n_features_in_ = int(header["n_features"])
    if kind == "nb":
        g = state["gaussians"]
        model.priors_, model.means_, model.vars_ = g["priors"], g["means"], g["vars"]
    elif kind == "knn":
        t = state["training_set"]
        model.X_, model.y_ = t["X"], t["y"]
    elif kind == "svm":
        h = state["hyperplane"]
        model.coef_ = h["coef"]
        model.intercept_ = float(h["intercept"][0])
    else:
        model.trees_ = [_Tree.from_arrays(state[name]) for name in sorted(state)]
    return model, list(header["feature_names"])
