"""Input validation helpers used by the estimators and pipeline stages."""

from __future__ import annotations

import numpy as np

from .errors import ContractError


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ContractError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite values")
    return arr


def as_binary_labels(y, n_rows: int | None = None) -> np.ndarray:
    """Coerce labels to an int array of 0/1 (1 = pain)."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ContractError(f"labels must be 1-D, got shape {arr.shape}")
    values = set(np.unique(arr).tolist())
    if not values <= {0, 1}:
        raise ContractError(f"labels must be 0/1, got values {sorted(values)}")
    if n_rows is not None and arr.shape[0] != n_rows:
        raise ContractError(f"got {arr.shape[0]} labels for {n_rows} rows")
    return arr.astype(np.int64)


def check_X_y(X, y, require_both_classes: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Validate a feature matrix and its labels together."""
    X = as_float_matrix(X)
    y = as_binary_labels(y, n_rows=X.shape[0])
    if require_both_classes and len(np.unique(y)) < 2:
        raise ContractError("both classes must be present")
    return X, y


def check_matching_width(X: np.ndarray, expected: int, name: str = "X") -> None:
    if X.shape[1] != expected:
        raise ContractError(
            f"{name} has {X.shape[1]} features, model was trained on {expected}"
        )
