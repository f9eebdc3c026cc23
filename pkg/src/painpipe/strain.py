"""Optical-strain features over a face-crop video.

For each consecutive frame pair a dense Horn-Schunck flow field is computed,
the symmetric part of its spatial gradient (optical strain) is reduced to a
per-pixel magnitude, and the mean magnitude is tracked per region: the whole
crop plus its four half-height, half-width quadrants. Peaks of each region's
time series are summarized into one mean-of-peaks feature per region, giving
the five-feature handcrafted descriptor.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError

REGION_NAMES = ("FaceAll", "FaceI", "FaceII", "FaceIII", "FaceIV")
FEATURE_NAMES = tuple(f"{name}_mean" for name in REGION_NAMES)

DEFAULT_ALPHA = 1.0
DEFAULT_ITERATIONS = 100
DEFAULT_MIN_PROMINENCE = 0.3
DEFAULT_MIN_SEPARATION = 5

# weighted 8-neighborhood used for the flow-field smoothness average
_AVG_KERNEL = np.array(
    [[1 / 12, 1 / 6, 1 / 12],
     [1 / 6, 0.0, 1 / 6],
     [1 / 12, 1 / 6, 1 / 12]]
)


def _neighbor_average(field: np.ndarray) -> np.ndarray:
    padded = np.pad(field, 1, mode="edge")
    out = np.zeros_like(field)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            weight = _AVG_KERNEL[dy + 1, dx + 1]
            if weight == 0.0:
                continue
            out += weight * padded[1 + dy:padded.shape[0] - 1 + dy,
                                   1 + dx:padded.shape[1] - 1 + dx]
    return out


def horn_schunck_flow(
    frame_a: np.ndarray,
    frame_b: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    iterations: int = DEFAULT_ITERATIONS,
) -> tuple[np.ndarray, np.ndarray]:
    """Dense flow (u, v) from ``frame_a`` to ``frame_b``.

    Classic global-smoothness scheme: brightness-constancy residuals are
    traded against a weighted-neighborhood Laplacian, iterated a fixed
    number of Jacobi steps. u is the horizontal (column) displacement,
    v the vertical (row) displacement, in pixels per frame.
    """
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ContractError("flow frames must be 2-D grayscale images")
    if a.shape != b.shape:
        raise ContractError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if iterations < 1:
        raise ContractError(f"iterations must be >= 1, got {iterations}")
    if alpha <= 0:
        raise ContractError(f"alpha must be > 0, got {alpha}")

    mid = 0.5 * (a + b)
    iy, ix = np.gradient(mid)
    it = b - a
    denom = alpha ** 2 + ix ** 2 + iy ** 2

    u = np.zeros_like(a)
    v = np.zeros_like(a)
    for _ in range(iterations):
        u_avg = _neighbor_average(u)
        v_avg = _neighbor_average(v)
        t = (ix * u_avg + iy * v_avg + it) / denom
        u = u_avg - ix * t
        v = v_avg - iy * t
    return u, v


def strain_magnitude_map(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-pixel magnitude of the symmetric displacement-gradient tensor.

    With e_xx = du/dx, e_yy = dv/dy, e_xy = (du/dy + dv/dx) / 2 from
    central differences, returns sqrt(e_xx^2 + e_yy^2 + 2 e_xy^2).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ContractError(f"flow component shapes differ: {u.shape} vs {v.shape}")
    if u.ndim != 2 or u.shape[0] < 2 or u.shape[1] < 2:
        raise ContractError(f"flow field must be at least 2x2, got {u.shape}")
    du_dy, du_dx = np.gradient(u)
    dv_dy, dv_dx = np.gradient(v)
    e_xy = 0.5 * (du_dy + dv_dx)
    return np.sqrt(du_dx ** 2 + dv_dy ** 2 + 2.0 * e_xy ** 2)


def region_slices(height: int, width: int) -> dict[str, tuple[slice, slice]]:
    """The whole crop plus quadrants that tile it exactly."""
    hy, hx = height // 2, width // 2
    return {
        "FaceAll": (slice(0, height), slice(0, width)),
        "FaceI": (slice(0, hy), slice(0, hx)),
        "FaceII": (slice(0, hy), slice(hx, width)),
        "FaceIII": (slice(hy, height), slice(0, hx)),
        "FaceIV": (slice(hy, height), slice(hx, width)),
    }


def strain_series(
    frames: list[np.ndarray],
    alpha: float = DEFAULT_ALPHA,
    iterations: int = DEFAULT_ITERATIONS,
) -> dict[str, np.ndarray]:
    """Per-region mean strain magnitude for each consecutive frame pair."""
    if len(frames) < 2:
        raise ContractError(f"need at least 2 frames, got {len(frames)}")
    shape = np.asarray(frames[0]).shape
    regions = region_slices(shape[0], shape[1])
    series = {name: np.zeros(len(frames) - 1) for name in regions}
    for t in range(len(frames) - 1):
        u, v = horn_schunck_flow(frames[t], frames[t + 1], alpha, iterations)
        magnitude = strain_magnitude_map(u, v)
        for name, (ys, xs) in regions.items():
            series[name][t] = float(magnitude[ys, xs].mean())
    return series


def detect_peaks(
    series: np.ndarray,
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
    min_separation: int = DEFAULT_MIN_SEPARATION,
) -> list[int]:
    """Strict local maxima of a series, thresholded and separation-filtered.

    A candidate must exceed both neighbors (series ends qualify against their
    single neighbor) and reach ``min_prominence * max(series)``. Candidates
    are admitted greedily by descending height (ties to the earlier index);
    a candidate within ``min_separation`` frames of an admitted peak is
    dropped. Returns sorted indices.
    """
    values = np.asarray(series, dtype=np.float64)
    if values.size == 0:
        raise ContractError("series must be non-empty")
    if values.size == 1:
        return []
    candidates = []
    for i in range(values.size):
        left_ok = i == 0 or values[i] > values[i - 1]
        right_ok = i == values.size - 1 or values[i] > values[i + 1]
        if left_ok and right_ok:
            candidates.append(i)
    threshold = min_prominence * values.max()
    candidates = [i for i in candidates if values[i] >= threshold]
    candidates.sort(key=lambda i: (-values[i], i))
    kept: list[int] = []
    for i in candidates:
        if all(abs(i - j) >= min_separation for j in kept):
            kept.append(i)
    return sorted(kept)


def peak_statistics(
    series: dict[str, np.ndarray],
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
    min_separation: int = DEFAULT_MIN_SEPARATION,
) -> dict[str, float]:
    """Mean peak strain per region; 0 when a region has no peaks."""
    features: dict[str, float] = {}
    for region in REGION_NAMES:
        values = np.asarray(series[region], dtype=np.float64)
        peaks = detect_peaks(values, min_prominence, min_separation)
        features[f"{region}_mean"] = float(values[peaks].mean()) if peaks else 0.0
    return features


def extract_strain_features(
    frames: list[np.ndarray],
    alpha: float = DEFAULT_ALPHA,
    iterations: int = DEFAULT_ITERATIONS,
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
    min_separation: int = DEFAULT_MIN_SEPARATION,
) -> dict[str, float]:
    """The canonical five-feature vector for one video's grayscale frames."""
    series = strain_series(frames, alpha=alpha, iterations=iterations)
    return peak_statistics(series, min_prominence, min_separation)
