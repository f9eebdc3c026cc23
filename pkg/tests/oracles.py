"""Independent brute-force reference implementations used only by tests.

Everything here is written against the textual contracts, deliberately
avoiding the vectorized routes the package uses (im2col/GEMM, rank sums,
cumulative windows), so agreement is meaningful.
"""

from __future__ import annotations

import numpy as np


def rel_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Max absolute difference normalized by the expected tensor's scale."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = np.max(np.abs(expected))
    diff = np.max(np.abs(actual - expected))
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)


def conv2d_loops(x, kernel, bias, stride, pad):
    """Direct quadruple-loop convolution in float64. Small inputs only."""
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    h, w, c = x.shape
    k, n, _, _ = kernel.shape
    out_h = (h + 2 * pad - n) // stride + 1
    out_w = (w + 2 * pad - n) // stride + 1
    out = np.zeros((out_h, out_w, k))
    for oy in range(out_h):
        for ox in range(out_w):
            for f in range(k):
                acc = bias[f]
                for dy in range(n):
                    for dx in range(n):
                        iy = oy * stride - pad + dy
                        ix = ox * stride - pad + dx
                        if 0 <= iy < h and 0 <= ix < w:
                            for ch in range(c):
                                acc += x[iy, ix, ch] * kernel[f, dy, dx, ch]
                out[oy, ox, f] = acc
    return out


def conv2d_taps(x, kernel, bias, stride, pad):
    """Direct convolution by summing shifted slices per kernel tap (float64)."""
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    h, w, c = x.shape
    k, n, _, _ = kernel.shape
    out_h = (h + 2 * pad - n) // stride + 1
    out_w = (w + 2 * pad - n) // stride + 1
    padded = np.zeros((h + 2 * pad, w + 2 * pad, c))
    padded[pad:pad + h, pad:pad + w] = x
    out = np.zeros((out_h, out_w, k)) + bias
    for f in range(k):
        for dy in range(n):
            for dx in range(n):
                for ch in range(c):
                    sub = padded[dy:dy + out_h * stride:stride,
                                 dx:dx + out_w * stride:stride, ch]
                    out[:, :, f] += sub * kernel[f, dy, dx, ch]
    return out


def maxpool_loops(x, window, stride):
    x = np.asarray(x, dtype=np.float64)
    h, w, c = x.shape
    out_h = (h - window) // stride + 1
    out_w = (w - window) // stride + 1
    out = np.zeros((out_h, out_w, c))
    for oy in range(out_h):
        for ox in range(out_w):
            for ch in range(c):
                out[oy, ox, ch] = x[oy * stride:oy * stride + window,
                                    ox * stride:ox * stride + window, ch].max()
    return out


def fc_loops(x, weights, bias):
    x = np.asarray(x, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    out = np.zeros(weights.shape[0])
    for j in range(weights.shape[0]):
        acc = bias[j]
        for i in range(weights.shape[1]):
            acc += weights[j, i] * x[i]
        out[j] = acc
    return out


def lrn_loops(x, size, alpha, beta, bias):
    x = np.asarray(x, dtype=np.float64)
    h, w, c = x.shape
    half = size // 2
    out = np.zeros_like(x)
    for y in range(h):
        for xx in range(w):
            for ch in range(c):
                lo = max(0, ch - half)
                hi = min(c, ch + half + 1)
                s = 0.0
                for j in range(lo, hi):
                    s += x[y, xx, j] ** 2
                out[y, xx, ch] = x[y, xx, ch] / (bias + alpha * s) ** beta
    return out


# -- feature selection oracles ------------------------------------------------


def entropy_direct(symbols) -> float:
    symbols = list(symbols)
    total = len(symbols)
    h = 0.0
    for value in set(symbols):
        p = symbols.count(value) / total
        if p > 0:
            h -= p * np.log2(p)
    return h


def symmetric_uncertainty_direct(x_symbols, y_symbols) -> float:
    pairs = list(zip(list(x_symbols), list(y_symbols)))
    hx = entropy_direct(x_symbols)
    hy = entropy_direct(y_symbols)
    hxy = entropy_direct(pairs)
    if hx + hy == 0.0:
        return 0.0
    return 2.0 * (hx + hy - hxy) / (hx + hy)


def relieff_direct(X, y, k_neighbors):
    """Exhaustive Relief-f: full distance matrix, explicit hit/miss sets.

    Normalizes features to [0, 1], samples every instance, breaks distance
    ties by lower instance index. Returns per-feature weights.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n, d = X.shape
    ranges = X.max(axis=0) - X.min(axis=0)
    safe = np.where(ranges > 0, ranges, 1.0)
    Xn = (X - X.min(axis=0)) / safe
    Xn[:, ranges == 0] = 0.0

    weights = np.zeros(d)
    k = k_neighbors
    for i in range(n):
        dists = [(float(np.sqrt(np.sum((Xn[i] - Xn[j]) ** 2))), j) for j in range(n) if j != i]
        dists.sort()
        hits = [j for _, j in dists if y[j] == y[i]][:k]
        misses = [j for _, j in dists if y[j] != y[i]][:k]
        for f in range(d):
            for j in hits:
                weights[f] -= abs(Xn[i, f] - Xn[j, f]) / (n * k)
            for j in misses:
                weights[f] += abs(Xn[i, f] - Xn[j, f]) / (n * k)
    return weights


# -- evaluation oracles -------------------------------------------------------


def auc_pairwise(scores, labels) -> float:
    """O(P*N) pairwise counting with half credit for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def delong_components(scores, labels):
    """Structural components (V10 per positive, V01 per negative)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    v10 = np.zeros(len(pos))
    v01 = np.zeros(len(neg))
    for i, p in enumerate(pos):
        acc = 0.0
        for q in neg:
            acc += 1.0 if p > q else (0.5 if p == q else 0.0)
        v10[i] = acc / len(neg)
    for j, q in enumerate(neg):
        acc = 0.0
        for p in pos:
            acc += 1.0 if p > q else (0.5 if p == q else 0.0)
        v01[j] = acc / len(pos)
    return v10, v01
