"""Forward-only inference kernels for VGG-style networks.

Activations are dense float32 arrays, channel-last for images (H x W x C) and
flat vectors for fully connected stages. Convolution is implemented as
im2col + GEMM; shapes follow the floor formula
``out = floor((in + 2*pad - kernel) / stride) + 1`` with zero padding.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError


def _as_f32(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float32)


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def conv2d(
    x: np.ndarray,
    kernel: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    pad: int = 0,
) -> np.ndarray:
    """Cross-correlate ``x`` (H x W x C) with ``kernel`` (k x n x n x C).

    Returns an H' x W' x k feature map. Zero padding of ``pad`` pixels is
    applied on every spatial side; windows that would not fit are dropped
    (floor shape rule).
    """
    x = _as_f32(x)
    kernel = _as_f32(kernel)
    bias = _as_f32(bias)
    if x.ndim != 3:
        raise ConfigurationError(f"conv input must be H x W x C, got shape {x.shape}")
    if kernel.ndim != 4 or kernel.shape[1] != kernel.shape[2]:
        raise ConfigurationError(
            f"conv kernel must be k x n x n x C, got shape {kernel.shape}"
        )
    h, w, c = x.shape
    k, n, _, kc = kernel.shape
    if kc != c:
        raise ConfigurationError(
            f"kernel expects {kc} input channels, input has {c}"
        )
    if bias.shape != (k,):
        raise ConfigurationError(f"bias must have shape ({k},), got {bias.shape}")
    if stride < 1 or pad < 0:
        raise ConfigurationError(f"invalid stride/pad: {stride}/{pad}")
    out_h = conv_output_size(h, n, stride, pad)
    out_w = conv_output_size(w, n, stride, pad)
    if out_h < 1 or out_w < 1:
        raise ConfigurationError(
            f"kernel {n} with stride {stride}, pad {pad} does not fit input {h}x{w}"
        )

    if pad > 0:
        x = np.pad(x, ((pad, pad), (pad, pad), (0, 0)))
    # windows: (H*, W*, C, n, n) view, strided down to the requested outputs
    windows = np.lib.stride_tricks.sliding_window_view(x, (n, n), axis=(0, 1))
    windows = windows[::stride, ::stride]
    # row-major patch layout (dy, dx, c) to match the kernel tensor layout
    patches = windows.transpose(0, 1, 3, 4, 2).reshape(out_h * out_w, n * n * c)
    weights = kernel.reshape(k, n * n * c)
    out = patches @ weights.T
    out += bias
    return out.reshape(out_h, out_w, k)


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x); shape preserved."""
    return np.maximum(_as_f32(x), np.float32(0.0))


def maxpool(x: np.ndarray, window: int, stride: int) -> np.ndarray:
    """Max pooling over ``window`` x ``window`` regions of an H x W x C map.

    Windows that would straddle the boundary are dropped (floor shape rule,
    no partial windows).
    """
    x = _as_f32(x)
    if x.ndim != 3:
        raise ConfigurationError(f"pool input must be H x W x C, got shape {x.shape}")
    h, w, _ = x.shape
    if window > h or window > w:
        raise ConfigurationError(f"pool window {window} exceeds input {h}x{w}")
    if stride < 1:
        raise ConfigurationError(f"invalid pool stride: {stride}")
    windows = np.lib.stride_tricks.sliding_window_view(x, (window, window), axis=(0, 1))
    windows = windows[::stride, ::stride]
    return windows.max(axis=(3, 4))


def fullyconnected(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map ``weights @ x + bias`` for a flat input vector."""
    x = _as_f32(x).ravel()
    weights = _as_f32(weights)
    bias = _as_f32(bias)
    if weights.ndim != 2:
        raise ConfigurationError(f"fc weights must be 2-D, got shape {weights.shape}")
    out_dim, in_dim = weights.shape
    if x.shape[0] != in_dim:
        raise ConfigurationError(
            f"fc expects input of length {in_dim}, got {x.shape[0]}"
        )
    if bias.shape != (out_dim,):
        raise ConfigurationError(f"fc bias must have shape ({out_dim},), got {bias.shape}")
    return weights @ x + bias


def softmax(x: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over a flat vector."""
    x = _as_f32(x).ravel()
    if x.size == 0:
        raise ConfigurationError("softmax input must be non-empty")
    shifted = x - x.max()
    e = np.exp(shifted)
    return e / e.sum()


def lrn(
    x: np.ndarray,
    size: int,
    alpha: float,
    beta: float,
    bias: float,
) -> np.ndarray:
    """Across-channel local response normalization.

    ``out[y, x, c] = in[y, x, c] / (bias + alpha * sum_j in[y, x, j]^2) ** beta``
    where j ranges over the ``size`` channels centered on c, clipped to the
    valid channel range (no division of alpha by the window size).
    """
    x = _as_f32(x)
    if x.ndim != 3:
        raise ConfigurationError(f"lrn input must be H x W x C, got shape {x.shape}")
    if size < 1 or size % 2 == 0:
        raise ConfigurationError(f"lrn size must be odd and >= 1, got {size}")
    c = x.shape[2]
    half = size // 2
    sq = x.astype(np.float64) ** 2
    # cumulative sum along channels gives O(C) windowed sums
    csum = np.concatenate(
        [np.zeros(x.shape[:2] + (1,)), np.cumsum(sq, axis=2)], axis=2
    )
    lo = np.maximum(np.arange(c) - half, 0)
    hi = np.minimum(np.arange(c) + half + 1, c)
    window_sums = csum[..., hi] - csum[..., lo]
    denom = (bias + alpha * window_sums) ** beta
    return (x / denom).astype(np.float32)
