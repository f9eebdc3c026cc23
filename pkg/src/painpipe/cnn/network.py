"""Single-pass network execution with pre/post-ReLU feature taps.

A tap names a layer and a phase. PreReLU taps return the layer's raw output
and require a relu layer immediately after it; PostReLU taps return the
output after that relu (or the raw output when no relu follows). Execution
stops once the deepest requested tap has been recorded, so the classifier
head is never evaluated during feature extraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ConfigurationError, ContractError, TapError
from . import layers as kernels
from .architecture import ArchitectureSpec
from .weights import WeightSet


class Phase(str, Enum):
    PRE_RELU = "PreReLU"
    POST_RELU = "PostReLU"


@dataclass(frozen=True)
class TapRequest:
    layer: str
    phase: Phase

    @classmethod
    def of(cls, layer: str, phase: str | Phase) -> "TapRequest":
        return cls(layer=layer, phase=Phase(phase))


def validate_taps(arch: ArchitectureSpec, taps: list[TapRequest]) -> None:
    for tap in taps:
        if tap.layer not in arch.layer_names():
            raise TapError(f"architecture {arch.name!r} has no layer {tap.layer!r}")
        if tap.phase is Phase.PRE_RELU and not arch.followed_by_relu(tap.layer):
            raise TapError(
                f"layer {tap.layer!r} is not followed by a relu; PreReLU tap is invalid"
            )


def _deepest_index(arch: ArchitectureSpec, taps: list[TapRequest]) -> int:
    deepest = -1
    for tap in taps:
        i = arch.index(tap.layer)
        if tap.phase is Phase.POST_RELU and arch.followed_by_relu(tap.layer):
            i += 1
        deepest = max(deepest, i)
    return deepest


def forward_with_taps(
    arch: ArchitectureSpec,
    weights: WeightSet,
    x: np.ndarray,
    taps: list[TapRequest],
) -> dict[TapRequest, np.ndarray]:
    """Run the network on one input tensor, returning flat vectors per tap."""
    weights.validate(arch)
    validate_taps(arch, taps)
    x = np.asarray(x, dtype=np.float32)
    if x.shape != tuple(arch.input_shape):
        raise ContractError(
            f"input shape {x.shape} does not match architecture input {arch.input_shape}"
        )
    wanted = set(taps)
    results: dict[TapRequest, np.ndarray] = {}
    stop_at = _deepest_index(arch, taps)

    current = x
    prev_name: str | None = None
    for i, layer in enumerate(arch.layers):
        if i > stop_at:
            break
        try:
            if layer.kind == "conv":
                kernel, bias = weights.entries[layer.name]
                current = kernels.conv2d(current, kernel, bias, layer.stride, layer.pad)
            elif layer.kind == "relu":
                current = kernels.relu(current)
            elif layer.kind == "maxpool":
                current = kernels.maxpool(current, layer.window, layer.stride)
            elif layer.kind == "lrn":
                current = kernels.lrn(current, layer.size, layer.alpha, layer.beta, layer.bias)
            elif layer.kind == "fc":
                kernel, bias = weights.entries[layer.name]
                current = kernels.fullyconnected(current.ravel(), kernel, bias)
            elif layer.kind == "softmax":
                current = kernels.softmax(current)
        except ConfigurationError as e:
            raise ConfigurationError(f"layer {layer.name!r}: {e}") from e

        if layer.kind == "relu" and prev_name is not None:
            tap = TapRequest(prev_name, Phase.POST_RELU)
            if tap in wanted:
                results[tap] = current.ravel().astype(np.float32, copy=True)
        pre = TapRequest(layer.name, Phase.PRE_RELU)
        if pre in wanted:
            results[pre] = current.ravel().astype(np.float32, copy=True)
        post = TapRequest(layer.name, Phase.POST_RELU)
        if post in wanted and not arch.followed_by_relu(layer.name):
            results[post] = current.ravel().astype(np.float32, copy=True)
        prev_name = layer.name
    return results
