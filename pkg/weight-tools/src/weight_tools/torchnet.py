"""Torch realization of an architecture config, with layout conversion.

The weight container stores conv kernels channel-last (k, n, n, C) and fc
weights over row-major flattened H x W x C inputs; torch wants (k, C, n, n)
and C x H x W flattening. The permutations live here, in both directions,
so reference activations exercise exactly the mapping the exporter writes.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .archconfig import Architecture, ExportError


def conv_kernel_to_torch(kernel: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(kernel.transpose(0, 3, 1, 2)))


def conv_kernel_from_torch(weight: torch.Tensor) -> np.ndarray:
    return weight.detach().numpy().transpose(0, 2, 3, 1).copy()


def fc_weight_to_torch(weight: np.ndarray, input_shape: tuple[int, ...]) -> torch.Tensor:
    """Permute fc columns from H*W*C order to torch's C*H*W flatten order."""
    if len(input_shape) == 3:
        h, w, c = input_shape
        out = weight.reshape(weight.shape[0], h, w, c).transpose(0, 3, 1, 2)
        weight = out.reshape(weight.shape[0], h * w * c)
    return torch.from_numpy(np.ascontiguousarray(weight))


def fc_weight_from_torch(weight: torch.Tensor, input_shape: tuple[int, ...]) -> np.ndarray:
    arr = weight.detach().numpy()
    if len(input_shape) == 3:
        h, w, c = input_shape
        arr = arr.reshape(arr.shape[0], c, h, w).transpose(0, 2, 3, 1)
        arr = arr.reshape(arr.shape[0], h * w * c)
    return arr.copy()


def build_module(arch: Architecture) -> tuple[nn.ModuleDict, list[str]]:
    """Named torch modules in layer order (dropout-free, inference semantics)."""
    modules = nn.ModuleDict()
    shape: tuple[int, ...] = arch.input_shape
    shapes = arch.shapes()
    order = []
    for layer in arch.layers:
        p = layer.params
        key = layer.name.replace(" ", "_").replace(".", "_")
        if layer.kind == "conv":
            modules[key] = nn.Conv2d(shape[2], p["filters"], p["kernel"],
                                     stride=p["stride"], padding=p["pad"])
        elif layer.kind == "relu":
            modules[key] = nn.ReLU()
        elif layer.kind == "maxpool":
            modules[key] = nn.MaxPool2d(p["window"], stride=p["stride"])
        elif layer.kind == "fc":
            in_width = 1
            for dim in shape:
                in_width *= dim
            modules[key] = nn.Linear(in_width, p["width"])
        elif layer.kind == "lrn":
            # torch divides alpha by the window size internally; the container
            # convention does not, so pre-multiply to cancel it
            modules[key] = nn.LocalResponseNorm(p["size"], alpha=p["alpha"] * p["size"],
                                                beta=p["beta"], k=p["bias"])
        elif layer.kind == "softmax":
            modules[key] = nn.Softmax(dim=1)
        else:
            raise ExportError(f"layer {layer.name!r}: unsupported kind {layer.kind!r}")
        order.append(key)
        shape = shapes[layer.name]
    modules.eval()
    return modules, order


def load_container_weights(modules: nn.ModuleDict, arch: Architecture,
                           entries: dict[str, list[np.ndarray]]) -> None:
    """Copy channel-last container tensors into the torch modules."""
    shape: tuple[int, ...] = arch.input_shape
    shapes = arch.shapes()
    with torch.no_grad():
        for layer in arch.layers:
            key = layer.name.replace(" ", "_").replace(".", "_")
            if layer.kind in ("conv", "fc"):
                if layer.name not in entries:
                    raise ExportError(f"layer {layer.name!r}: missing weights")
                kernel, bias = entries[layer.name]
                module = modules[key]
                if layer.kind == "conv":
                    module.weight.copy_(conv_kernel_to_torch(kernel))
                else:
                    module.weight.copy_(fc_weight_to_torch(kernel, shape))
                module.bias.copy_(torch.from_numpy(np.ascontiguousarray(bias)))
            shape = shapes[layer.name]


@torch.no_grad()
def forward_taps(modules: nn.ModuleDict, arch: Architecture, image: np.ndarray,
                 taps: list[tuple[str, str]], mean: np.ndarray | None) -> dict[tuple[str, str], np.ndarray]:
    """Run the torch graph on one H x W x 3 uint8 image, collecting taps.

    Taps are (layer name, phase) with phase PreReLU or PostReLU, mirroring
    the runtime's semantics: PostReLU reads after the relu that follows the
    named layer; the flattening of 3-D activations is H x W x C row-major.
    """
    x = image.astype(np.float32)
    if mean is not None:
        x = x - mean.astype(np.float32)
    tensor = torch.from_numpy(x.transpose(2, 0, 1)[None, :])  # 1 x C x H x W

    wanted = set(taps)
    names = arch.layer_names()
    kinds = {layer.name: layer.kind for layer in arch.layers}
    results: dict[tuple[str, str], np.ndarray] = {}

    def flat(t: torch.Tensor) -> np.ndarray:
        arr = t.detach().numpy()
        if arr.ndim == 4:  # 1 x C x H x W -> H x W x C order
            arr = arr[0].transpose(1, 2, 0)
        else:
            arr = arr[0]
        return arr.reshape(-1).astype(np.float32)

    current = tensor
    previous = None
    for i, layer in enumerate(arch.layers):
        key = layer.name.replace(" ", "_").replace(".", "_")
        if layer.kind == "fc" and current.dim() == 4:
            current = torch.flatten(current, start_dim=1)
        current = modules[key](current)
        if layer.kind == "relu" and previous is not None:
            if (previous, "PostReLU") in wanted:
                results[(previous, "PostReLU")] = flat(current)
        if (layer.name, "PreReLU") in wanted:
            results[(layer.name, "PreReLU")] = flat(current)
        followed_by_relu = i + 1 < len(names) and kinds[names[i + 1]] == "relu"
        if (layer.name, "PostReLU") in wanted and not followed_by_relu:
            results[(layer.name, "PostReLU")] = flat(current)
        previous = layer.name
        if set(results) >= wanted:
            break
    missing = wanted - set(results)
    if missing:
        raise ExportError(f"taps not reachable in source graph: {sorted(missing)}")
    return results
