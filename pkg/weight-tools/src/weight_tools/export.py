"""Export jobs: produce validated PPWT files from a source or from a seed."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .archconfig import Architecture, ExportError, find_architecture
from .ppwt import MEAN_ENTRY, write_ppwt
from .torchnet import conv_kernel_from_torch, fc_weight_from_torch


@dataclass(frozen=True)
class ExportJob:
    architecture: str
    out_path: Path
    source_path: Path | None = None     # torch state-dict file; None = random mode
    seed: int = 0
    mean: tuple[float, float, float] | None = None
    fixture_images: tuple[Path, ...] = field(default_factory=tuple)
    taps: tuple[tuple[str, str], ...] = field(default_factory=tuple)


def random_entries(arch: Architecture, seed: int) -> dict[str, list[np.ndarray]]:
    """Seeded fan-in-scaled random tensors in container layout."""
    rng = np.random.default_rng(seed)
    entries: dict[str, list[np.ndarray]] = {}
    for name, (kernel_shape, bias_shape) in arch.parametric_shapes().items():
        fan_in = int(np.prod(kernel_shape[1:]))
        std = np.float32(np.sqrt(2.0 / fan_in))
        kernel = rng.standard_normal(kernel_shape, dtype=np.float32) * std
        bias = rng.standard_normal(bias_shape, dtype=np.float32) * np.float32(0.01)
        entries[name] = [kernel, bias]
    return entries


def entries_from_state_dict(arch: Architecture, source_path: Path) -> dict[str, list[np.ndarray]]:
    """Map a torch state dict (as saved by this tool's module keys) to container layout."""
    import torch

    state = torch.load(source_path, map_location="cpu", weights_only=True)
    entries: dict[str, list[np.ndarray]] = {}
    shape: tuple[int, ...] = arch.input_shape
    shapes = arch.shapes()
    for layer in arch.layers:
        if layer.kind in ("conv", "fc"):
            key = layer.name.replace(" ", "_").replace(".", "_")
            wkey, bkey = f"{key}.weight", f"{key}.bias"
            if wkey not in state or bkey not in state:
                raise ExportError(f"layer {layer.name!r}: {wkey} missing from source")
            weight = state[wkey].to(torch.float32)
            if layer.kind == "conv":
                kernel = conv_kernel_from_torch(weight)
            else:
                kernel = fc_weight_from_torch(weight, shape)
            entries[layer.name] = [kernel, state[bkey].to(torch.float32).numpy().copy()]
        shape = shapes[layer.name]
    return entries


def validate_entries(arch: Architecture, entries: dict[str, list[np.ndarray]]) -> None:
    expected = arch.parametric_shapes()
    for name, (kernel_shape, bias_shape) in expected.items():
        if name not in entries:
            raise ExportError(f"layer {name!r}: no exported tensors")
        kernel, bias = entries[name]
        if tuple(kernel.shape) != kernel_shape or tuple(bias.shape) != bias_shape:
            raise ExportError(
                f"layer {name!r}: exported shapes {kernel.shape}/{bias.shape} "
                f"disagree with the architecture ({kernel_shape}/{bias_shape})"
            )
    stray = set(entries) - set(expected)
    if stray:
        raise ExportError(f"source layers with no architecture slot: {sorted(stray)}")


def export_weights(job: ExportJob) -> Path:
    """Write the PPWT file for a job; returns the output path."""
    arch = find_architecture(job.architecture)
    if job.source_path is not None:
        entries = entries_from_state_dict(arch, job.source_path)
    else:
        entries = random_entries(arch, job.seed)
    validate_entries(arch, entries)

    order = [layer.name for layer in arch.layers if layer.name in entries]
    if job.mean is not None:
        entries = dict(entries)
        entries[MEAN_ENTRY] = [np.asarray(job.mean, dtype=np.float32)]
        order.append(MEAN_ENTRY)
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    write_ppwt(job.out_path, entries, order)
    return job.out_path
