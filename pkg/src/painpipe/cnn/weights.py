"""Binary weight files (PPWT) and validated weight sets.

File layout, little-endian throughout:

    magic   4 bytes  b"PPWT"
    version u32      1
    count   u32      number of entries (including "__mean__" when present)
    entry   repeated:
        name_len u16, name UTF-8
        tensor_count u8
        per tensor: rank u8, dims u32[rank], raw float32 data

Conv entries hold (kernel k x n x n x C, bias k); fc entries hold
(weights out x in, bias out). The optional trailing entry "__mean__"
holds one rank-1 tensor of 3 per-channel input means. Files round-trip
bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import WeightFormatError, WeightValidationError
from .architecture import ArchitectureSpec

MAGIC = b"PPWT"
VERSION = 1
MEAN_ENTRY = "__mean__"

_F32 = np.dtype("<f4")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=_F32)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class WeightSet:
    """Per-layer (kernel, bias) tensors plus optional input channel means."""

    entries: dict[str, tuple[np.ndarray, np.ndarray]]
    mean: np.ndarray | None = None

    def __post_init__(self) -> None:
        frozen = {
            name: (_freeze(kernel), _freeze(bias))
            for name, (kernel, bias) in self.entries.items()
        }
        object.__setattr__(self, "entries", frozen)
        if self.mean is not None:
            mean = _freeze(self.mean)
            if mean.shape != (3,):
                raise WeightValidationError(
                    f"channel mean must have shape (3,), got {mean.shape}"
                )
            object.__setattr__(self, "mean", mean)

    def channel_means(self) -> np.ndarray:
        return self.mean if self.mean is not None else np.zeros(3, dtype=np.float32)

    def validate(self, arch: ArchitectureSpec) -> None:
        """Check entry names and tensor shapes against an architecture."""
        expected = expected_shapes(arch)
        for name, (kernel_shape, bias_shape) in expected.items():
            if name not in self.entries:
                raise WeightValidationError(
                    f"layer {name!r}: missing from weight set"
                )
            kernel, bias = self.entries[name]
            if kernel.shape != kernel_shape:
                raise WeightValidationError(
                    f"layer {name!r}: kernel shape {kernel.shape}, expected {kernel_shape}"
                )
            if bias.shape != bias_shape:
                raise WeightValidationError(
                    f"layer {name!r}: bias shape {bias.shape}, expected {bias_shape}"
                )
        stray = set(self.entries) - set(expected)
        if stray:
            raise WeightValidationError(
                f"weight entries for non-parametric or unknown layers: {sorted(stray)}"
            )


def expected_shapes(arch: ArchitectureSpec) -> dict[str, tuple[tuple, tuple]]:
    """Map conv/fc layer name -> (kernel shape, bias shape) for ``arch``."""
    out: dict[str, tuple[tuple, tuple]] = {}
    shape: tuple[int, ...] = tuple(arch.input_shape)
    for layer in arch.layers:
        if layer.kind == "conv":
            out[layer.name] = (
                (layer.filters, layer.kernel, layer.kernel, shape[2]),
                (layer.filters,),
            )
        elif layer.kind == "fc":
            in_width = 1
            for dim in shape:
                in_width *= dim
            out[layer.name] = ((layer.width, in_width), (layer.width,))
        shape = arch.output_shape(layer.name)
    return out


def random_weight_set(
    arch: ArchitectureSpec, seed: int, include_mean: bool = False
) -> WeightSet:
    """Seeded random weights with fan-in scaling, for self-contained tests."""
    rng = np.random.default_rng(seed)
    entries: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name, (kernel_shape, bias_shape) in expected_shapes(arch).items():
        fan_in = int(np.prod(kernel_shape[1:]))
        std = np.float32(np.sqrt(2.0 / fan_in))
        kernel = rng.standard_normal(kernel_shape, dtype=np.float32) * std
        bias = rng.standard_normal(bias_shape, dtype=np.float32) * np.float32(0.01)
        entries[name] = (kernel, bias)
    mean = rng.uniform(100.0, 140.0, size=3).astype(np.float32) if include_mean else None
    return WeightSet(entries=entries, mean=mean)


# -- file IO ----------------------------------------------------------------


def _write_tensor(f, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr, dtype=_F32)
    f.write(struct.pack("<B", arr.ndim))
    f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    arr.tofile(f)


def save_weights(path: str | Path, weights: WeightSet, arch: ArchitectureSpec) -> None:
    """Validate against ``arch`` and write a PPWT file (entries in layer order)."""
    weights.validate(arch)
    names = [n for n in arch.layer_names() if n in weights.entries]
    count = len(names) + (1 if weights.mean is not None else 0)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, count))
        for name in names:
            kernel, bias = weights.entries[name]
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", 2))
            _write_tensor(f, kernel)
            _write_tensor(f, bias)
        if weights.mean is not None:
            encoded = MEAN_ENTRY.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", 1))
            _write_tensor(f, weights.mean)


def _read_exact(f, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise EOFError(f"truncated weight file: wanted {n} bytes, got {len(data)}")
    return data


def _read_tensor(f) -> np.ndarray:
    (rank,) = struct.unpack("<B", _read_exact(f, 1))
    dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank))
    n_items = 1
    for dim in dims:
        n_items *= dim
    arr = np.fromfile(f, dtype=_F32, count=n_items)
    if arr.size != n_items:
        raise EOFError(f"truncated weight file: wanted {n_items} floats, got {arr.size}")
    return arr.reshape(dims)


def read_weight_entries(path: str | Path) -> tuple[dict[str, list[np.ndarray]], np.ndarray | None]:
    """Parse a PPWT file into raw named tensor lists, without validation."""
    with open(path, "rb") as f:
        if _read_exact(f, 4) != MAGIC:
            raise WeightFormatError(f"{path}: bad magic, not a PPWT file")
        version, count = struct.unpack("<II", _read_exact(f, 8))
        if version != VERSION:
            raise WeightFormatError(f"{path}: unsupported version {version}")
        raw: dict[str, list[np.ndarray]] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2))
            name = _read_exact(f, name_len).decode("utf-8")
            (tensor_count,) = struct.unpack("<B", _read_exact(f, 1))
            raw[name] = [_read_tensor(f) for _ in range(tensor_count)]
    mean = None
    if MEAN_ENTRY in raw:
        tensors = raw.pop(MEAN_ENTRY)
        if len(tensors) != 1 or tensors[0].shape != (3,):
            raise WeightFormatError(f"{path}: malformed {MEAN_ENTRY} entry")
        mean = tensors[0]
    return raw, mean


def load_weights(path: str | Path, arch: ArchitectureSpec) -> WeightSet:
    """Read a PPWT file and validate it against ``arch``."""
    raw, mean = read_weight_entries(path)
    entries: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name, tensors in raw.items():
        if len(tensors) != 2:
            raise WeightValidationError(
                f"layer {name!r}: expected 2 tensors (kernel, bias), got {len(tensors)}"
            )
        entries[name] = (tensors[0], tensors[1])
    weights = WeightSet(entries=entries, mean=mean)
    weights.validate(arch)
    return weights
