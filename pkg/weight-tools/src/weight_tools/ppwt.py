"""Reader/writer for the PPWT weight container.

Layout (little-endian): magic "PPWT", u32 version=1, u32 entry count
(including the optional trailing "__mean__" entry), then per entry a u16
name length + UTF-8 name, u8 tensor count, and per tensor u8 rank,
u32 dims[rank], raw float32 data.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PPWT"
VERSION = 1
MEAN_ENTRY = "__mean__"

_F32 = np.dtype("<f4")


def write_ppwt(path: str | Path, entries: dict[str, list[np.ndarray]],
               order: list[str]) -> None:
    """Write entries in the given name order; order fixes the byte layout."""
    missing = set(order) - set(entries)
    if missing:
        raise ValueError(f"order names entries that do not exist: {sorted(missing)}")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(order)))
        for name in order:
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            tensors = entries[name]
            f.write(struct.pack("<B", len(tensors)))
            for tensor in tensors:
                arr = np.ascontiguousarray(tensor, dtype=_F32)
                f.write(struct.pack("<B", arr.ndim))
                f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
                arr.tofile(f)


def _read_exact(f, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise EOFError(f"truncated file: wanted {n} bytes, got {len(data)}")
    return data


def read_ppwt(path: str | Path) -> tuple[dict[str, list[np.ndarray]], list[str]]:
    """Parse a PPWT file; returns (entries, entry order)."""
    entries: dict[str, list[np.ndarray]] = {}
    order: list[str] = []
    with open(path, "rb") as f:
        if _read_exact(f, 4) != MAGIC:
            raise ValueError(f"{path}: bad magic, not a PPWT file")
        version, count = struct.unpack("<II", _read_exact(f, 8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2))
            name = _read_exact(f, name_len).decode("utf-8")
            (tensor_count,) = struct.unpack("<B", _read_exact(f, 1))
            tensors = []
            for _ in range(tensor_count):
                (rank,) = struct.unpack("<B", _read_exact(f, 1))
                dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank))
                n_items = 1
                for dim in dims:
                    n_items *= dim
                arr = np.fromfile(f, dtype=_F32, count=n_items)
                if arr.size != n_items:
                    raise EOFError(f"{path}: truncated tensor in entry {name!r}")
                tensors.append(arr.reshape(dims))
            entries[name] = tensors
            order.append(name)
    return entries, order
