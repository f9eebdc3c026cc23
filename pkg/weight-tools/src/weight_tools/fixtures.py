"""Reference-activation fixtures: the source ecosystem's ground truth.

For each fixture image the torch realization of the exported weights is run
and the requested tap vectors are stored as raw float32 next to a JSON
metadata file. An independent engine reading the same weight file should
reproduce these vectors to float32-roundoff levels.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .archconfig import ExportError, find_architecture
from .ppwt import MEAN_ENTRY, read_ppwt
from .torchnet import build_module, forward_taps, load_container_weights


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode != "RGB":
            img = img.convert("RGB")
        return np.asarray(img)


def emit_reference_activations(
    weights_path: str | Path,
    architecture: str,
    image_paths: list[Path],
    taps: list[tuple[str, str]],
    out_dir: str | Path,
) -> list[Path]:
    """Write one fixture (json + bin) per image; returns the json paths."""
    if not taps:
        raise ExportError("at least one tap is required")
    arch = find_architecture(architecture)
    entries, _ = read_ppwt(weights_path)
    mean = None
    if MEAN_ENTRY in entries:
        mean = entries.pop(MEAN_ENTRY)[0]
    modules, _ = build_module(arch)
    load_container_weights(modules, arch, entries)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for image_path in image_paths:
        image = load_image(image_path)
        if image.shape[:2] != tuple(arch.input_shape[:2]):
            raise ExportError(
                f"{image_path}: fixture image must be "
                f"{arch.input_shape[0]}x{arch.input_shape[1]}"
            )
        results = forward_taps(modules, arch, image, taps, mean)
        stem = Path(image_path).stem
        bin_path = out_dir / f"{stem}.bin"
        meta_path = out_dir / f"{stem}.json"
        offset = 0
        records = []
        with open(bin_path, "wb") as f:
            for tap in taps:
                vector = results[tap].astype("<f4")
                vector.tofile(f)
                records.append({"layer": tap[0], "phase": tap[1],
                                "offset": offset, "length": int(vector.size)})
                offset += vector.size
        meta = {
            "architecture": arch.name,
            "weights": str(weights_path),
            "image": str(image_path),
            "dtype": "<f4",
            "mean": None if mean is None else [float(v) for v in mean],
            "taps": records,
            "payload": bin_path.name,
        }
        with open(meta_path, "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
        written.append(meta_path)
    return written


def read_fixture(meta_path: str | Path) -> dict[tuple[str, str], np.ndarray]:
    """Load a fixture's tap vectors keyed by (layer, phase)."""
    meta_path = Path(meta_path)
    with open(meta_path, encoding="utf-8") as f:
        meta = json.load(f)
    payload = np.fromfile(meta_path.parent / meta["payload"], dtype=meta["dtype"])
    out = {}
    for record in meta["taps"]:
        start = record["offset"]
        out[(record["layer"], record["phase"])] = \
            payload[start:start + record["length"]]
    return out
