"""Architecture config files: the JSON layer lists published by painpipe.

This package keeps its own minimal parser and shape propagation so the wire
format, not the toolkit's internals, is the contract between the two sides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

SUPPORTED_ARCHITECTURES = ("vgg-f", "vgg-m", "vgg-s", "vgg-face")


class ExportError(RuntimeError):
    """Raised when a job cannot be mapped onto the target architecture."""


@dataclass(frozen=True)
class Layer:
    name: str
    kind: str
    params: dict


@dataclass(frozen=True)
class Architecture:
    name: str
    input_shape: tuple[int, int, int]
    layers: tuple[Layer, ...]

    def layer_names(self) -> list[str]:
        return [layer.name for layer in self.layers]

    def shapes(self) -> dict[str, tuple[int, ...]]:
        """Output shape per layer, by the same floor rules the runtime uses."""
        shape: tuple[int, ...] = self.input_shape
        out: dict[str, tuple[int, ...]] = {}
        for layer in self.layers:
            p = layer.params
            if layer.kind == "conv":
                h, w, _ = shape
                oh = (h + 2 * p["pad"] - p["kernel"]) // p["stride"] + 1
                ow = (w + 2 * p["pad"] - p["kernel"]) // p["stride"] + 1
                if oh < 1 or ow < 1:
                    raise ExportError(f"layer {layer.name!r}: empty output")
                shape = (oh, ow, p["filters"])
            elif layer.kind == "maxpool":
                h, w, c = shape
                shape = ((h - p["window"]) // p["stride"] + 1,
                         (w - p["window"]) // p["stride"] + 1, c)
            elif layer.kind == "fc":
                shape = (p["width"],)
            out[layer.name] = shape
        return out

    def parametric_shapes(self) -> dict[str, tuple[tuple, tuple]]:
        """(kernel shape, bias shape) for every conv/fc layer."""
        out: dict[str, tuple[tuple, tuple]] = {}
        shape: tuple[int, ...] = self.input_shape
        shapes = self.shapes()
        for layer in self.layers:
            p = layer.params
            if layer.kind == "conv":
                out[layer.name] = (
                    (p["filters"], p["kernel"], p["kernel"], shape[2]),
                    (p["filters"],),
                )
            elif layer.kind == "fc":
                in_width = 1
                for dim in shape:
                    in_width *= dim
                out[layer.name] = ((p["width"], in_width), (p["width"],))
            shape = shapes[layer.name]
        return out


def load_architecture(path: str | Path) -> Architecture:
    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    layers = []
    for entry in obj["layers"]:
        params = {k: v for k, v in entry.items() if k not in ("name", "kind")}
        layers.append(Layer(name=entry["name"], kind=entry["kind"], params=params))
    return Architecture(
        name=obj["name"],
        input_shape=tuple(obj.get("input_shape", (224, 224, 3))),
        layers=tuple(layers),
    )


def default_config_dir() -> Path:
    """The primary toolkit's published architecture-config directory."""
    from importlib import resources

    return Path(str(resources.files("painpipe.cnn") / "configs"))


def find_architecture(name_or_path: str) -> Architecture:
    """Resolve a builtin name against the published config dir, or a file path."""
    if Path(name_or_path).is_file():
        return load_architecture(name_or_path)
    if name_or_path in SUPPORTED_ARCHITECTURES:
        candidate = default_config_dir() / f"{name_or_path}.json"
        if candidate.is_file():
            return load_architecture(candidate)
        raise ExportError(f"config for {name_or_path!r} not found at {candidate}")
    raise ExportError(
        f"unknown architecture {name_or_path!r}: pass one of "
        f"{SUPPORTED_ARCHITECTURES} or a config file path"
    )


def with_lrn_after_early_blocks(arch: Architecture, size: int = 5,
                                alpha: float = 1e-4, beta: float = 0.75,
                                bias: float = 2.0) -> Architecture:
    """An LRN-annotated variant: normalization after the first two relus.

    Real exported VGG-F/M/S checkpoints carry these layers even though the
    published defaults omit them; fidelity fixtures can include them this way.
    """
    layers: list[Layer] = []
    inserted = 0
    for layer in arch.layers:
        layers.append(layer)
        if layer.kind == "relu" and inserted < 2 and len(layers) >= 2 \
                and layers[-2].kind == "conv":
            inserted += 1
            layers.append(Layer(
                name=f"LRN {inserted}", kind="lrn",
                params={"size": size, "alpha": alpha, "beta": beta, "bias": bias},
            ))
    return Architecture(name=f"{arch.name}-lrn", input_shape=arch.input_shape,
                        layers=tuple(layers))


def save_architecture(arch: Architecture, path: str | Path) -> None:
    obj = {
        "name": arch.name,
        "input_shape": list(arch.input_shape),
        "layers": [{"name": layer.name, "kind": layer.kind, **layer.params}
                   for layer in arch.layers],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")
