"""Network architecture descriptions and shape propagation.

An architecture is an ordered list of named layers (conv / relu / maxpool /
lrn / fc / softmax) applied to a fixed 224 x 224 x 3 input. Four defaults
(vgg-f, vgg-m, vgg-s, vgg-face) ship as JSON files in ``configs/``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..errors import ConfigurationError

LAYER_KINDS = ("conv", "relu", "maxpool", "lrn", "fc", "softmax")
BUILTIN_NAMES = ("vgg-f", "vgg-m", "vgg-s", "vgg-face")


@dataclass(frozen=True)
class LayerSpec:
    """One layer of an architecture; parameter fields depend on ``kind``."""

    name: str
    kind: str
    filters: int = 0          # conv: number of output channels
    kernel: int = 0           # conv: spatial kernel size (n x n)
    stride: int = 1           # conv / maxpool
    pad: int = 0              # conv
    window: int = 0           # maxpool
    width: int = 0            # fc: output width
    size: int = 5             # lrn window (channels)
    alpha: float = 1e-4       # lrn
    beta: float = 0.75        # lrn
    bias: float = 2.0         # lrn

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ConfigurationError(f"layer {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "conv":
            if self.filters < 1 or self.kernel < 1:
                raise ConfigurationError(f"layer {self.name!r}: bad conv parameters")
            if self.stride < 1 or self.pad < 0:
                raise ConfigurationError(f"layer {self.name!r}: bad stride/pad")
        elif self.kind == "maxpool":
            if self.window < 1 or self.stride < 1:
                raise ConfigurationError(f"layer {self.name!r}: bad pool parameters")
        elif self.kind == "fc":
            if self.width < 1:
                raise ConfigurationError(f"layer {self.name!r}: fc width must be >= 1")
        elif self.kind == "lrn":
            if self.size < 1 or self.size % 2 == 0:
                raise ConfigurationError(f"layer {self.name!r}: lrn size must be odd")

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "kind": self.kind}
        if self.kind == "conv":
            out.update(filters=self.filters, kernel=self.kernel,
                       stride=self.stride, pad=self.pad)
        elif self.kind == "maxpool":
            out.update(window=self.window, stride=self.stride)
        elif self.kind == "fc":
            out.update(width=self.width)
        elif self.kind == "lrn":
            out.update(size=self.size, alpha=self.alpha, beta=self.beta, bias=self.bias)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "LayerSpec":
        known = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        extra = set(obj) - set(known)
        if extra:
            raise ConfigurationError(
                f"layer {obj.get('name', '?')!r}: unknown fields {sorted(extra)}"
            )
        return cls(**known)


@dataclass(frozen=True)
class ArchitectureSpec:
    """Ordered, validated layer list with a fixed input shape."""

    name: str
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int] = (224, 224, 3)
    _shapes: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ConfigurationError(f"duplicate layer names: {dupes}")
        object.__setattr__(self, "_shapes", self._propagate())

    def _propagate(self) -> dict[str, tuple[int, ...]]:
        """Run every layer's shape rule; raises if any dimension collapses."""
        shape: tuple[int, ...] = tuple(self.input_shape)
        out: dict[str, tuple[int, ...]] = {}
        for layer in self.layers:
            if layer.kind == "conv":
                if len(shape) != 3:
                    raise ConfigurationError(f"layer {layer.name!r}: conv needs a 3-D input")
                h, w, c = shape
                if layer.kernel > h + 2 * layer.pad or layer.kernel > w + 2 * layer.pad:
                    raise ConfigurationError(
                        f"layer {layer.name!r}: kernel {layer.kernel} exceeds padded input {h}x{w}"
                    )
                oh = (h + 2 * layer.pad - layer.kernel) // layer.stride + 1
                ow = (w + 2 * layer.pad - layer.kernel) // layer.stride + 1
                if oh < 1 or ow < 1:
                    raise ConfigurationError(f"layer {layer.name!r}: empty output")
                shape = (oh, ow, layer.filters)
            elif layer.kind == "maxpool":
                if len(shape) != 3:
                    raise ConfigurationError(f"layer {layer.name!r}: pool needs a 3-D input")
                h, w, c = shape
                if layer.window > h or layer.window > w:
                    raise ConfigurationError(
                        f"layer {layer.name!r}: window {layer.window} exceeds input {h}x{w}"
                    )
                shape = ((h - layer.window) // layer.stride + 1,
                         (w - layer.window) // layer.stride + 1, c)
            elif layer.kind == "fc":
                shape = (layer.width,)
            elif layer.kind in ("relu", "lrn", "softmax"):
                pass
            out[layer.name] = shape
        return out

    # -- lookup helpers -------------------------------------------------

    def layer_names(self) -> list[str]:
        return [layer.name for layer in self.layers]

    def index(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise ConfigurationError(f"architecture {self.name!r} has no layer {name!r}")

    def layer(self, name: str) -> LayerSpec:
        return self.layers[self.index(name)]

    def output_shape(self, name: str) -> tuple[int, ...]:
        if name not in self._shapes:
            raise ConfigurationError(f"architecture {self.name!r} has no layer {name!r}")
        return self._shapes[name]

    def tap_width(self, name: str) -> int:
        """Flattened width of the named layer's output."""
        width = 1
        for dim in self.output_shape(name):
            width *= dim
        return width

    def followed_by_relu(self, name: str) -> bool:
        i = self.index(name)
        return i + 1 < len(self.layers) and self.layers[i + 1].kind == "relu"

    @property
    def last_conv_name(self) -> str:
        for layer in reversed(self.layers):
            if layer.kind == "conv":
                return layer.name
        raise ConfigurationError(f"architecture {self.name!r} has no conv layer")

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "layers": [layer.to_json() for layer in self.layers],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ArchitectureSpec":
        try:
            layers = tuple(LayerSpec.from_json(entry) for entry in obj["layers"])
            input_shape = tuple(obj.get("input_shape", (224, 224, 3)))
            return cls(name=obj["name"], layers=layers, input_shape=input_shape)
        except KeyError as e:
            raise ConfigurationError(f"architecture config missing field {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "ArchitectureSpec":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def config_dir() -> Path:
    """Directory holding the shipped default architecture configs."""
    return Path(str(resources.files("painpipe.cnn") / "configs"))


def builtin_architecture(name: str) -> ArchitectureSpec:
    """Load one of the shipped defaults: vgg-f, vgg-m, vgg-s, vgg-face."""
    if name not in BUILTIN_NAMES:
        raise ConfigurationError(
            f"unknown architecture {name!r}; expected one of {BUILTIN_NAMES}"
        )
    return ArchitectureSpec.load(config_dir() / f"{name}.json")
