"""Pipeline configuration: a JSON document drives every run.

Shape:

    {
      "architecture": "vgg-f",
      "tap": {"layer": "last-conv", "phase": "PostReLU"},
      "selector": {"method": "su", "n": 10, "bins": 10, "k_neighbors": 10},
      "classifier": {"kind": "nb", "params": {}},
      "fusion": {"strain_n": 5, "deep_n": 10},            # optional
      "split": {"test_fraction": 0.5, "seed": 0},
      "preprocessing": {"margin": 0.1, "tau": 1.5,
                         "flow_alpha": 1.0, "flow_iterations": 100,
                         "min_prominence": 0.3, "min_separation": 5},
      "sweep": {"architectures": [...], "layers": [...], "phases": [...]}  # optional
    }

``tap.layer`` accepts an exact layer name or the alias "last-conv". Unknown
keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .classifiers import CLASSIFIER_KINDS
from .cnn.architecture import BUILTIN_NAMES, ArchitectureSpec
from .errors import ContractError

LAST_CONV_ALIAS = "last-conv"
PHASES = ("PreReLU", "PostReLU")


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise ContractError(f"{where}: unknown config keys {sorted(extra)}")


@dataclass(frozen=True)
class TapConfig:
    layer: str = LAST_CONV_ALIAS
    phase: str = "PostReLU"

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ContractError(f"tap phase must be one of {PHASES}, got {self.phase!r}")

    def resolve_layer(self, arch: ArchitectureSpec) -> str:
        return arch.last_conv_name if self.layer == LAST_CONV_ALIAS else self.layer


@dataclass(frozen=True)
class SelectorConfig:
    method: str = "su"
    n: int = 10
    bins: int = 10
    k_neighbors: int = 10

    def __post_init__(self) -> None:
        if self.method not in ("su", "relieff"):
            raise ContractError(f"selector method must be su|relieff, got {self.method!r}")
        if self.n < 1:
            raise ContractError(f"selector n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "nb"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in CLASSIFIER_KINDS:
            raise ContractError(
                f"classifier kind must be one of {CLASSIFIER_KINDS}, got {self.kind!r}"
            )


@dataclass(frozen=True)
class FusionConfig:
    strain_n: int = 5
    deep_n: int = 10

    def __post_init__(self) -> None:
        if self.strain_n < 0 or self.deep_n < 0 or self.strain_n + self.deep_n < 1:
            raise ContractError(
                f"fusion widths invalid: strain_n={self.strain_n}, deep_n={self.deep_n}"
            )


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class PreprocessConfig:
    margin: float = 0.1
    tau: float = 1.5
    flow_alpha: float = 1.0
    flow_iterations: int = 100
    min_prominence: float = 0.3
    min_separation: int = 5


@dataclass(frozen=True)
class SweepConfig:
    architectures: tuple[str, ...] = BUILTIN_NAMES
    layers: tuple[str, ...] = (LAST_CONV_ALIAS, "Full 7")
    phases: tuple[str, ...] = PHASES

    def __post_init__(self) -> None:
        object.__setattr__(self, "architectures", tuple(self.architectures))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "phases", tuple(self.phases))
        for phase in self.phases:
            if phase not in PHASES:
                raise ContractError(f"sweep phase {phase!r} invalid")


@dataclass(frozen=True)
class PipelineConfig:
    architecture: str = "vgg-face"
    tap: TapConfig = field(default_factory=TapConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    fusion: FusionConfig | None = None
    split: SplitConfig = field(default_factory=SplitConfig)
    preprocessing: PreprocessConfig = field(default_factory=PreprocessConfig)
    sweep: SweepConfig | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        _check_keys(obj, {"architecture", "tap", "selector", "classifier", "fusion",
                          "split", "preprocessing", "sweep"}, "config")
        kwargs: dict = {}
        if "architecture" in obj:
            kwargs["architecture"] = obj["architecture"]
        for key, klass in (("tap", TapConfig), ("selector", SelectorConfig),
                           ("classifier", ClassifierConfig), ("fusion", FusionConfig),
                           ("split", SplitConfig), ("preprocessing", PreprocessConfig),
                           ("sweep", SweepConfig)):
            if key in obj and obj[key] is not None:
                section = obj[key]
                allowed = set(klass.__dataclass_fields__)
                _check_keys(section, allowed, f"config.{key}")
                kwargs[key] = klass(**section)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))

    def to_json(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def with_seed(self, seed: int) -> "PipelineConfig":
        from dataclasses import replace

        return replace(self, split=SplitConfig(self.split.test_fraction, seed))
