"""Exception types shared across the pipeline."""


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(ContractError):
    """A layer or architecture definition is internally inconsistent."""


class TapError(ContractError):
    """A feature-tap request names an unknown layer or an invalid phase."""


class WeightFormatError(ValueError):
    """A weight or model file has a bad magic number, version, or framing."""


class WeightValidationError(ValueError):
    """A weight file parses but its tensor shapes disagree with the architecture."""


class TrainingError(RuntimeError):
    """A training procedure failed to converge within its iteration cap."""


class FrameSkipped(Exception):
    """Raised for frames the face tracker flagged as failed; callers drop the frame."""
