from .architecture import ArchitectureSpec, LayerSpec, builtin_architecture, config_dir
from .layers import conv2d, fullyconnected, lrn, maxpool, relu, softmax
from .network import Phase, TapRequest, forward_with_taps, validate_taps
from .weights import WeightSet, load_weights, random_weight_set, save_weights

__all__ = [
    "ArchitectureSpec",
    "LayerSpec",
    "Phase",
    "TapRequest",
    "WeightSet",
    "builtin_architecture",
    "config_dir",
    "conv2d",
    "forward_with_taps",
    "fullyconnected",
    "load_weights",
    "lrn",
    "maxpool",
    "random_weight_set",
    "relu",
    "save_weights",
    "softmax",
    "validate_taps",
]
