"""Transfer-learning pipeline for infant pain expression classification.

Deep features come from forward-only VGG-style networks with named
pre/post-ReLU taps; handcrafted features come from optical-strain analysis
of face-crop videos. Feature selection (Relief-f, symmetric uncertainty),
four classical classifiers, and ROC statistics close the loop, all behind a
config-driven command line.
"""

from .cnn import (
    ArchitectureSpec,
    Phase,
    TapRequest,
    WeightSet,
    builtin_architecture,
    forward_with_taps,
    load_weights,
    random_weight_set,
    save_weights,
)
from .classifiers import (
    GaussianNaiveBayes,
    KNearestNeighbors,
    LinearSVM,
    RandomForest,
    load_model,
    make_classifier,
    save_model,
)
from .config import PipelineConfig
from .evaluation import accuracy, auc, delong_test, subject_split
from .featurematrix import FeatureMatrix
from .manifest import DatasetManifest
from .selection import ReliefFSelector, SymmetricUncertaintySelector, symmetric_uncertainty
from .synthetic import generate_synthetic_dataset

__version__ = "0.1.0"
