from .archconfig import Architecture, ExportError, find_architecture, load_architecture
from .export import ExportJob, export_weights, random_entries
from .fixtures import emit_reference_activations, read_fixture
from .ppwt import read_ppwt, write_ppwt

__version__ = "0.1.0"
