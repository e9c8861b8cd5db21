"""First passage percolation on the complete graph K_n."""
from .weights import parse_model, format_model, classify_regime, scale_un
from .simulator import Instance, shortest_path, sample_batch

__version__ = "0.1.0"
__all__ = [
    "parse_model",
    "format_model",
    "classify_regime",
    "scale_un",
    "Instance",
    "shortest_path",
    "sample_batch",
]
