"""Compression-proxied complexity experiments on finite bit strings."""

__version__ = "0.1.0"

from .bits import BitString, SymbolString
from .complexity import Thresholds, Verdict, estimate_K, estimate_K_cond, judge, mutual_info_K
from .errors import KausalError

__all__ = [
    "BitString",
    "SymbolString",
    "Thresholds",
    "Verdict",
    "estimate_K",
    "estimate_K_cond",
    "judge",
    "mutual_info_K",
    "KausalError",
    "__version__",
]
