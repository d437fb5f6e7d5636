"""Entropic-like separability criteria from the extended reduction map."""
from .criteria import CriterionReport, evaluate
from .linalg import partial_trace, partial_transpose
from .maps import canonical_V, partial_time_reversal, spin_flip_V
from .states import DensityMatrix

__all__ = [
    "CriterionReport",
    "DensityMatrix",
    "canonical_V",
    "evaluate",
    "partial_time_reversal",
    "partial_trace",
    "partial_transpose",
    "spin_flip_V",
]
