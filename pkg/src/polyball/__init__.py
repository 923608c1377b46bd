"""Numerical toolkit for twisted noncommutative polyballs.

Truncated Fock spaces with twisted shifts, polyball membership, Berezin
kernels and functional calculus, Hardy-algebra series, and characteristic
functions with their functional models.
"""
from .ball import OperatorTuple, check_membership
from .berezin import build_kernel
from .hardy import FormalSeries
from .models import characteristic_function
from .numerics import DEFAULT_TOLERANCES, Tolerances
from .twist import TwistSpec
from .words import TruncatedBasis

__all__ = [
    "DEFAULT_TOLERANCES",
    "FormalSeries",
    "OperatorTuple",
    "Tolerances",
    "TruncatedBasis",
    "TwistSpec",
    "build_kernel",
    "characteristic_function",
    "check_membership",
]
__version__ = "0.1.0"
