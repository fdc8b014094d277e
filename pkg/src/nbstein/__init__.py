"""Negative binomial Stein factors, birth-death laws, and approximation bounds."""

from .errors import (
    AccuracyError,
    BracketError,
    PrecisionError,
    PreconditionError,
    SupercriticalGrowthError,
)
from .numerics import QuadratureSpec, DEFAULT_QUAD, log_gamma, integrate, find_root, rng_stream
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "BracketError",
    "PrecisionError",
    "PreconditionError",
    "SupercriticalGrowthError",
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "log_gamma",
    "integrate",
    "find_root",
    "rng_stream",
    "RngStream",
    "__version__",
]
