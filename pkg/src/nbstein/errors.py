"""Exception types shared across the package."""

from __future__ import annotations


class AccuracyError(RuntimeError):
    """A numerical routine could not certify the requested accuracy.

    Carries the best available estimate and its error bound so callers can
    inspect how far off the result was.
    """

    def __init__(self, message: str, estimate: float | None = None,
                 err_est: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.err_est = err_est


class BracketError(ValueError):
    """Root-finding bracket does not straddle a sign change."""


class PrecisionError(ValueError):
    """Sample size too small for the statistical check to be meaningful."""


class PreconditionError(ValueError):
    """A theorem's hypothesis is violated, so its bound does not apply."""


class SupercriticalGrowthError(RuntimeError):
    """Simulated population exceeded the configured cap."""
