"""Numerical kernels: log-gamma, adaptive quadrature, root finding.

These are the only low-level numerics the rest of the package relies on;
everything is deterministic and certifies its own accuracy where the
contracts require it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AccuracyError, BracketError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "log_gamma",
    "integrate",
    "find_root",
    "rng_stream",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy request for ``integrate``.

    The integral is accepted once the summed panel error estimate is below
    ``max(abs_tol, rel_tol * |value|)``; ``max_depth`` caps how often any one
    panel may be bisected.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 100

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and math.isfinite(self.abs_tol)):
            raise ValueError("abs_tol must be positive and finite")
        if not (self.rel_tol >= 0.0 and math.isfinite(self.rel_tol)):
            raise ValueError("rel_tol must be nonnegative and finite")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


DEFAULT_QUAD = QuadratureSpec()

# Lanczos approximation, g = 7, 9 terms. Gives |relative error| well below
# 1e-13 across the positive axis once combined with the reflection-free
# shift used below.
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def log_gamma(x):
    """Natural log of the gamma function for positive real ``x``.

    Accepts a scalar or numpy array. Raises ValueError off the domain
    (x <= 0, non-finite).
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or not np.all(arr > 0.0)):
        raise ValueError("log_gamma requires finite x > 0")
    small = arr < 0.5
    # For x < 0.5 evaluate at x+1 and peel off log(x): lgamma(x) = lgamma(x+1) - log(x).
    z = np.where(small, arr + 1.0, arr) - 1.0
    series = np.full_like(z, _LANCZOS[0])
    for i in range(1, 9):
        series += _LANCZOS[i] / (z + i)
    base = z + 7.5
    out = _HALF_LOG_2PI + (z + 0.5) * np.log(base) - base + np.log(series)
    if np.any(small):
        out = np.where(small, out - np.log(np.where(small, arr, 1.0)), out)
    if arr.ndim == 0:
        return float(out)
    return out


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1] (abscissae are the
# positive half; the rule is symmetric). The embedded 7-point Gauss rule
# uses the odd-indexed abscissae plus the centre.
_XGK = (
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898,
)
_WGK = (
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298,
)
_WGK_C = 0.209482141084728
_WG = (0.129484966168870, 0.279705391489277, 0.381830050505119)
_WG_C = 0.417959183673469


_EPS = 2.220446049250313e-16


def _gk15(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod 7/15 panel: (integral, conservative error estimate).

    The raw |K15 - G7| difference is badly optimistic on panels holding an
    integrable singularity (both rules miss the same sliver), so the
    estimate is rescaled against the panel's mean absolute deviation the
    way QUADPACK does: err = resasc * min(1, (200 err / resasc)^1.5),
    floored at 50 eps * integral of |f|.
    """
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    try:
        fc = f(c)
        vals = [fc]
        kron = _WGK_C * fc
        gauss = _WG_C * fc
        for i in range(7):
            dx = h * _XGK[i]
            fl = f(c - dx)
            fr = f(c + dx)
            vals.append(fl)
            vals.append(fr)
            kron += _WGK[i] * (fl + fr)
            if i % 2 == 1:
                gauss += _WG[(i - 1) // 2] * (fl + fr)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise AccuracyError(f"integrand failed inside [{a!r}, {b!r}]: {exc}") from exc
    if not math.isfinite(kron):
        raise AccuracyError("integrand not finite inside panel "
                            f"[{a!r}, {b!r}]")
    mean = 0.5 * kron
    resabs = _WGK_C * abs(vals[0])
    resasc = _WGK_C * abs(vals[0] - mean)
    for i in range(7):
        fl, fr = vals[1 + 2 * i], vals[2 + 2 * i]
        resabs += _WGK[i] * (abs(fl) + abs(fr))
        resasc += _WGK[i] * (abs(fl - mean) + abs(fr - mean))
    resabs *= h
    resasc *= h
    err = abs(kron - gauss) * h
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    err = max(err, 50.0 * _EPS * resabs)
    return kron * h, err


def integrate(f: Callable[[float], float], lo: float, hi: float,
              spec: QuadratureSpec = DEFAULT_QUAD) -> tuple[float, float]:
    """Adaptive integral of ``f`` over [lo, hi]; hi may be ``math.inf``.

    Globally adaptive: the panel with the worst error estimate is bisected
    until the summed estimate meets ``spec``. Returns ``(value, err_est)``
    or raises AccuracyError (carrying the best estimate) when the request
    cannot be met within ``spec.max_depth`` bisections of any panel.

    A semi-infinite range is split at lo + 1; the tail is mapped onto
    (0, 1) by ``t = lo + 1 - log(u)``, which suits integrands with (at
    least) exponential decay. Integrable endpoint singularities resolve
    fully when they sit at 0 (where floats are dense); at other endpoints
    certification stops at the float-spacing floor and the routine raises
    rather than under-report the error.
    """
    if not math.isfinite(lo):
        raise ValueError("lower limit must be finite")
    if math.isinf(hi):
        if hi < 0:
            raise ValueError("upper limit must be +inf or finite")
        half = QuadratureSpec(0.5 * spec.abs_tol, spec.rel_tol, spec.max_depth)
        cut = lo + 1.0
        v1, e1 = integrate(f, lo, cut, half)
        v2, e2 = integrate(lambda u: f(cut - math.log(u)) / u, 0.0, 1.0, half)
        return v1 + v2, e1 + e2
    if not math.isfinite(hi):
        raise ValueError("limits must be finite (or hi = +inf)")
    if hi < lo:
        raise ValueError("need lo <= hi")
    if hi == lo:
        return 0.0, 0.0

    val, err = _gk15(f, lo, hi)
    # Heap entries: (-err, tiebreak, a, b, val, err, depth).
    heap = [(-err, 0, lo, hi, val, err, 0)]
    tick = 1
    total_val = val
    total_err = err
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total_val)):
        neg, _, a, b, v, e, depth = heap[0]
        if depth >= spec.max_depth or e == 0.0 or tick > 200_000:
            # The worst panel cannot be refined further: no split can
            # reduce the total estimate below the others' sum.
            raise AccuracyError(
                "quadrature tolerance not reached",
                estimate=total_val, err_est=total_err)
        heapq.heappop(heap)
        m = 0.5 * (a + b)
        try:
            v1, e1 = _gk15(f, a, m)
            v2, e2 = _gk15(f, m, b)
        except AccuracyError as exc:
            exc.estimate = total_val
            exc.err_est = total_err
            raise
        total_val += (v1 + v2) - v
        total_err += (e1 + e2) - e
        heapq.heappush(heap, (-e1, tick, a, m, v1, e1, depth + 1))
        heapq.heappush(heap, (-e2, tick + 1, m, b, v2, e2, depth + 1))
        tick += 2
    # Resum from the panels: incremental updates accumulate rounding drift.
    total_val = math.fsum(entry[4] for entry in heap)
    total_err = math.fsum(entry[5] for entry in heap)
    return total_val, total_err


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: float = 1e-12) -> float:
    """Bisection root of ``f`` on [lo, hi].

    Requires a sign change over the bracket (BracketError otherwise);
    returns the midpoint of a final bracket of width <= tol. Deterministic:
    the same inputs always produce the same point.
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("need finite lo < hi")
    if not (tol > 0.0):
        raise ValueError("tol must be positive")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket already at float resolution
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rng_stream(seed: int, stream_id: int = 0):
    """Construct a reproducible random stream (see :mod:`nbstein.rng`)."""
    from .rng import RngStream

    return RngStream(seed, stream_id)
