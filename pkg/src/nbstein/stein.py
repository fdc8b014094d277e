"""Stein equation machinery for the negative binomial.

For W ~ NB(r, p) and a test function f with increments in [-1, 1], the
Stein equation

    p (r + i) g(i+1) - i g(i) = f(i) - E f(W),        i >= 0,

has the explicit solution

    g(j+1) = ( sum_{k<=j} pi_k (f(k) - E f) ) / ( p (r + j) pi_j ),

where pi is the NB pmf. Since the full sum vanishes, the head sum equals
minus the tail sum. Evaluating either partial sum directly is unstable
somewhere (head-cumsum rounding debris divided by a tiny pi_j in the far
tail; cancellation near the bulk for the tail form), and one-directional
recursion is no better: the homogeneous solution of the recurrence is
proportional to 1/((r+j-1) pi_{j-1}), U-shaped with its minimum at the
mode, so upward recursion amplifies errors above the mode and downward
recursion amplifies them below it. The solver therefore sweeps in both
stable directions and meets at the mode: upward from the exact i = 0
equation g(1) = (f(0) - E f)/(p r), and downward from g(N+1) computed via
the tail-sum form over a geometrically extended table (relatively
accurate there because the beyond-table remainder is geometrically
negligible). Every equation except the join holds to rounding level, the
join residual measures the solution's true accuracy, and the whole
residual vector is certified directly from the stored values.

The interesting quantities are the "Stein factors": G1 = sup_w |g(w)| over
the test class, which equals 1/(1-p) (attained by f(x) = -x), and
G2 = sup_w |g(w+1) - g(w)|, attained at w by the wedge f_w(x) = -|x - w|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import AccuracyError
from .numerics import find_root, log_gamma
from .distributions import NegBinParams, nb_moments, nb_pmf_max, nb_truncation, _nb_log_pmf_array

__all__ = [
    "LipschitzFn",
    "SteinSolution",
    "SteinFactorReport",
    "Theorem1Bound",
    "extremal_f",
    "combine_lipschitz",
    "nb_expectation_lipschitz",
    "solve_stein",
    "stein_residual",
    "measure_factors",
    "theorem1_bound",
    "compute_r0",
    "K_TARGET",
]

_RESIDUAL_TOL = 1e-10

# The constant 3 sqrt(2e) / 8 that the threshold shape parameter r0 solves
# Gamma(r - 1/2) / Gamma(r) = K_TARGET against.
K_TARGET = 0.375 * math.sqrt(2.0 * math.e)


@dataclass(frozen=True)
class LipschitzFn:
    """Piecewise-linear test function with increments bounded by 1.

    f(k) = f0 + sum of the first k increments; beyond the stored increments
    the function continues linearly with slope ``tail_slope``. This is the
    natural dense class for Wasserstein test functions on the integers.
    """

    f0: float
    increments: tuple
    tail_slope: float

    def __post_init__(self):
        object.__setattr__(self, "increments", tuple(float(d) for d in self.increments))
        if any(abs(d) > 1.0 + 1e-12 for d in self.increments):
            raise ValueError("increments must lie in [-1, 1]")
        if abs(self.tail_slope) > 1.0 + 1e-12:
            raise ValueError("tail_slope must lie in [-1, 1]")
        if not math.isfinite(self.f0):
            raise ValueError("f0 must be finite")

    @property
    def n_head(self) -> int:
        return len(self.increments)

    def values(self, count: int) -> np.ndarray:
        """f(0), ..., f(count-1) as an array."""
        out = np.empty(count)
        out[0] = self.f0
        m = min(self.n_head, count - 1)
        if m > 0:
            out[1:m + 1] = self.f0 + np.cumsum(self.increments[:m])
        if count - 1 > m:
            base = out[m]
            out[m + 1:] = base + self.tail_slope * np.arange(1, count - m)
        return out

    def __call__(self, k: int) -> float:
        if k < 0:
            raise ValueError("defined on nonnegative integers")
        if k <= self.n_head:
            return self.f0 + math.fsum(self.increments[:k])
        head_end = self.f0 + math.fsum(self.increments)
        return head_end + self.tail_slope * (k - self.n_head)

    @classmethod
    def constant(cls, c: float) -> "LipschitzFn":
        return cls(c, (), 0.0)

    @classmethod
    def neg_identity(cls) -> "LipschitzFn":
        """f(x) = -x, the test function attaining G1."""
        return cls(0.0, (), -1.0)


def extremal_f(i: int) -> LipschitzFn:
    """The wedge f_i(x) = -|x - i| attaining the second-factor supremum at i."""
    if i < 0:
        raise ValueError("i must be nonnegative")
    return LipschitzFn(-float(i), (1.0,) * i, -1.0)


def combine_lipschitz(a: float, f: LipschitzFn, b: float, h: LipschitzFn) -> LipschitzFn:
    """a*f + b*h (valid when the combined increments stay within [-1, 1])."""
    m = max(f.n_head, h.n_head)
    fd = list(f.increments) + [f.tail_slope] * (m - f.n_head)
    hd = list(h.increments) + [h.tail_slope] * (m - h.n_head)
    return LipschitzFn(a * f.f0 + b * h.f0,
                       tuple(a * x + b * y for x, y in zip(fd, hd)),
                       a * f.tail_slope + b * h.tail_slope)


@dataclass(frozen=True)
class SteinSolution:
    """Certified solution g of the Stein equation for one (f, params).

    ``g[i]`` holds g(i) for i = 0..N+1 with the convention g(0) := g(1);
    ``residual_max`` is the largest |equation residual| over i = 0..N and is
    guaranteed below 1e-10 * scale; ``tail_note`` records the magnitude of
    the tail sum used to start the downward sweep (zero when the whole
    range sits below the mode and only the upward sweep ran).
    """

    params: NegBinParams
    g: np.ndarray
    N: int
    mu_f: float
    residual_max: float
    tail_note: float


class Theorem1Bound(NamedTuple):
    """G1 bound, the three G2 bound components, and their minimum."""

    G1_bound: float
    components: tuple
    G2_bound: float


@dataclass(frozen=True)
class SteinFactorReport:
    """Measured Stein factors next to their proved bounds."""

    params: NegBinParams
    G1_measured: float
    G2_measured: float
    G1_bound: float
    G2_bound_components: tuple
    G2_bound: float
    argmax_i: int


def _tables(params: NegBinParams, K: int) -> tuple[np.ndarray, float, float]:
    """(pmf on 0..K, tail mass above K, tail first moment above K)."""
    pi = np.exp(_nb_log_pmf_array(params, K))
    mean, _ = nb_moments(params)
    p_tail = max(0.0, 1.0 - math.fsum(pi.tolist()))
    m_tail = max(0.0, mean - math.fsum((pi * np.arange(K + 1)).tolist()))
    return pi, p_tail, m_tail


def _extension_length(params: NegBinParams, k_from: int) -> int:
    """Extra table entries past ``k_from`` so that the true remainder of any
    suffix sum weighted by the pmf drops below ~1e-14 of its last kept term.

    The pmf ratio p(r+k)/(k+1) is monotone in k toward p, so rho bounds it
    over the whole extension."""
    r, p = params.r, params.p
    rho = max(p, p * (r + k_from + 1.0) / (k_from + 2.0))
    if rho >= 1.0:  # only possible below the bulk; caller extends past it
        raise ValueError("extension must start beyond the pmf bulk")
    return int(math.ceil(14.0 / -math.log10(rho))) + 16


def _expectation(fv: np.ndarray, f: LipschitzFn, pi: np.ndarray,
                 p_tail: float, m_tail: float) -> float:
    """E f(W) using exact linear-tail closed forms beyond the table."""
    K = len(pi) - 1
    head = math.fsum((pi * fv).tolist())
    # Beyond K the function is f(K) + slope * (k - K); split into the
    # constant and linear-in-k pieces against the tail mass and moment.
    s = f.tail_slope
    return head + (fv[K] - s * K) * p_tail + s * m_tail


def nb_expectation_lipschitz(f: LipschitzFn, params: NegBinParams) -> float:
    """E f(W) for W ~ NB(params), accurate to ~1e-12 * (1 + |result|)."""
    K = max(nb_truncation(params), f.n_head)
    pi, p_tail, m_tail = _tables(params, K)
    return _expectation(f.values(K + 1), f, pi, p_tail, m_tail)


def solve_stein(f: LipschitzFn, params: NegBinParams, N: int | None = None) -> SteinSolution:
    """Solve the Stein equation for f on indices 1..N+1 and certify it.

    Raises AccuracyError if the certified residual exceeds 1e-10 * scale
    with scale = max(1, max_i |f(i) - E f|), or if the pmf underflows on
    the requested range.
    """
    if N is None:
        N = nb_truncation(params)
    if N < 1:
        raise ValueError("N must be >= 1")
    r, p = params.r, params.p
    # Table reaching past both the requested range and the distribution
    # bulk, plus a geometric margin so suffix sums need no remainder term.
    base = max(N + 1, f.n_head, nb_truncation(params))
    K = base + _extension_length(params, base)
    pi, p_tail, m_tail = _tables(params, K)
    if not np.all(pi[:N + 1] > 0.0):
        raise AccuracyError("pmf underflows on the requested range; reduce N")
    fv = f.values(K + 1)
    mu = _expectation(fv, f, pi, p_tail, m_tail)
    dev = fv - mu
    g = np.empty(N + 2)
    # Upward sweep from the exact i = 0 equation, stable up to the mode.
    j0 = min(nb_pmf_max(params)[0], N)
    gv = dev[0] / (p * r)
    g[1] = gv
    for i in range(1, j0 + 1):
        gv = (i * gv + dev[i]) / (p * (r + i))
        g[i + 1] = gv
    if j0 < N:
        # Start value from the tail-sum form: the suffix runs over the
        # extended table, so the dropped true remainder is ~1e-14-relative.
        t_top = math.fsum((pi[N + 1:] * dev[N + 1:]).tolist())
        g[N + 1] = -t_top / (p * (r + N) * pi[N])
        # Downward sweep, stable above the mode; the two halves meet at the
        # unenforced join equation i = j0 + 1, whose residual is certified
        # below along with all the others.
        gv = float(g[N + 1])
        for i in range(N, j0 + 1, -1):
            gv = (p * (r + i) * gv - dev[i]) / i
            g[i] = gv
    else:
        t_top = 0.0
    g[0] = g[1]
    if not np.all(np.isfinite(g)):
        raise AccuracyError("solution overflowed; reduce N")
    i = np.arange(N + 1)
    residual = p * (r + i) * g[1:] - i * g[:N + 1] - dev[:N + 1]
    residual_max = float(np.max(np.abs(residual)))
    scale = max(1.0, float(np.max(np.abs(dev[:N + 1]))))
    if residual_max > _RESIDUAL_TOL * scale:
        raise AccuracyError(
            f"residual {residual_max:.3e} exceeds {_RESIDUAL_TOL:.0e} * {scale:.3e}",
            estimate=residual_max)
    return SteinSolution(params=params, g=g, N=N, mu_f=mu,
                         residual_max=residual_max, tail_note=abs(t_top))


def stein_residual(sol: SteinSolution, f: LipschitzFn) -> float:
    """Max |p(r+i) g(i+1) - i g(i) - (f(i) - E f)| over i = 0..N.

    Recomputes E f independently, so it also serves as an external check
    on a solution (or on a deliberately perturbed g).
    """
    r, p = sol.params.r, sol.params.p
    mu = nb_expectation_lipschitz(f, sol.params)
    fv = f.values(sol.N + 1)
    i = np.arange(sol.N + 1)
    res = p * (r + i) * sol.g[1:sol.N + 2] - i * sol.g[:sol.N + 1] - (fv - mu)
    return float(np.max(np.abs(res)))


def measure_factors(params: NegBinParams, N: int | None = None,
                    i_max: int | None = None) -> SteinFactorReport:
    """Measure G1 and G2 over the extremal family and compare to bounds.

    G1 is sup_w g(w) for f(x) = -x (the attaining function); G2 is
    max_i |g_{f_i}(i+1) - g_{f_i}(i)| over i = 1..i_max, with the argmax
    recorded.
    """
    mean, var = nb_moments(params)
    sd = math.sqrt(var)
    mode, _ = nb_pmf_max(params)
    if i_max is None:
        i_max = int(math.ceil(mode + 10.0 * sd))
    if N is None:
        N = max(nb_truncation(params), i_max + 50)
    sol1 = solve_stein(LipschitzFn.neg_identity(), params, N)
    g1 = float(np.max(sol1.g[1:]))
    g2 = -math.inf
    argmax = 1
    for i in range(1, i_max + 1):
        sol = solve_stein(extremal_f(i), params, N)
        delta = abs(float(sol.g[i + 1] - sol.g[i]))
        if delta > g2:
            g2 = delta
            argmax = i
    bound = theorem1_bound(params)
    return SteinFactorReport(
        params=params, G1_measured=g1, G2_measured=g2,
        G1_bound=bound.G1_bound, G2_bound_components=bound.components,
        G2_bound=bound.G2_bound, argmax_i=argmax)


@lru_cache(maxsize=8)
def compute_r0(tol: float = 1e-12) -> float:
    """Threshold shape r0 > 1/2 solving Gamma(r - 1/2)/Gamma(r) = 3 sqrt(2e)/8.

    The ratio is strictly decreasing, so bisection on [1, 4] (where the
    endpoint values straddle the target) pins r0 to bracket width tol;
    sqrt(r0) is about 1.4255.
    """
    def h(r: float) -> float:
        return math.exp(log_gamma(r - 0.5) - log_gamma(r)) - K_TARGET

    return find_root(h, 1.0, 4.0, tol)


def theorem1_bound(params: NegBinParams, r0: float | None = None) -> Theorem1Bound:
    """Proved factor bounds: G1 = 1/(1-p) and the three-way G2 minimum

    min{ 2/(1-p), (1+p)/(1-p)^2, sqrt(r0 / (r p (1-p)^3)) }.
    """
    if r0 is None:
        r0 = compute_r0()
    r, p = params.r, params.p
    q = 1.0 - p
    c1 = 2.0 / q
    c2 = (1.0 + p) / (q * q)
    c3 = math.sqrt(r0 / (r * p * q ** 3))
    return Theorem1Bound(1.0 / q, (c1, c2, c3), min(c1, c2, c3))
