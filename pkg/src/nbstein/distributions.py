"""Laws on the nonnegative integers used throughout the package.

Two families matter here:

* the negative binomial NB(r, p) with pmf
  ``Gamma(r+k) / (Gamma(r) k!) * (1-p)^r * p^k`` (mean ``r p / (1-p)``), and
* the "modified geometric" law of one birth-death clan observed a time ``t``
  after it immigrated: ``P[0] = 1 - L(1-q)``, ``P[k] = L (1-q)^2 q^(k-1)``
  for k >= 1, where ``L = exp(-(1-b) t)`` and ``q = b (1-L) / (1 - b L)``.

Everything is evaluated in log space and truncated supports carry certified
tail bounds so downstream metrics can account for what was cut off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .numerics import log_gamma
from .rng import RngStream

__all__ = [
    "NegBinParams",
    "ModGeomParams",
    "LambdaTheta",
    "Pmf",
    "MaxPmfBounds",
    "lambda_theta",
    "nb_log_pmf",
    "nb_pmf",
    "nb_cdf",
    "nb_moments",
    "nb_truncation",
    "nb_pmf_table",
    "nb_sample",
    "nb_pmf_max",
    "pmf_max_bounds",
    "poisson_log_pmf",
    "poisson_pmf_table",
    "poisson_max_pmf_bound",
    "modgeom_pmf",
    "modgeom_moments",
    "modgeom_pmf_table",
    "modgeom_sample",
]

# Certification targets for truncated supports.
_TAIL_MASS_TARGET = 1e-13
_TAIL_OVERSHOOT_TARGET = 1e-11


@dataclass(frozen=True)
class NegBinParams:
    """Parameters of NB(r, p): r > 0, 0 < p < 1."""

    r: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise ValueError("r must be positive and finite")
        if not (0.0 < self.p < 1.0):
            raise ValueError("p must lie in (0, 1)")


class LambdaTheta(NamedTuple):
    """Survival factor L and geometric parameter theta of a clan law."""

    lam: float
    theta: float


def lambda_theta(b: float, t: float) -> LambdaTheta:
    """Clan-law parameters after time ``t`` with per-head birth rate ``b``.

    ``lam = exp(-(1-b) t)`` and ``theta = b (1-lam) / (1 - b lam)``, written
    via expm1 so that b near (or equal to) 1 stays fully accurate, where the
    limit is ``theta = b t / (1 + b t)``.
    """
    if not (b >= 0.0 and math.isfinite(b)):
        raise ValueError("b must be nonnegative and finite")
    if not (t > 0.0 and math.isfinite(t)):
        raise ValueError("t must be positive and finite")
    x = (1.0 - b) * t
    if -x > 690.0:
        raise ValueError("exp((b-1) t) overflows; reduce t or b")
    if abs(x) < 1e-12:
        return LambdaTheta(math.exp(-x), b * t / (1.0 + b * t))
    em = -math.expm1(-x)  # 1 - lam, exact near x = 0
    theta = b * em / ((1.0 - b) + b * em)
    return LambdaTheta(math.exp(-x), theta)


@dataclass(frozen=True)
class ModGeomParams:
    """Clan-law parameters (b >= 0, t > 0) with derived lam and theta."""

    b: float
    t: float
    lam: float = field(init=False)
    theta: float = field(init=False)

    def __post_init__(self):
        lt = lambda_theta(self.b, self.t)  # validates b, t
        object.__setattr__(self, "lam", lt.lam)
        object.__setattr__(self, "theta", lt.theta)


@dataclass(frozen=True)
class Pmf:
    """A law on {offset, offset+1, ...} with an explicitly truncated tail.

    ``weights[k]`` is the mass at ``offset + k``; ``tail_mass`` is the mass
    beyond the stored support and ``tail_overshoot`` is a certified upper
    bound on ``sum_{k > end} (1 - F(k))`` — the quantity a Wasserstein
    computation loses by ignoring the tail.
    """

    offset: int
    weights: np.ndarray
    tail_mass: float = 0.0
    tail_overshoot: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValueError("weights must be finite and nonnegative")
        if self.offset < 0 or self.offset != int(self.offset):
            raise ValueError("offset must be a nonnegative integer")
        if not (0.0 <= self.tail_mass <= 1.0):
            raise ValueError("tail_mass must lie in [0, 1]")
        if not self.tail_overshoot >= 0.0:
            raise ValueError("tail_overshoot must be nonnegative")
        total = math.fsum(w.tolist()) + self.tail_mass
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights + tail_mass = {total!r}, expected 1")

    @property
    def k_end(self) -> int:
        """Largest support point stored explicitly."""
        return self.offset + len(self.weights) - 1


class MaxPmfBounds(NamedTuple):
    """Upper bounds on the largest pmf value of NB(r, p).

    ``phillips`` is sqrt((1-p) / (2 e r p)) * K_r for r > 1/2 (K_r =
    sqrt(r) Gamma(r - 1/2) / Gamma(r), decreasing in r) and the trivial
    bound 1.0 for r <= 1/2, where ``k_r`` is None. ``poisson_bound_fn`` is
    the Poisson analogue lam -> 1 / sqrt(2 e lam), exposed as a callable.
    """

    phillips: float
    k_r: float | None
    poisson_bound_fn: Callable[[float], float]


def _nb_log_pmf_array(params: NegBinParams, k_hi: int) -> np.ndarray:
    """log pmf of NB(params) at k = 0..k_hi, vectorised."""
    r, p = params.r, params.p
    ks = np.arange(k_hi + 1, dtype=float)
    return (log_gamma(ks + r) - log_gamma(r) - log_gamma(ks + 1.0)
            + r * math.log1p(-p) + ks * math.log(p))


def nb_log_pmf(params: NegBinParams, k: int) -> float:
    """log P[NB(r, p) = k]; -inf for k < 0."""
    if k < 0:
        return -math.inf
    r, p = params.r, params.p
    return (log_gamma(k + r) - log_gamma(r) - log_gamma(k + 1.0)
            + r * math.log1p(-p) + k * math.log(p))


def nb_pmf(params: NegBinParams, k: int) -> float:
    return 0.0 if k < 0 else math.exp(nb_log_pmf(params, k))


def nb_moments(params: NegBinParams) -> tuple[float, float]:
    """(mean, variance) of NB(r, p)."""
    r, p = params.r, params.p
    q = 1.0 - p
    return r * p / q, r * p / (q * q)


def nb_truncation(params: NegBinParams) -> int:
    """Default support cut: mean + 12 standard deviations, padded."""
    mean, var = nb_moments(params)
    return int(math.ceil(mean + 12.0 * math.sqrt(var))) + 64


def _geometric_tail_bounds(last_log_pmf: float, ratio: float) -> tuple[float, float]:
    """(tail mass, overshoot) bounds beyond index K given pmf(K) and a
    ratio bound rho >= pmf(k+1)/pmf(k) for all k >= K."""
    if not ratio < 1.0:
        return math.inf, math.inf
    pk = math.exp(last_log_pmf)
    return pk * ratio / (1.0 - ratio), pk * ratio / (1.0 - ratio) ** 2


def nb_pmf_table(params: NegBinParams, k_max: int | None = None) -> Pmf:
    """Materialise NB(r, p) on 0..K with certified tail bounds.

    With the default K the tail mass is below 1e-13 and the certified
    Wasserstein overshoot below 1e-11.
    """
    r, p = params.r, params.p
    K = nb_truncation(params) if k_max is None else int(k_max)
    if k_max is None:
        while True:
            # pmf ratio p (r+k)/(k+1) is monotone toward p, so beyond K it
            # never exceeds max(p, ratio at K).
            rho = max(p, p * (r + K) / (K + 1.0))
            tail, over = _geometric_tail_bounds(nb_log_pmf(params, K), rho)
            if tail <= _TAIL_MASS_TARGET and over <= _TAIL_OVERSHOOT_TARGET:
                break
            K += max(64, K // 4)
    else:
        rho = max(p, p * (r + K) / (K + 1.0))
        tail, over = _geometric_tail_bounds(nb_log_pmf(params, K), rho)
    weights = np.exp(_nb_log_pmf_array(params, K))
    covered = math.fsum(weights.tolist())
    return Pmf(offset=0, weights=weights,
               tail_mass=max(0.0, 1.0 - covered),
               tail_overshoot=over)


def nb_cdf(params: NegBinParams, k: int) -> float:
    """P[NB(r, p) <= k]."""
    if k < 0:
        return 0.0
    K = nb_truncation(params)
    if k >= K:
        return 1.0  # mass beyond K is below 1e-13
    weights = np.exp(_nb_log_pmf_array(params, k))
    return min(1.0, math.fsum(weights.tolist()))


def nb_pmf_max(params: NegBinParams) -> tuple[int, float]:
    """(argmax, max) of the NB pmf; ties resolved to the smallest argmax."""
    r, p = params.r, params.p
    k = 0
    # pmf(k+1)/pmf(k) = p (r+k) / (k+1); climb while strictly increasing.
    while p * (r + k) / (k + 1.0) > 1.0:
        k += 1
    return k, nb_pmf(params, k)


def poisson_max_pmf_bound(lam: float) -> float:
    """Upper bound 1 / sqrt(2 e lam) on the largest Poisson(lam) pmf value."""
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    return 1.0 / math.sqrt(2.0 * math.e * lam)


def pmf_max_bounds(params: NegBinParams) -> MaxPmfBounds:
    """Certified upper bounds for max_k P[NB(r, p) = k]."""
    r, p = params.r, params.p
    if r <= 0.5:
        return MaxPmfBounds(1.0, None, poisson_max_pmf_bound)
    k_r = math.exp(0.5 * math.log(r) + log_gamma(r - 0.5) - log_gamma(r))
    phillips = math.sqrt((1.0 - p) / (2.0 * math.e * r * p)) * k_r
    return MaxPmfBounds(phillips, k_r, poisson_max_pmf_bound)


def poisson_log_pmf(lam: float, k: int) -> float:
    if k < 0:
        return -math.inf
    if lam == 0.0:
        return 0.0 if k == 0 else -math.inf
    return k * math.log(lam) - lam - log_gamma(k + 1.0)


def poisson_pmf_table(lam: float, k_max: int | None = None) -> Pmf:
    """Materialise Poisson(lam) with certified tail bounds."""
    if not (lam >= 0.0 and math.isfinite(lam)):
        raise ValueError("lam must be nonnegative and finite")
    if lam == 0.0:
        return Pmf(offset=0, weights=np.array([1.0]))
    K = int(math.ceil(lam + 12.0 * math.sqrt(lam))) + 64 if k_max is None else int(k_max)
    while True:
        rho = lam / (K + 2.0)  # pmf ratio lam/(k+1) is decreasing
        tail, over = _geometric_tail_bounds(poisson_log_pmf(lam, K), rho)
        if k_max is not None or (tail <= _TAIL_MASS_TARGET and over <= _TAIL_OVERSHOOT_TARGET):
            break
        K += max(64, K // 4)
    ks = np.arange(K + 1, dtype=float)
    weights = np.exp(ks * math.log(lam) - lam - log_gamma(ks + 1.0))
    covered = math.fsum(weights.tolist())
    return Pmf(offset=0, weights=weights,
               tail_mass=max(0.0, 1.0 - covered),
               tail_overshoot=over)


# --- modified geometric -----------------------------------------------------

def modgeom_pmf(params: ModGeomParams, k: int) -> float:
    """P[clan size = k] at horizon t (see module docstring)."""
    lam, theta = params.lam, params.theta
    if k < 0:
        return 0.0
    if k == 0:
        return 1.0 - lam * (1.0 - theta)
    if k == 1:
        return lam * (1.0 - theta) ** 2
    if theta == 0.0:
        return 0.0
    return math.exp(math.log(lam) + 2.0 * math.log1p(-theta)
                    + (k - 1) * math.log(theta))


def modgeom_moments(params: ModGeomParams) -> tuple[float, float]:
    """(E X, E X^2) of the clan law.

    The second moment is ``lam (1 + 2 b t phi(x))`` with ``x = (1-b) t`` and
    ``phi(x) = (1 - exp(-x)) / x`` (phi(0) = 1), which is the stable form of
    ``lam (1 + b - 2 b lam) / (1 - b)`` at b near 1; at b = 1 it reduces to
    1 + 2 t.
    """
    b, t, lam = params.b, params.t, params.lam
    x = (1.0 - b) * t
    if abs(x) < 1e-8:
        phi = 1.0 - 0.5 * x
    else:
        phi = -math.expm1(-x) / x
    return lam, lam * (1.0 + 2.0 * b * t * phi)


def modgeom_pmf_table(params: ModGeomParams, k_max: int | None = None) -> Pmf:
    """Materialise the clan law; tail bounds here are exact (geometric)."""
    lam, theta = params.lam, params.theta
    p0 = 1.0 - lam * (1.0 - theta)
    if theta == 0.0:  # b = 0: all mass on {0, 1}
        return Pmf(offset=0, weights=np.array([p0, lam]))
    if k_max is None:
        lt = math.log(theta)
        K = max(2, int(math.ceil(math.log(_TAIL_MASS_TARGET / (lam * (1.0 - theta))) / lt)),
                int(math.ceil(math.log(_TAIL_OVERSHOOT_TARGET / lam) / lt)) - 1)
    else:
        K = int(k_max)
    ks = np.arange(1, K + 1, dtype=float)
    weights = np.empty(K + 1)
    weights[0] = p0
    weights[1:] = np.exp(math.log(lam) + 2.0 * math.log1p(-theta) + (ks - 1.0) * math.log(theta))
    # Exact geometric remainders: mass lam (1-theta) theta^K beyond K and
    # overshoot sum_{k>K} (1-F(k)) = lam theta^(K+1).
    return Pmf(offset=0, weights=weights,
               tail_mass=lam * (1.0 - theta) * theta ** K,
               tail_overshoot=lam * theta ** (K + 1))


def _modgeom_draw(lam: float, theta: float, rng: RngStream) -> int:
    """One clan-size draw given precomputed (lam, theta)."""
    if rng.uniform() < 1.0 - lam * (1.0 - theta):
        return 0
    if theta == 0.0:
        return 1
    return 1 + int(math.log(rng.uniform()) / math.log(theta))


def modgeom_sample(params: ModGeomParams, rng: RngStream, n: int | None = None):
    """Sample the clan law: one int, or a list of ``n`` ints."""
    if n is None:
        return _modgeom_draw(params.lam, params.theta, rng)
    return [_modgeom_draw(params.lam, params.theta, rng) for _ in range(n)]


# --- samplers ----------------------------------------------------------------

def _gamma_variate(rng: RngStream, shape: float) -> float:
    """Marsaglia-Tsang squeeze sampler; shape < 1 via the boost U^(1/shape)."""
    if not shape > 0.0:
        raise ValueError("shape must be positive")
    if shape < 1.0:
        return _gamma_variate(rng, shape + 1.0) * rng.uniform() ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = rng.normal()
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = rng.uniform()
        if u < 1.0 - 0.0331 * x * x * x * x:
            return d * v
        if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v


def _poisson_variate(rng: RngStream, lam: float) -> int:
    """Poisson draw: Knuth's product method below 10, PTRS above."""
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        limit = math.exp(-lam)
        k = 0
        prod = rng.uniform()
        while prod > limit:
            k += 1
            prod *= rng.uniform()
        return k
    # Hormann's transformed rejection with squeeze (PTRS).
    b = 0.931 + 2.53 * math.sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = math.log(lam)
    while True:
        u = rng.uniform() - 0.5
        v = rng.uniform()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= v_r:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v * inv_alpha / (a / (us * us) + b))
                <= k * log_lam - lam - math.lgamma(k + 1.0)):
            return int(k)


def nb_sample(params: NegBinParams, rng: RngStream, n: int | None = None):
    """Sample NB(r, p) as a gamma-mixed Poisson: one int or a list of n."""
    r, p = params.r, params.p
    scale = p / (1.0 - p)
    if n is None:
        return _poisson_variate(rng, _gamma_variate(rng, r) * scale)
    return [_poisson_variate(rng, _gamma_variate(rng, r) * scale)
            for _ in range(n)]
