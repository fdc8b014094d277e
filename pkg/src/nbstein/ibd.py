"""Immigration-birth-death simulation and law verification.

The process: immigrants arrive at rate a(s) (possibly time-varying), every
individual independently gives birth at rate b and dies at rate 1. Exact
jump-chain (Gillespie) simulation; a time-varying immigration rate is
handled by thinning against a supplied dominating constant ``a_max``, which
stays exact because the thinning proposal is itself part of the jump chain.

Known laws this module is used to verify:

* one clan, no immigration, started from a single individual: the modified
  geometric law of :mod:`nbstein.distributions` at horizon t;
* constant immigration a, empty start: NB(a/b, theta_t) at horizon t, with
  theta_t from ``lambda_theta(b, t)``, converging to the stationary
  NB(a/b, b) law as t grows (b < 1);
* the one-step coupling: Z_i(t) equals Z_{i-1}(t) plus an independent clan.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Union

from .errors import PrecisionError, SupercriticalGrowthError
from .numerics import QuadratureSpec, DEFAULT_QUAD, integrate
from .distributions import (
    ModGeomParams,
    NegBinParams,
    Pmf,
    lambda_theta,
    modgeom_pmf_table,
    nb_pmf_table,
)
from .metrics import EmpiricalDist, tv_empirical, tv_two_sample
from .rng import RngStream

__all__ = [
    "IBDParams",
    "LawCheckReport",
    "POPULATION_CAP",
    "simulate_ibd",
    "endpoint_sample",
    "check_law",
    "coupling_check",
    "clan_law",
    "nb_law_at",
    "stationary_law",
    "verify_integral_identities",
]

POPULATION_CAP = 10_000_000

Rate = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class IBDParams:
    """Immigration rate (constant or a function of time), per-head birth
    rate b, initial population, and — for callable rates — a dominating
    constant ``a_max`` used by the thinning sampler. Death rate is 1."""

    immigration: Rate
    birth: float = 0.0
    initial: int = 0
    a_max: float | None = None

    def __post_init__(self):
        if not callable(self.immigration):
            a = float(self.immigration)
            if not (a >= 0.0 and math.isfinite(a)):
                raise ValueError("immigration rate must be nonnegative and finite")
        elif self.a_max is None:
            raise ValueError("callable immigration needs a finite dominating a_max")
        if self.a_max is not None and not (self.a_max > 0.0 and math.isfinite(self.a_max)):
            raise ValueError("a_max must be positive and finite")
        if not (self.birth >= 0.0 and math.isfinite(self.birth)):
            raise ValueError("birth rate must be nonnegative and finite")
        if self.initial < 0 or self.initial != int(self.initial):
            raise ValueError("initial population must be a nonnegative integer")


@dataclass(frozen=True)
class LawCheckReport:
    """Outcome of an empirical-vs-target law comparison."""

    tv: float
    n: int
    worst_cell_z: float
    passed: bool
    threshold: float


def simulate_ibd(params: IBDParams, t_end: float, rng: RngStream,
                 cap: int = POPULATION_CAP) -> int:
    """Population at time ``t_end``, simulated event by event.

    Raises SupercriticalGrowthError if the population passes ``cap``.
    """
    if not (t_end > 0.0 and math.isfinite(t_end)):
        raise ValueError("t_end must be positive and finite")
    n = params.initial
    bd = params.birth + 1.0
    s = 0.0
    a = params.immigration
    if not callable(a):
        a = float(a)
        while True:
            rate = a + n * bd
            if rate <= 0.0:
                return n  # extinct and no immigration: absorbed
            s += rng.exponential(rate)
            if s >= t_end:
                return n
            u = rng.uniform() * rate
            if u < a:
                n += 1
            elif u < a + n * params.birth:
                n += 1
            else:
                n -= 1
            if n > cap:
                raise SupercriticalGrowthError(f"population exceeded {cap}")
    a_max = params.a_max
    while True:
        rate = a_max + n * bd
        s += rng.exponential(rate)
        if s >= t_end:
            return n
        u = rng.uniform() * rate
        if u < n * params.birth:
            n += 1
        elif u < n * bd:
            n -= 1
        else:
            # Immigration proposal at rate a_max; (u - n*bd) is uniform on
            # [0, a_max), so accepting below a(s) thins the proposal
            # exactly to the target rate.
            a_s = a(s)
            if a_s > a_max * (1.0 + 1e-12):
                raise ValueError("immigration rate exceeds a_max at t="
                                 f"{s!r}: {a_s!r} > {a_max!r}")
            if u - n * bd < a_s:
                n += 1
        if n > cap:
            raise SupercriticalGrowthError(f"population exceeded {cap}")


def _endpoint_chunk(args) -> Counter:
    params, t_end, seed, stream_base, start, count, cap = args
    out = Counter()
    for j in range(start, start + count):
        out[simulate_ibd(params, t_end, RngStream(seed, stream_base + j), cap)] += 1
    return out


def endpoint_sample(params: IBDParams, t_end: float, n: int, rng: RngStream,
                    workers: int = 1, cap: int = POPULATION_CAP) -> EmpiricalDist:
    """n independent end-point draws; replicate j uses stream_id base + j,
    so the result is byte-identical for any worker count."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seed, base = rng.seed, rng.stream_id
    if workers <= 1:
        total = _endpoint_chunk((params, t_end, seed, base, 0, n, cap))
    else:
        chunk = max(1, -(-n // (4 * workers)))
        jobs = [(params, t_end, seed, base, s, min(chunk, n - s), cap)
                for s in range(0, n, chunk)]
        total = Counter()
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for part in ex.map(_endpoint_chunk, jobs):
                total.update(part)
    return EmpiricalDist(dict(total))


def check_law(samples: EmpiricalDist, law: Pmf, threshold: float) -> LawCheckReport:
    """TV distance between a sample and a law, with the worst cell z-score
    over cells whose expected count is at least 5. Needs n >= 1000."""
    if samples.n < 1000:
        raise PrecisionError("need at least 1000 samples for a TV check")
    tv = tv_empirical(samples, law)
    n = samples.n
    worst = 0.0
    for k in range(law.offset, law.k_end + 1):
        p = float(law.weights[k - law.offset])
        if n * p < 5.0:
            continue
        obs = samples.counts.get(k, 0)
        z = (obs - n * p) / math.sqrt(n * p * (1.0 - p))
        if abs(z) > abs(worst):
            worst = z
    return LawCheckReport(tv=tv, n=n, worst_cell_z=worst,
                          passed=tv <= threshold, threshold=threshold)


def clan_law(b: float, t: float) -> Pmf:
    """Law of one clan of age t (modified geometric)."""
    return modgeom_pmf_table(ModGeomParams(b, t))


def nb_law_at(a: float, b: float, t: float) -> Pmf:
    """Law of the population at time t from an empty start under constant
    immigration a and birth rate b > 0: NB(a/b, theta_t)."""
    if not b > 0.0:
        raise ValueError("b must be positive (use a Poisson law at b = 0)")
    return nb_pmf_table(NegBinParams(a / b, lambda_theta(b, t).theta))


def stationary_law(a: float, b: float) -> Pmf:
    """Stationary law NB(a/b, b) of the population (requires b < 1)."""
    if not 0.0 < b < 1.0:
        raise ValueError("stationarity needs 0 < b < 1")
    return nb_pmf_table(NegBinParams(a / b, b))


def coupling_check(i: int, rp: float, p: float, t: float, n: int,
                   rng: RngStream, threshold: float = 0.02,
                   workers: int = 1) -> LawCheckReport:
    """Two-sample check of the one-step coupling at shifted starts.

    Side A simulates Z_i(t) (start i, immigration rp, birth p); side B
    simulates Z_{i-1}(t) plus an independent single clan of age t. Both
    should follow the same law; the report carries their two-sample TV.
    Works at p = 0 too, where the clan is a survival Bernoulli.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    if n < 1000:
        raise PrecisionError("need at least 1000 samples for a TV check")
    pa = IBDParams(immigration=rp, birth=p, initial=i)
    side_a = endpoint_sample(pa, t, n, rng, workers=workers)
    pb = IBDParams(immigration=rp, birth=p, initial=i - 1)
    pc = IBDParams(immigration=0.0, birth=p, initial=1)
    base_b = rng.substream(n)
    base_c = rng.substream(2 * n)
    counts = Counter()
    for j in range(n):
        z = simulate_ibd(pb, t, base_b.substream(j))
        y = simulate_ibd(pc, t, base_c.substream(j))
        counts[z + y] += 1
    side_b = EmpiricalDist(dict(counts))
    tv = tv_two_sample(side_a, side_b)
    # Worst z-score across cells, pooled two-sample proportions.
    worst = 0.0
    support = set(side_a.counts) | set(side_b.counts)
    for k in support:
        ca = side_a.counts.get(k, 0)
        cb = side_b.counts.get(k, 0)
        pool = (ca + cb) / (2.0 * n)
        if 2.0 * n * pool < 10.0:
            continue
        se = math.sqrt(2.0 * pool * (1.0 - pool) / n)
        z = (ca - cb) / n / se if se > 0 else 0.0
        if abs(z) > abs(worst):
            worst = z
    return LawCheckReport(tv=tv, n=n, worst_cell_z=worst,
                          passed=tv <= threshold, threshold=threshold)


def verify_integral_identities(p: float, spec: QuadratureSpec = DEFAULT_QUAD) -> tuple[float, float]:
    """Evaluate two exact integrals behind the factor bounds.

    With L_t = exp(-(1-p) t):

        I1 = integral_0^inf L_t / sqrt(1 - L_t) dt      = 2 / (1-p)
        I2 = integral_0^inf L_t^2 / sqrt(1 - L_t) dt    = 4 / (3 (1-p))

    Both are computed after the substitution v = 1 - L_t (so dv =
    (1-p)(1-v) dt), which maps them onto (0, 1) with the integrable
    v^{-1/2} singularity at 0, where the quadrature can refine without
    hitting the float-spacing floor.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    q = 1.0 - p

    def g1(v: float) -> float:
        lam = 1.0 - v
        return (lam / math.sqrt(v)) / (q * lam)

    def g2(v: float) -> float:
        lam = 1.0 - v
        return (lam * lam / math.sqrt(v)) / (q * lam)

    i1, _ = integrate(g1, 0.0, 1.0, spec)
    i2, _ = integrate(g2, 0.0, 1.0, spec)
    return i1, i2
