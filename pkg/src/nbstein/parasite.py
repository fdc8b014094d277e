"""Parasite-load scenarios: exposure functionals, W sampling, and bounds.

A host ingests parasites at a seasonal rate a(s) over a season [0, T]; each
ingested clan then evolves as a birth-death family (birth b per head, unit
death rate). The accumulated load W is compared against the negative
binomial NB(abar/b, theta_T) a constant-rate season would give, where
theta_T comes from ``lambda_theta(b, T)``.

The distance is controlled by exposure functionals of the deviation
a(T-t) - abar discounted at rate (1-b):

    A_t     = integral_0^t (a(T-u) - abar) e^{-(1-b) u} du
    A_star  = sup_{t <= T} |A_t|
    R_T     = abar/b + (1-b) A_T / (b (1 - Lambda_T))
    mu_T    = integral_0^T a(T-u) e^{-u} du      (Poisson limit mean)

and the theorem-level bound is

    |A_T| + 16 theta_T A_star (1 + log(1/(1-theta_T)))
                * min{ 2/(1-theta_T), 3/(2 sqrt(R* theta_T (1-theta_T)^3)) }

with R* = abar/b. An aggregate over n hosts with shared (b, T) scales as
24 (1 + log(1/(1-theta))) sqrt(theta) / ((1-theta)^{3/2} sqrt(n Rbar))
times the summed A_star, valid once n Rbar exceeds the threshold shape r0.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from collections import Counter
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import AccuracyError, PrecisionError, PreconditionError
from .numerics import QuadratureSpec, DEFAULT_QUAD, find_root, integrate
from .distributions import NegBinParams, lambda_theta, nb_pmf_table, _modgeom_draw
from .metrics import EmpiricalDist, wasserstein_empirical
from .rng import RngStream
from .stein import compute_r0

__all__ = [
    "ConstantRate",
    "SinusoidRate",
    "PiecewiseRate",
    "TableRate",
    "IngestionRate",
    "ScenarioParams",
    "ExposureSummary",
    "BoundReport",
    "ValidationReport",
    "AggregateReport",
    "AppendixReport",
    "rate_eval",
    "rate_max",
    "compute_exposure",
    "theorem31_bound",
    "nb_step_distance",
    "sample_W",
    "sample_W_empirical",
    "validate_scenario",
    "aggregate_bound",
    "f_j_prime",
    "appendix_check",
]


@dataclass(frozen=True)
class ConstantRate:
    """a(s) = abar."""

    abar: float

    def __post_init__(self):
        _check_abar(self.abar)


@dataclass(frozen=True)
class SinusoidRate:
    """a(s) = abar (1 + amp sin(2 pi (s / period + phase)))."""

    abar: float
    amp: float
    period: float
    phase: float = 0.0

    def __post_init__(self):
        _check_abar(self.abar)
        if not abs(self.amp) <= 1.0:
            raise ValueError("amplitude fraction must lie in [-1, 1]")
        if not (self.period > 0.0 and math.isfinite(self.period)):
            raise ValueError("period must be positive")
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")


@dataclass(frozen=True)
class PiecewiseRate:
    """Constant on each interval between breakpoints: levels[i] applies on
    [breakpoints[i-1], breakpoints[i]), with one more level than breakpoint.
    ``abar`` is the reference mean rate the season is compared against."""

    abar: float
    breakpoints: tuple
    levels: tuple

    def __post_init__(self):
        _check_abar(self.abar)
        bp = tuple(float(x) for x in self.breakpoints)
        lv = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)
        if len(lv) != len(bp) + 1:
            raise ValueError("need exactly one more level than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])) or (bp and bp[0] <= 0.0):
            raise ValueError("breakpoints must be positive and strictly increasing")
        if any(not (v >= 0.0 and math.isfinite(v)) for v in lv):
            raise ValueError("levels must be nonnegative and finite")


@dataclass(frozen=True)
class TableRate:
    """Linear interpolation through (knots, values), clamped outside."""

    abar: float
    knots: tuple
    values: tuple

    def __post_init__(self):
        _check_abar(self.abar)
        kn = tuple(float(x) for x in self.knots)
        va = tuple(float(x) for x in self.values)
        object.__setattr__(self, "knots", kn)
        object.__setattr__(self, "values", va)
        if len(kn) < 2 or len(kn) != len(va):
            raise ValueError("need >= 2 knots and matching values")
        if any(k2 <= k1 for k1, k2 in zip(kn, kn[1:])):
            raise ValueError("knots must be strictly increasing")
        if any(not (v >= 0.0 and math.isfinite(v)) for v in va):
            raise ValueError("values must be nonnegative and finite")


IngestionRate = Union[ConstantRate, SinusoidRate, PiecewiseRate, TableRate]


def _check_abar(abar: float) -> None:
    if not (abar > 0.0 and math.isfinite(abar)):
        raise ValueError("abar must be positive and finite")


def _eval_rate(rate: IngestionRate, s: float) -> float:
    if isinstance(rate, ConstantRate):
        return rate.abar
    if isinstance(rate, SinusoidRate):
        return rate.abar * (1.0 + rate.amp * math.sin(
            2.0 * math.pi * (s / rate.period + rate.phase)))
    if isinstance(rate, PiecewiseRate):
        idx = 0
        for b in rate.breakpoints:
            if s < b:
                break
            idx += 1
        return rate.levels[idx]
    if isinstance(rate, TableRate):
        kn, va = rate.knots, rate.values
        if s <= kn[0]:
            return va[0]
        if s >= kn[-1]:
            return va[-1]
        j = 1
        while kn[j] < s:
            j += 1
        w = (s - kn[j - 1]) / (kn[j] - kn[j - 1])
        return va[j - 1] + w * (va[j] - va[j - 1])
    raise TypeError(f"unknown rate type {type(rate).__name__}")


def rate_eval(rate: IngestionRate, s: float, T: float) -> float:
    """a(s), defined on the season 0 <= s <= T only."""
    if not 0.0 <= s <= T:
        raise ValueError(f"s = {s!r} outside the season [0, {T!r}]")
    return _eval_rate(rate, s)


def rate_max(rate: IngestionRate, T: float) -> float:
    """A constant dominating a(s) on [0, T] (tight for these variants)."""
    if isinstance(rate, ConstantRate):
        return rate.abar
    if isinstance(rate, SinusoidRate):
        return rate.abar * (1.0 + abs(rate.amp))
    if isinstance(rate, PiecewiseRate):
        return max(rate.levels)
    if isinstance(rate, TableRate):
        return max(rate.values)
    raise TypeError(f"unknown rate type {type(rate).__name__}")


def _rate_breaks(rate: IngestionRate, T: float) -> list:
    """Interior points where a(s) is not smooth."""
    if isinstance(rate, PiecewiseRate):
        pts = rate.breakpoints
    elif isinstance(rate, TableRate):
        pts = rate.knots
    else:
        pts = ()
    return [p for p in pts if 0.0 < p < T]


@dataclass(frozen=True)
class ScenarioParams:
    """One host's season: rate shape, birth rate b in (0, 1), horizon T.

    ``abar`` mirrors the rate's reference mean rate.
    """

    rate: IngestionRate
    b: float
    T: float
    abar: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise ValueError("b must lie in (0, 1)")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError("T must be positive and finite")
        object.__setattr__(self, "abar", self.rate.abar)


@dataclass(frozen=True)
class ExposureSummary:
    """Exposure functionals of one scenario (see module docstring)."""

    A_T: float
    A_star: float
    R_T: float
    R_a_star: float
    theta_T: float
    mu_T: float

    def __post_init__(self):
        if self.A_star < abs(self.A_T) - 1e-12:
            raise ValueError("A_star must dominate |A_T|")


@dataclass(frozen=True)
class BoundReport:
    """The theorem-level d_W bound and its factors:
    bound_total = term_A + constant * theta_T * A_star * log_factor * delta_g_factor."""

    bound_total: float
    term_A: float
    term_main: float
    delta_g_factor: float
    log_factor: float
    constant: float = 16.0


@dataclass(frozen=True)
class ValidationReport:
    """Monte-Carlo check of one scenario against its NB approximation."""

    empirical_dW: float
    bound: BoundReport
    mc_halfwidth: float
    passed: bool
    slack_ratio: float
    summary: ExposureSummary
    n: int


@dataclass(frozen=True)
class AggregateReport:
    """Bound for the summed load over n hosts sharing (b, T)."""

    bound: float
    n_hosts: int
    r_bar: float
    n_r_bar: float
    theta_T: float
    r0: float
    sum_A_star: float


def compute_exposure(scenario: ScenarioParams, spec: QuadratureSpec = DEFAULT_QUAD,
                     grid_points: int = 1024) -> ExposureSummary:
    """Evaluate the exposure functionals by panel-wise quadrature.

    A_star is located on a dense backward-time grid (plus the rate's break
    points), refined by root finding wherever a(T-u) - abar changes sign,
    which is exactly where A_t can peak.
    """
    rate, b, T, abar = scenario.rate, scenario.b, scenario.T, scenario.abar
    lam_T, theta_T = lambda_theta(b, T)
    decay = 1.0 - b

    def psi(u: float) -> float:
        return _eval_rate(rate, T - u) - abar

    def integrand_A(u: float) -> float:
        return psi(u) * math.exp(-decay * u)

    def integrand_mu(u: float) -> float:
        return _eval_rate(rate, T - u) * math.exp(-u)

    nodes = np.unique(np.concatenate([
        np.linspace(0.0, T, grid_points + 1),
        np.array([T - p for p in _rate_breaks(rate, T)]),
    ]))
    panel_spec = QuadratureSpec(max(1e-14, spec.abs_tol / (4.0 * len(nodes))),
                                spec.rel_tol, spec.max_depth)
    increments = []
    mu_parts = []
    for u0, u1 in zip(nodes[:-1], nodes[1:]):
        val, _ = integrate(integrand_A, float(u0), float(u1), panel_spec)
        increments.append(val)
        mval, _ = integrate(integrand_mu, float(u0), float(u1), panel_spec)
        mu_parts.append(mval)
    a_vals = np.concatenate([[0.0], np.cumsum(increments)])
    a_T = float(math.fsum(increments))
    mu_T = float(math.fsum(mu_parts))

    candidates = [float(np.max(np.abs(a_vals)))]
    psi_vals = np.array([psi(float(u)) for u in nodes])
    for k in range(len(nodes) - 1):
        if psi_vals[k] * psi_vals[k + 1] < 0.0:
            u_star = find_root(psi, float(nodes[k]), float(nodes[k + 1]), 1e-12)
            seg, _ = integrate(integrand_A, float(nodes[k]), u_star, panel_spec)
            candidates.append(abs(float(a_vals[k]) + seg))
    a_star = max(candidates)

    em = -math.expm1(-decay * T)  # 1 - lam_T, stable
    r_star = abar / b
    r_T = r_star + decay * a_T / (b * em)
    return ExposureSummary(A_T=a_T, A_star=max(a_star, abs(a_T)), R_T=r_T,
                           R_a_star=r_star, theta_T=theta_T, mu_T=mu_T)


def theorem31_bound(summary: ExposureSummary, r0: float | None = None) -> BoundReport:
    """d_W(W, NB(abar/b, theta_T)) bound from the exposure functionals."""
    theta = summary.theta_T
    if not 0.0 < theta < 1.0:
        raise ValueError("theta_T must lie in (0, 1)")
    if not summary.R_a_star > 0.0:
        raise ValueError("R_a_star must be positive")
    log_factor = 1.0 + math.log(1.0 / (1.0 - theta))
    delta_g = min(2.0 / (1.0 - theta),
                  1.5 / math.sqrt(summary.R_a_star * theta * (1.0 - theta) ** 3))
    term_a = abs(summary.A_T)
    term_main = 16.0 * theta * summary.A_star * log_factor * delta_g
    return BoundReport(bound_total=term_a + term_main, term_A=term_a,
                       term_main=term_main, delta_g_factor=delta_g,
                       log_factor=log_factor)


def nb_step_distance(summary: ExposureSummary) -> float:
    """Exact d_W between NB(R_T, theta_T) and NB(R*, theta_T):
    (theta/(1-theta)) |R_T - R*|, the mean shift under cdf dominance."""
    theta = summary.theta_T
    return theta / (1.0 - theta) * abs(summary.R_T - summary.R_a_star)


def sample_W(scenario: ScenarioParams, rng: RngStream) -> int:
    """One season's accumulated load.

    Arrivals are thinned from the dominating constant rate; each accepted
    arrival at time tau contributes an independent clan of age T - tau.
    """
    rate, b, T = scenario.rate, scenario.b, scenario.T
    a_max = rate_max(rate, T)
    if a_max <= 0.0:
        return 0
    total = 0
    tau = 0.0
    while True:
        tau += rng.exponential(a_max)
        if tau >= T:
            return total
        if rng.uniform() * a_max <= _eval_rate(rate, tau):
            lam, theta = lambda_theta(b, T - tau)
            total += _modgeom_draw(lam, theta, rng)


def _sample_w_chunk(args) -> Counter:
    scenario, seed, stream_base, start, count = args
    out = Counter()
    for j in range(start, start + count):
        out[sample_W(scenario, RngStream(seed, stream_base + j))] += 1
    return out


def sample_W_empirical(scenario: ScenarioParams, n: int, rng: RngStream,
                       workers: int = 1) -> EmpiricalDist:
    """n independent W draws (replicate j uses stream_id base + j)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seed, base = rng.seed, rng.stream_id
    if workers <= 1:
        total = _sample_w_chunk((scenario, seed, base, 0, n))
    else:
        chunk = max(1, -(-n // (4 * workers)))
        jobs = [(scenario, seed, base, s, min(chunk, n - s))
                for s in range(0, n, chunk)]
        total = Counter()
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for part in ex.map(_sample_w_chunk, jobs):
                total.update(part)
    return EmpiricalDist(dict(total))


def validate_scenario(scenario: ScenarioParams, n: int, rng: RngStream,
                      workers: int = 1, n_boot: int = 50,
                      spec: QuadratureSpec = DEFAULT_QUAD) -> ValidationReport:
    """Sample W n times and test empirical d_W against the theorem bound.

    The Monte-Carlo half-width is the 97.5% upper quantile of the distance
    over ``n_boot`` bootstrap resamples (upper bound on the statistic's own
    noise, so a zero-bound scenario is judged fairly); the check passes when
    empirical_dW <= bound + mc_halfwidth. Bootstrap streams follow the
    replicate streams (ids base + n + j), keeping every byte reproducible.
    """
    if n < 10_000:
        raise PrecisionError("validation needs n >= 10000 samples")
    summary = compute_exposure(scenario, spec)
    bound = theorem31_bound(summary)
    emp = sample_W_empirical(scenario, n, rng, workers=workers)
    law = nb_pmf_table(NegBinParams(summary.R_a_star, summary.theta_T))
    d_w = wasserstein_empirical(emp, law)

    ks, cs = emp.arrays()
    cdf = np.cumsum(cs / emp.n)
    boots = []
    for j in range(n_boot):
        u = rng.substream(n + j).uniforms(n)
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(ks) - 1)
        counts = np.bincount(idx, minlength=len(ks))
        resample = EmpiricalDist({int(k): int(c) for k, c in zip(ks, counts) if c > 0})
        boots.append(wasserstein_empirical(resample, law))
    boots.sort()
    halfwidth = boots[min(n_boot - 1, math.ceil(0.975 * n_boot) - 1)]
    passed = d_w <= bound.bound_total + halfwidth
    slack = bound.bound_total / d_w if d_w > 0 else math.inf
    return ValidationReport(empirical_dW=d_w, bound=bound, mc_halfwidth=halfwidth,
                            passed=passed, slack_ratio=slack, summary=summary, n=n)


def aggregate_bound(summaries: Sequence[ExposureSummary], n_hosts: int,
                    r0: float | None = None) -> AggregateReport:
    """d_W bound for the total load across hosts sharing theta_T.

    Requires n_hosts * mean(R_T) to exceed the threshold shape r0; the
    bound scales like 1/sqrt(n_hosts * Rbar).
    """
    if n_hosts < 1 or len(summaries) != n_hosts:
        raise ValueError("need one summary per host")
    if r0 is None:
        r0 = compute_r0()
    theta = summaries[0].theta_T
    if any(abs(s.theta_T - theta) > 1e-9 for s in summaries):
        raise ValueError("hosts must share theta_T (same b and T)")
    r_bar = math.fsum(s.R_T for s in summaries) / n_hosts
    n_r_bar = n_hosts * r_bar
    if not n_r_bar > r0:
        raise PreconditionError(
            f"n * Rbar = {n_r_bar!r} must exceed r0 = {r0!r}")
    sum_a_star = math.fsum(s.A_star for s in summaries)
    log_factor = 1.0 + math.log(1.0 / (1.0 - theta))
    bound = (24.0 * log_factor * math.sqrt(theta)
             / ((1.0 - theta) ** 1.5 * math.sqrt(n_r_bar)) * sum_a_star)
    return AggregateReport(bound=bound, n_hosts=n_hosts, r_bar=r_bar,
                           n_r_bar=n_r_bar, theta_T=theta, r0=r0,
                           sum_A_star=sum_a_star)


# --- appendix-level inequalities --------------------------------------------

def f_j_prime(theta: float, theta_T: float, j: int) -> float:
    """d/dtheta of f_j(theta) = (theta_T (j-1) - j theta) theta^{j-2} (1-theta)^2.

    For j = 2 this simplifies to -2 (1-theta) (1 + theta_T - 3 theta); at
    theta = theta_T the general form collapses to
    2 theta_T^{j-2} (1-theta_T) (1 - j (1-theta_T)).
    """
    if j < 2 or j != int(j):
        raise ValueError("j must be an integer >= 2")
    if not (0.0 <= theta < 1.0 and 0.0 < theta_T < 1.0):
        raise ValueError("theta in [0, 1) and theta_T in (0, 1) required")
    if j == 2:
        return -2.0 * (1.0 - theta) * (1.0 + theta_T - 3.0 * theta)
    u = theta_T * (j - 1.0) - j * theta
    inner = (-j * theta * (1.0 - theta)
             + ((j - 2.0) * (1.0 - theta) - 2.0 * theta) * u)
    return theta ** (j - 3) * (1.0 - theta) * inner


@dataclass(frozen=True)
class AppendixReport:
    """Numerical audit of the variation-sum chain behind the 16-constant.

    lhs is sum_{j>=2} (j-1) * integral_0^{theta_T} |f_j'| (plus a certified
    truncation bound); it is checked against the closed form rhs_closed =
    -6x + 14x^2 - 14/3 x^3 - 8(1+x) log(1-x), its absorbed form
    rhs_absorbed = 2x + 14x^2 - 14/3 x^3 + 16x log(1/(1-x)), and the final
    x (37/3 + 16 log(1/(1-x))) envelope. k1_main_sufficient reports whether
    the smaller main-text constant 34/3 would also have sufficed at this x.
    """

    theta_T: float
    lhs: float
    rhs_closed: float
    rhs_absorbed: float
    f2_integral: float
    f2_integral_bound: float
    geom_identity_err: float
    j_truncated: int
    per_j_ok: bool
    chain_ok: bool
    k1_appendix: float
    k1_main: float
    k1_main_sufficient: bool
    passed: bool


def _abs_fjp_integral(theta_T: float, j: int, spec: QuadratureSpec) -> float:
    val, _ = integrate(lambda th: abs(f_j_prime(th, theta_T, j)), 0.0, theta_T, spec)
    return val


def appendix_check(theta_T: float, tol: float = 1e-9,
                   spec: QuadratureSpec = DEFAULT_QUAD) -> AppendixReport:
    """Verify the inequality chain that yields the factor-16 constant."""
    if not 0.0 < theta_T < 1.0:
        raise ValueError("theta_T must lie in (0, 1)")
    x = theta_T
    quad = QuadratureSpec(min(1e-12, spec.abs_tol), spec.rel_tol, spec.max_depth)

    # f2 term and its stated polynomial bound.
    f2_int = _abs_fjp_integral(x, 2, quad)
    f2_bound = 4.0 * x * x + 2.0 * x - 3.0 * x ** 3
    per_j_ok = f2_int <= f2_bound + 1e-9

    # Sum (j-1) * integral |f_j'| until the analytic tail bound is negligible:
    # integral |f_j'| <= 11 theta_T^{j-1} for j >= 3, so the terms from j on
    # are below 11 sum_{m >= j-1} m x^m = 11 x^{j-1} ((j-1) - (j-2) x) / (1-x)^2.
    def tail_from(jj: int) -> float:
        return 11.0 * x ** (jj - 1) * ((jj - 1.0) - (jj - 2.0) * x) / (1.0 - x) ** 2

    lhs_parts = [f2_int]
    j = 2
    while True:
        j += 1
        if tail_from(j) < 0.5 * tol or j > 5000:
            break
        i_j = _abs_fjp_integral(x, j, quad)
        rhs_j = (3.0 * x ** (j - 1) * (1.0 - x) ** 2
                 + 4.0 * x ** (j - 1) * (2.0 / (j - 2.0) - x * x / (j + 1.0)
                                         - x / (j - 1.0)))
        if i_j > rhs_j + 1e-9:
            per_j_ok = False
        lhs_parts.append((j - 1.0) * i_j)
    trunc = tail_from(j)
    lhs = math.fsum(lhs_parts) + trunc

    log_inv = math.log(1.0 / (1.0 - x))
    rhs_closed = (-6.0 * x + 14.0 * x * x - 14.0 / 3.0 * x ** 3
                  + 8.0 * (1.0 + x) * log_inv)
    rhs_absorbed = (2.0 * x + 14.0 * x * x - 14.0 / 3.0 * x ** 3
                    + 16.0 * x * log_inv)
    envelope_37 = x * (37.0 / 3.0 + 16.0 * log_inv)
    envelope_34 = x * (34.0 / 3.0 + 16.0 * log_inv)
    chain_ok = (lhs <= rhs_closed + 1e-8
                and rhs_closed <= rhs_absorbed + 1e-12
                and x + rhs_absorbed <= envelope_37 + 1e-9)
    k1_main_sufficient = x + rhs_absorbed <= envelope_34 + 1e-12

    # Geometric identity sum_{j>=2} (j-1)(1-x)^2 x^{j-1} = x, summed with an
    # exact closed-form remainder.
    m_hi = max(3, int(math.ceil(math.log(1e-17) / math.log(x))) if x > 1e-12 else 3)
    partial = math.fsum(m * (1.0 - x) ** 2 * x ** m for m in range(1, m_hi))
    remainder = x ** m_hi * (m_hi - (m_hi - 1.0) * x)
    geom_err = abs(partial + remainder - x)

    passed = per_j_ok and chain_ok and geom_err <= 1e-12
    return AppendixReport(theta_T=x, lhs=lhs, rhs_closed=rhs_closed,
                          rhs_absorbed=rhs_absorbed, f2_integral=f2_int,
                          f2_integral_bound=f2_bound,
                          geom_identity_err=geom_err, j_truncated=j,
                          per_j_ok=per_j_ok, chain_ok=chain_ok,
                          k1_appendix=37.0 / 3.0, k1_main=34.0 / 3.0,
                          k1_main_sufficient=k1_main_sufficient, passed=passed)
