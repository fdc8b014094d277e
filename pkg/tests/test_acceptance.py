"""Acceptance battery: fourteen end-to-end checks at full scale.

One test per criterion, in order; each prints a single PASS line with its
measured runtime and asserts the stated tolerance and budget. Monte-Carlo
criteria serialize their raw results into module-level payloads; the final
reproducibility criterion re-executes them from the same seeds and requires
byte-identical payloads.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the PASS
lines inline). Full run takes a few minutes single-threaded.
"""

import hashlib
import math
import time

import numpy as np
import pytest

from nbstein.distributions import (
    ModGeomParams,
    NegBinParams,
    modgeom_moments,
    nb_moments,
    nb_pmf_max,
    nb_pmf_table,
    nb_truncation,
    pmf_max_bounds,
    poisson_pmf_table,
)
from nbstein.grids import (
    APPENDIX_THETAS,
    BATTERY,
    CLAN_B_GRID,
    CLAN_T_GRID,
    COUPLING_POINTS,
    COUPLING_STARTS,
    IDENTITY_PS,
    NB_GRID,
    NB_LAW_BT,
    POISSON_LIMIT_NB,
    POISSON_LIMIT_SCENARIO,
    RATIO_GRID,
    R_GRID,
    STATIONARY_POINT,
)
from nbstein.ibd import (
    IBDParams,
    clan_law,
    coupling_check,
    endpoint_sample,
    nb_law_at,
    stationary_law,
    verify_integral_identities,
)
from nbstein.metrics import tv_empirical, wasserstein_pmf
from nbstein.numerics import log_gamma, rng_stream
from nbstein.parasite import (
    appendix_check,
    compute_exposure,
    f_j_prime,
    nb_step_distance,
    sample_W_empirical,
    validate_scenario,
)
from nbstein.stein import (
    LipschitzFn,
    compute_r0,
    extremal_f,
    measure_factors,
    nb_expectation_lipschitz,
    solve_stein,
    stein_residual,
    theorem1_bound,
)

SEED = 20260815
N_MC = 100_000

# Raw result payloads from the Monte-Carlo criteria, keyed by section name;
# the reproducibility criterion rebuilds each and compares bytes.
_PAYLOADS: dict[str, str] = {}


def _stream(criterion: int, row: int):
    # Wide stride: samplers substream per replicate (offsets < n), so rows
    # spaced 2^32 apart can never collide.
    return rng_stream(SEED, (criterion * 64 + row) << 32)


def _report(criterion: int, elapsed: float, budget: float, detail: str) -> None:
    assert elapsed < budget, f"criterion {criterion} took {elapsed:.1f}s >= {budget}s"
    print(f"PASS criterion {criterion:>2}: {detail} [{elapsed:.1f}s < {budget:.0f}s]")


def _sample_moments(emp):
    """(m1, m2, SE(m1), SE(m2)) from an EmpiricalDist, plug-in variances."""
    ks, cs = emp.arrays()
    w = cs / emp.n
    kf = ks.astype(float)
    m1 = float((kf * w).sum())
    m2 = float((kf ** 2 * w).sum())
    m4 = float((kf ** 4 * w).sum())
    se1 = math.sqrt(max(m2 - m1 * m1, 0.0) / emp.n)
    se2 = math.sqrt(max(m4 - m2 * m2, 0.0) / emp.n)
    return m1, m2, se1, se2


def test_criterion_01_stein_residual_grid():
    t0 = time.perf_counter()
    worst_rel = 0.0
    for params in NB_GRID:
        mean, var = nb_moments(params)
        i_max = int(math.ceil(nb_pmf_max(params)[0] + 10.0 * math.sqrt(var)))
        N = max(nb_truncation(params), i_max + 50)
        for i in range(i_max + 1):
            f = extremal_f(i)
            sol = solve_stein(f, params, N)
            res = stein_residual(sol, f)  # independent recomputation
            mu = nb_expectation_lipschitz(f, params)
            scale = max(1.0, float(np.max(np.abs(f.values(N + 1) - mu))))
            assert res <= 1e-10 * scale, (params, i, res, scale)
            worst_rel = max(worst_rel, res / scale)
    _report(1, time.perf_counter() - t0, 30.0,
            f"residual <= 1e-10*scale on 54-point grid, worst {worst_rel:.2e}")


def test_criterion_02_g1_exact():
    t0 = time.perf_counter()
    worst = 0.0
    for params in NB_GRID:
        sol = solve_stein(LipschitzFn.neg_identity(), params)
        g1 = float(np.max(sol.g[1:]))
        err = abs(g1 - 1.0 / (1.0 - params.p))
        assert err <= 1e-9, (params, g1)
        worst = max(worst, err)
    _report(2, time.perf_counter() - t0, 10.0,
            f"sup g equals 1/(1-p) on the grid, worst err {worst:.2e}")


def test_criterion_03_g2_certified():
    t0 = time.perf_counter()
    slack = math.inf
    for params in NB_GRID:
        rep = measure_factors(params)
        assert rep.G2_measured <= rep.G2_bound + 1e-9, (params, rep)
        slack = min(slack, rep.G2_bound - rep.G2_measured)
    # hand value at (1, 1/2): the first difference of g for the wedge at 1
    sol = solve_stein(extremal_f(1), NegBinParams(1.0, 0.5))
    delta = float(sol.g[2] - sol.g[1])
    assert abs(delta - 1.0) <= 1e-9
    _report(3, time.perf_counter() - t0, 60.0,
            f"measured G2 within bound on the grid (min slack {slack:.3f}), "
            f"hand delta-g(1) = {delta:.12f}")


def test_criterion_04_r0_bracket():
    t0 = time.perf_counter()
    r0 = compute_r0(tol=1e-12)
    target = 3.0 * math.sqrt(2.0 * math.e) / 8.0

    def h(r: float) -> float:
        return math.exp(log_gamma(r - 0.5) - log_gamma(r)) - target

    # the root must sit inside a width-1e-12 sign-changing bracket
    assert h(r0 - 5e-13) * h(r0 + 5e-13) < 0.0
    assert 1.41 < math.sqrt(r0) <= 1.427
    _report(4, time.perf_counter() - t0, 1.0,
            f"r0 = {r0:.15f}, sqrt(r0) = {math.sqrt(r0):.15f} in (1.41, 1.427]")


def test_criterion_05_integral_identities():
    t0 = time.perf_counter()
    worst = 0.0
    for p in IDENTITY_PS:
        i1, i2 = verify_integral_identities(p)
        e1 = abs(i1 - 2.0 / (1.0 - p))
        e2 = abs(i2 - 4.0 / (3.0 * (1.0 - p)))
        assert e1 <= 1e-8 and e2 <= 1e-8, (p, i1, i2)
        worst = max(worst, e1, e2)
    _report(5, time.perf_counter() - t0, 1.0,
            f"both identities within 1e-8 at p in {IDENTITY_PS}, worst {worst:.2e}")


def _run_clan_section():
    """TV and two moment z-scores for every clan grid point; returns
    (payload, worst_tv, worst_abs_z)."""
    rows = []
    worst_tv, worst_z = 0.0, 0.0
    row = 0
    for b in CLAN_B_GRID:
        for t in CLAN_T_GRID:
            emp = endpoint_sample(IBDParams(0.0, b, 1), t, N_MC, _stream(6, row))
            row += 1
            tv = tv_empirical(emp, clan_law(b, t))
            em1, em2 = modgeom_moments(ModGeomParams(b, t))
            m1, m2, se1, se2 = _sample_moments(emp)
            z1 = (m1 - em1) / se1
            z2 = (m2 - em2) / se2
            worst_tv = max(worst_tv, tv)
            worst_z = max(worst_z, abs(z1), abs(z2))
            rows.append((b, t, sorted(emp.counts.items()), repr(tv)))
    return repr(rows), worst_tv, worst_z


def test_criterion_06_clan_law():
    t0 = time.perf_counter()
    payload, worst_tv, worst_z = _run_clan_section()
    _PAYLOADS["clan"] = payload
    assert worst_tv <= 0.015
    assert worst_z <= 3.0
    # the stated critical-case second moment, directly
    for t in CLAN_T_GRID:
        assert modgeom_moments(ModGeomParams(1.0, t))[1] == pytest.approx(
            1.0 + 2.0 * t, abs=1e-12)
    _report(6, time.perf_counter() - t0, 120.0,
            f"clan law on 15 (b,t) points: worst TV {worst_tv:.4f} <= 0.015, "
            f"worst moment |z| {worst_z:.2f} <= 3")


def _run_population_section():
    """TV for the NB-law grid plus the long-horizon stationary point."""
    rows = []
    worst_tv = 0.0
    row = 0
    for ratio in RATIO_GRID:
        for b, t in NB_LAW_BT:
            a = ratio * b
            emp = endpoint_sample(IBDParams(a, b, 0), t, N_MC, _stream(7, row))
            row += 1
            tv = tv_empirical(emp, nb_law_at(a, b, t))
            worst_tv = max(worst_tv, tv)
            rows.append((a, b, t, sorted(emp.counts.items()), repr(tv)))
    ratio, b, horizon = STATIONARY_POINT
    a = ratio * b
    emp = endpoint_sample(IBDParams(a, b, 0), horizon, N_MC, _stream(7, row))
    tv_stat = tv_empirical(emp, stationary_law(a, b))
    rows.append(("stationary", a, b, sorted(emp.counts.items()), repr(tv_stat)))
    return repr(rows), worst_tv, tv_stat


def test_criterion_07_population_law():
    t0 = time.perf_counter()
    payload, worst_tv, tv_stat = _run_population_section()
    _PAYLOADS["population"] = payload
    assert worst_tv <= 0.015
    assert tv_stat <= 0.015
    _report(7, time.perf_counter() - t0, 180.0,
            f"population law on 16 (a,b,t) points: worst TV {worst_tv:.4f}; "
            f"stationary TV {tv_stat:.4f}")


def _run_coupling_section():
    rows = []
    worst_tv = 0.0
    row = 0
    for rp, p, t in COUPLING_POINTS:
        for i in COUPLING_STARTS:
            rep = coupling_check(i, rp, p, t, N_MC, _stream(8, row), threshold=0.02)
            row += 1
            assert rep.passed, (i, rp, p, t, rep.tv)
            worst_tv = max(worst_tv, rep.tv)
            rows.append((i, rp, p, t, repr(rep.tv), repr(rep.worst_cell_z)))
    return repr(rows), worst_tv


def test_criterion_08_coupling():
    t0 = time.perf_counter()
    payload, worst_tv = _run_coupling_section()
    _PAYLOADS["coupling"] = payload
    _report(8, time.perf_counter() - t0, 120.0,
            f"one-step coupling at starts (1, 3): worst two-sample TV "
            f"{worst_tv:.4f} <= 0.02")


def _run_maxpmf_section():
    rows = []
    for params in NB_GRID:
        if params.r <= 0.5:
            continue
        exact = nb_pmf_max(params)[1]
        bounds = pmf_max_bounds(params)
        assert exact <= bounds.phillips, (params, exact, bounds.phillips)
        rows.append((params.r, params.p, repr(exact), repr(bounds.phillips)))
    krs = [pmf_max_bounds(NegBinParams(r, 0.5)).k_r for r in R_GRID if r > 0.5]
    assert all(a > b for a, b in zip(krs, krs[1:])), krs
    rows.append(("k_r", [repr(k) for k in krs]))
    return repr(rows)


def test_criterion_09_max_pmf_bound():
    t0 = time.perf_counter()
    _PAYLOADS["maxpmf"] = _run_maxpmf_section()
    _report(9, time.perf_counter() - t0, 5.0,
            "exact max pmf within the sqrt((1-p)/(2erp))*K_r bound for r > 1/2; "
            "K_r decreasing")


def _run_battery_section():
    rows = []
    reports = []
    for row, (name, scen) in enumerate(BATTERY):
        rep = validate_scenario(scen, 200_000, _stream(10, row))
        reports.append((name, rep))
        rows.append((name, repr(rep.empirical_dW), repr(rep.mc_halfwidth),
                     repr(rep.bound.bound_total)))
    return repr(rows), reports


def test_criterion_10_scenario_battery():
    t0 = time.perf_counter()
    payload, reports = _run_battery_section()
    _PAYLOADS["battery"] = payload
    for name, rep in reports:
        if name == "constant":
            assert rep.bound.bound_total == 0.0
            assert rep.empirical_dW <= rep.mc_halfwidth, rep
        assert rep.passed, (name, rep.empirical_dW, rep.bound.bound_total)
    detail = ", ".join(f"{name} dW={rep.empirical_dW:.3f}" for name, rep in reports)
    _report(10, time.perf_counter() - t0, 300.0, f"battery at n=2e5: {detail}")


def test_criterion_11_nb_step():
    t0 = time.perf_counter()
    for name, scen in BATTERY:
        s = compute_exposure(scen)
        step = nb_step_distance(s)
        assert step == pytest.approx(abs(s.A_T), abs=1e-12)
        d = wasserstein_pmf(nb_pmf_table(NegBinParams(s.R_T, s.theta_T)),
                            nb_pmf_table(NegBinParams(s.R_a_star, s.theta_T)))
        # same-theta NB laws are stochastically ordered in the shape, so the
        # distance equals the mean gap exactly
        assert d == pytest.approx(step, abs=1e-9), (name, d, step)
    _report(11, time.perf_counter() - t0, 5.0,
            "NB-vs-NB step distance equals |A_T| within 1e-9 on the battery")


def test_criterion_12_appendix_chain():
    t0 = time.perf_counter()
    worst_gap = math.inf
    for theta in APPENDIX_THETAS:
        rep = appendix_check(theta)
        assert rep.passed, (theta, rep.lhs, rep.rhs_closed)
        assert rep.lhs <= rep.rhs_closed + 1e-9
        worst_gap = min(worst_gap, rep.rhs_closed - rep.lhs)
    # derivative formula against central differences of f_j itself
    h = 1e-5
    for theta_T in (0.3, 0.7):
        for j in (2, 3, 5, 9):
            for theta in (0.1, 0.45, 0.8 * theta_T):
                def f_j(th: float) -> float:
                    return ((theta_T * (j - 1) - j * th)
                            * th ** (j - 2) * (1.0 - th) ** 2)

                fd = (f_j(theta + h) - f_j(theta - h)) / (2.0 * h)
                assert fd == pytest.approx(
                    f_j_prime(theta, theta_T, j), abs=5e-8)
    _report(12, time.perf_counter() - t0, 30.0,
            f"variation sum within closed form on 9 thetas (min gap "
            f"{worst_gap:.2e}); f_j' matches finite differences")


def test_criterion_13_poisson_limits():
    t0 = time.perf_counter()
    bound = theorem1_bound(POISSON_LIMIT_NB)
    lam = POISSON_LIMIT_NB.r * POISSON_LIMIT_NB.p
    c1, c2, c3 = bound.components
    assert c1 == pytest.approx(2.0, abs=1e-4)
    assert c2 == pytest.approx(1.0, abs=1e-4)
    assert c3 == pytest.approx(math.sqrt(compute_r0() / lam), abs=1e-4)
    s = compute_exposure(POISSON_LIMIT_SCENARIO)
    emp = sample_W_empirical(POISSON_LIMIT_SCENARIO, N_MC, _stream(13, 0))
    tv = tv_empirical(emp, poisson_pmf_table(s.mu_T))
    assert tv <= 0.02
    _report(13, time.perf_counter() - t0, 120.0,
            f"limit components ({c1:.5f}, {c2:.5f}, {c3:.5f}); "
            f"TV to Poisson(mu_T) = {tv:.4f} <= 0.02 at b = 1e-4")


def test_criterion_14_reproducibility():
    t0 = time.perf_counter()
    builders = {
        "clan": lambda: _run_clan_section()[0],
        "population": lambda: _run_population_section()[0],
        "coupling": lambda: _run_coupling_section()[0],
        "maxpmf": _run_maxpmf_section,
        "battery": lambda: _run_battery_section()[0],
    }
    for name, build in builders.items():
        first = _PAYLOADS.get(name) or build()  # filled by criteria 6-10
        second = build()
        ha = hashlib.sha256(first.encode()).hexdigest()
        hb = hashlib.sha256(second.encode()).hexdigest()
        assert ha == hb, f"{name} rerun diverged"
    _report(14, time.perf_counter() - t0, 600.0,
            "criteria 6-10 re-executed byte-identically from the same seeds")
