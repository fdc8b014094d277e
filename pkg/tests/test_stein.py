"""Stein-equation solver: hand solutions, certificates, extremal structure."""

import math

import numpy as np
import pytest

from nbstein.distributions import NegBinParams
from nbstein.errors import AccuracyError
from nbstein.numerics import log_gamma
from nbstein.rng import RngStream
from nbstein.stein import (K_TARGET, LipschitzFn, SteinSolution,
                           combine_lipschitz, compute_r0, extremal_f,
                           measure_factors, nb_expectation_lipschitz,
                           solve_stein, stein_residual, theorem1_bound)

R_GRID = (0.4, 0.6, 1.0, 2.0, 5.0, 20.0)
P_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


# --- test function class -----------------------------------------------------

def test_lipschitz_values_and_call():
    f = LipschitzFn(-1.0, (1.0, 1.0), -1.0)  # wedge at 2 shifted
    assert f(0) == -1.0 and f(1) == 0.0 and f(2) == 1.0
    assert f(3) == 0.0 and f(5) == -2.0
    assert f.values(6).tolist() == [-1.0, 0.0, 1.0, 0.0, -1.0, -2.0]
    with pytest.raises(ValueError):
        f(-1)


def test_lipschitz_validation():
    with pytest.raises(ValueError):
        LipschitzFn(0.0, (1.5,), 0.0)
    with pytest.raises(ValueError):
        LipschitzFn(0.0, (), 2.0)
    with pytest.raises(ValueError):
        LipschitzFn(math.inf, (), 0.0)


def test_extremal_f_is_negative_wedge():
    f = extremal_f(3)
    for k in range(10):
        assert f(k) == -abs(k - 3)
    with pytest.raises(ValueError):
        extremal_f(-1)


def test_combine_lipschitz():
    f = combine_lipschitz(0.5, extremal_f(2), 0.5, LipschitzFn.neg_identity())
    for k in range(8):
        assert f(k) == pytest.approx(0.5 * -abs(k - 2) + 0.5 * -k)


# --- expectations -------------------------------------------------------------

def test_expectation_neg_identity_is_minus_mean():
    got = nb_expectation_lipschitz(LipschitzFn.neg_identity(),
                                   NegBinParams(2.0, 0.5))
    assert got == pytest.approx(-2.0, abs=1e-12)


def test_expectation_wedge_geometric():
    # E -|W - 1| for W ~ Geom(p=1/2): sum directly = -1
    got = nb_expectation_lipschitz(extremal_f(1), NegBinParams(1.0, 0.5))
    assert got == pytest.approx(-1.0, abs=1e-12)


def test_expectation_constant():
    got = nb_expectation_lipschitz(LipschitzFn.constant(3.25),
                                   NegBinParams(0.7, 0.2))
    assert got == pytest.approx(3.25, abs=1e-12)


# --- solving the equation ------------------------------------------------------

def test_hand_solution_geometric_wedge():
    # r=1, p=1/2, f = -|x-1|: mu = -1 and g(1..4) = 0, 1, 4/3, 3/2
    sol = solve_stein(extremal_f(1), NegBinParams(1.0, 0.5))
    assert sol.mu_f == pytest.approx(-1.0, abs=1e-12)
    assert sol.g[1] == pytest.approx(0.0, abs=1e-9)
    assert sol.g[2] == pytest.approx(1.0, abs=1e-9)
    assert sol.g[3] == pytest.approx(4.0 / 3.0, abs=1e-9)
    assert sol.g[4] == pytest.approx(1.5, abs=1e-9)


def test_neg_identity_solution_is_constant():
    # f(x) = -x solves with g identically 1/(1-p)
    for r, p in [(1.0, 0.5), (2.0, 0.3), (5.0, 0.9), (0.4, 0.1)]:
        sol = solve_stein(LipschitzFn.neg_identity(), NegBinParams(r, p))
        assert np.max(np.abs(sol.g[1:] - 1.0 / (1.0 - p))) < 1e-9, (r, p)


def test_constant_f_gives_zero_solution():
    sol = solve_stein(LipschitzFn.constant(2.5), NegBinParams(2.0, 0.5))
    assert np.max(np.abs(sol.g)) < 1e-12
    assert sol.mu_f == pytest.approx(2.5)


def test_residual_certificate_on_grid():
    for r in R_GRID:
        for p in P_GRID:
            params = NegBinParams(r, p)
            for i in (0, 2, 25):
                sol = solve_stein(extremal_f(i), params)
                check = stein_residual(sol, extremal_f(i))
                assert check < 5e-10 * max(1.0, 2.0 * sol.N), (r, p, i)


def test_stein_residual_detects_wrong_solution():
    params = NegBinParams(1.0, 0.5)
    f = extremal_f(1)
    good = solve_stein(f, params, N=4)
    zeroed = SteinSolution(params=params, g=np.zeros(6), N=4,
                           mu_f=good.mu_f, residual_max=0.0, tail_note=0.0)
    # with g == 0 the residual is max |f(i) - mu| over 0..4, which is 2
    assert stein_residual(zeroed, f) == pytest.approx(2.0, abs=1e-12)
    bumped_g = good.g.copy()
    bumped_g[2] += 1e-3
    bumped = SteinSolution(params=params, g=bumped_g, N=4,
                           mu_f=good.mu_f, residual_max=0.0, tail_note=0.0)
    # g(2) enters as p(r+1)g(2) at i=1 and as -2 g(2) at i=2
    want = max(0.5 * 2.0 * 1e-3, 2.0 * 1e-3)
    assert stein_residual(bumped, f) == pytest.approx(want, rel=1e-6)


def test_forward_recursion_agreement():
    # marching the equation upward from g(1) is exact in principle but
    # amplifies error like p^{-i}, so compare only within that horizon
    for r, p in [(2.0, 0.5), (1.0, 0.3), (5.0, 0.7)]:
        params = NegBinParams(r, p)
        f = extremal_f(3)
        sol = solve_stein(f, params)
        mu = sol.mu_f
        horizon = min(sol.N, int(math.log(1e6) / math.log(1.0 / p)))
        g_fwd = [0.0, (f(0) - mu) / (p * r)]
        for i in range(1, horizon):
            g_fwd.append((i * g_fwd[i] + (f(i) - mu)) / (p * (r + i)))
        for i in range(1, horizon):
            assert abs(g_fwd[i] - sol.g[i]) < 1e-7, (r, p, i)


def test_solution_linearity():
    params = NegBinParams(2.0, 0.4)
    f, h = extremal_f(2), LipschitzFn.neg_identity()
    combo = combine_lipschitz(0.3, f, 0.5, h)
    sol_f = solve_stein(f, params)
    sol_h = solve_stein(h, params)
    sol_c = solve_stein(combo, params)
    want = 0.3 * sol_f.g + 0.5 * sol_h.g
    assert np.max(np.abs(sol_c.g - want)) < 1e-10


def test_shift_invariance():
    params = NegBinParams(1.5, 0.6)
    f = extremal_f(4)
    shifted = LipschitzFn(f.f0 + 7.0, f.increments, f.tail_slope)
    a, b = solve_stein(f, params), solve_stein(shifted, params)
    assert np.max(np.abs(a.g - b.g)) < 1e-11


def test_negation_symmetry():
    params = NegBinParams(2.0, 0.5)
    f = extremal_f(3)
    neg = combine_lipschitz(-1.0, f, 0.0, LipschitzFn.constant(0.0))
    a, b = solve_stein(f, params), solve_stein(neg, params)
    assert np.max(np.abs(a.g + b.g)) < 1e-10


def test_wedges_maximise_increments():
    # |g_f(i+1) - g_f(i)| over Lipschitz f is attained by the wedge at i
    params = NegBinParams(2.0, 0.5)
    rng = RngStream(41, 0)
    wedge_incr = {}
    for i in range(1, 21):
        sol = solve_stein(extremal_f(i), params)
        wedge_incr[i] = abs(float(sol.g[i + 1] - sol.g[i]))
    for trial in range(200):
        incs = tuple(2.0 * rng.uniform() - 1.0 for _ in range(30))
        slope = 2.0 * rng.uniform() - 1.0
        f = LipschitzFn(10.0 * rng.uniform() - 5.0, incs, slope)
        sol = solve_stein(f, params)
        for i in range(1, 21):
            got = abs(float(sol.g[i + 1] - sol.g[i]))
            assert got <= wedge_incr[i] + 1e-9, (trial, i)


def test_underflow_guard():
    with pytest.raises(AccuracyError):
        solve_stein(extremal_f(1), NegBinParams(0.5, 0.1), N=6000)


# --- r0 and the proved bounds ---------------------------------------------------

def test_r0_value_and_bracket():
    r0 = compute_r0()
    # the defining ratio straddles the target on [1, 4]
    h1 = math.exp(log_gamma(0.5) - log_gamma(1.0))
    h4 = math.exp(log_gamma(3.5) - log_gamma(4.0))
    assert h1 == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert h1 > K_TARGET > h4
    assert K_TARGET == pytest.approx(0.375 * math.sqrt(2.0 * math.e), rel=1e-15)
    # the solution itself
    ratio = math.exp(log_gamma(r0 - 0.5) - log_gamma(r0))
    assert ratio == pytest.approx(K_TARGET, abs=1e-11)
    assert 1.41 < math.sqrt(r0) <= 1.427


def test_r0_ratio_monotone():
    vals = [math.exp(log_gamma(r - 0.5) - log_gamma(r)) for r in (1.0, 2.0, 3.0, 4.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_theorem1_bound_values():
    b = theorem1_bound(NegBinParams(1.0, 0.5))
    assert b.G1_bound == pytest.approx(2.0)
    c1, c2, c3 = b.components
    assert c1 == pytest.approx(4.0)
    assert c2 == pytest.approx(6.0)
    assert c3 == pytest.approx(4.0 * math.sqrt(compute_r0()), rel=1e-12)
    assert b.G2_bound == pytest.approx(4.0)


def test_theorem1_poisson_limit():
    # r -> inf, p -> 0 with rp = 4: components approach (2, 1, sqrt(r0/4))
    b = theorem1_bound(NegBinParams(4e6, 1e-6))
    c1, c2, c3 = b.components
    assert abs(c1 - 2.0) < 1e-4
    assert abs(c2 - 1.0) < 1e-4
    assert abs(c3 - math.sqrt(compute_r0() / 4.0)) < 1e-4
    assert abs(b.G2_bound - math.sqrt(compute_r0() / 4.0)) < 1e-4


# --- measured factors ------------------------------------------------------------

def test_measured_factors_geometric():
    rep = measure_factors(NegBinParams(1.0, 0.5))
    assert rep.G1_measured == pytest.approx(2.0, abs=1e-9)
    assert rep.G2_measured == pytest.approx(1.0, abs=1e-9)
    assert rep.argmax_i == 1
    assert rep.G2_measured <= rep.G2_bound + 1e-9


def test_measured_factors_respect_bounds():
    for r, p in [(0.6, 0.3), (2.0, 0.7), (5.0, 0.5)]:
        rep = measure_factors(NegBinParams(r, p))
        assert rep.G1_measured == pytest.approx(1.0 / (1.0 - p), abs=1e-9)
        assert rep.G2_measured <= rep.G2_bound + 1e-9
