"""Versioned parameter grids and the scenario battery.

Every canned check references these by version so reports stay comparable
across runs; bump GRID_VERSION when any entry changes.
"""

from __future__ import annotations

from .distributions import NegBinParams
from .parasite import (
    ConstantRate,
    PiecewiseRate,
    ScenarioParams,
    SinusoidRate,
    TableRate,
)

GRID_VERSION = "1"

# (r, p) grid for factor measurement and pmf checks.
R_GRID = (0.4, 0.6, 1.0, 2.0, 5.0, 20.0)
P_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
NB_GRID = tuple(NegBinParams(r, p) for r in R_GRID for p in P_GRID)

# Clan-law grid (per-head birth rate, observation horizon).
CLAN_B_GRID = (0.0, 0.3, 0.7, 1.0, 1.2)
CLAN_T_GRID = (0.5, 1.0, 3.0)

# Population-law grid: immigration/birth ratios at selected (b, t) points.
RATIO_GRID = (0.5, 1.0, 2.0, 4.0)
NB_LAW_BT = ((0.3, 1.0), (0.3, 3.0), (0.7, 1.0), (0.7, 3.0))

# Stationarity check: ratio a/b, b, and a horizon of 50 mean lifetimes of
# the slowest mode (relaxation rate 1 - b).
STATIONARY_POINT = (2.0, 0.3, 50.0 / 0.7)

# Coupling check points: (rp, p, t), crossed with starts i in {1, 3}.
COUPLING_POINTS = ((1.0, 0.5, 1.0), (1.4, 0.7, 3.0))
COUPLING_STARTS = (1, 3)

# Integral-identity evaluation points.
IDENTITY_PS = (0.1, 0.5, 0.9)

# Appendix chain evaluation points.
APPENDIX_THETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

# Scenario battery: constant, two sinusoids (different amplitude and
# period), a day/night square wave with mean exactly 2, and a table whose
# reference abar deliberately differs from its time average (A_T != 0).
BATTERY = (
    ("constant", ScenarioParams(ConstantRate(2.0), b=0.5, T=5.0)),
    ("sinusoid-fast", ScenarioParams(SinusoidRate(2.0, 0.5, 1.0, 0.0), b=0.5, T=4.0)),
    ("sinusoid-slow", ScenarioParams(SinusoidRate(2.0, 0.9, 3.0, 0.25), b=0.5, T=4.0)),
    ("day-night", ScenarioParams(
        PiecewiseRate(2.0, breakpoints=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5),
                      levels=(3.2, 0.8, 3.2, 0.8, 3.2, 0.8, 3.2, 0.8)),
        b=0.5, T=4.0)),
    ("table", ScenarioParams(
        TableRate(2.0, knots=(0.0, 1.0, 2.5, 4.0), values=(1.0, 3.0, 2.0, 2.5)),
        b=0.4, T=4.0)),
)

# Poisson-limit checks: NB parameters pinned near the limit, and the
# near-zero birth rate scenario whose load is close to Poisson(mu_T).
POISSON_LIMIT_NB = NegBinParams(4.0e6, 1.0e-6)
POISSON_LIMIT_SCENARIO = ScenarioParams(ConstantRate(2.0), b=1.0e-4, T=3.0)
