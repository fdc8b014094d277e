"""Request/response models shared by the HTTP service and the CLI.

The scenario document schema lives here and nowhere else: the CLI reads the
same JSON shape from ``--scenario`` files that the API accepts in request
bodies. Unknown keys are rejected everywhere (``extra="forbid"``) so typos
fail loudly instead of silently reverting to defaults.
"""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from .parasite import (
    ConstantRate,
    PiecewiseRate,
    ScenarioParams,
    SinusoidRate,
    TableRate,
)


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


# --- scenario documents ------------------------------------------------------

class ConstantRateModel(StrictModel):
    kind: Literal["constant"]
    abar: float = Field(gt=0.0)


class SinusoidRateModel(StrictModel):
    kind: Literal["sinusoid"]
    abar: float = Field(gt=0.0)
    amp: float = Field(ge=-1.0, le=1.0)
    period: float = Field(gt=0.0)
    phase: float = 0.0


class PiecewiseRateModel(StrictModel):
    kind: Literal["piecewise"]
    abar: float = Field(gt=0.0)
    breakpoints: list[float]
    levels: list[float]


class TableRateModel(StrictModel):
    kind: Literal["table"]
    abar: float = Field(gt=0.0)
    knots: list[float]
    values: list[float]


RateModel = Annotated[
    Union[ConstantRateModel, SinusoidRateModel, PiecewiseRateModel, TableRateModel],
    Field(discriminator="kind"),
]


class ScenarioModel(StrictModel):
    """One host's season: ingestion rate shape, birth rate b, horizon T."""

    rate: RateModel
    b: float = Field(gt=0.0, lt=1.0)
    T: float = Field(gt=0.0)

    def to_params(self) -> ScenarioParams:
        r = self.rate
        if isinstance(r, ConstantRateModel):
            rate = ConstantRate(r.abar)
        elif isinstance(r, SinusoidRateModel):
            rate = SinusoidRate(r.abar, r.amp, r.period, r.phase)
        elif isinstance(r, PiecewiseRateModel):
            rate = PiecewiseRate(r.abar, tuple(r.breakpoints), tuple(r.levels))
        else:
            rate = TableRate(r.abar, tuple(r.knots), tuple(r.values))
        return ScenarioParams(rate, b=self.b, T=self.T)


# --- shared fragments --------------------------------------------------------

class GridPoint(StrictModel):
    r: float = Field(gt=0.0)
    p: float = Field(gt=0.0, lt=1.0)


# --- requests ----------------------------------------------------------------

class R0Request(StrictModel):
    tol: float = Field(default=1e-12, gt=0.0)


class BoundsRequest(StrictModel):
    points: Optional[list[GridPoint]] = None  # None -> the versioned grid


class SteinSolveRequest(StrictModel):
    r: float = Field(gt=0.0)
    p: float = Field(gt=0.0, lt=1.0)
    i: int = Field(default=0, ge=0)  # wedge vertex of the test function
    n: Optional[int] = Field(default=None, ge=1)


class SteinCertifyRequest(StrictModel):
    points: Optional[list[GridPoint]] = None
    tol: float = Field(default=1e-9, gt=0.0)


class SimulateIbdRequest(StrictModel):
    a: float = Field(ge=0.0)
    b: float = Field(default=0.0, ge=0.0)
    z0: int = Field(default=0, ge=0)
    t: float = Field(gt=0.0)
    samples: int = Field(default=1, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)


class VerifyLemmasRequest(StrictModel):
    samples: int = Field(default=100_000, ge=1000)
    seed: int = 0
    workers: int = Field(default=1, ge=1)


class VerifyIdentitiesRequest(StrictModel):
    ps: Optional[list[float]] = None  # None -> the versioned evaluation points
    tol: float = Field(default=1e-8, gt=0.0)


class ParasiteBoundRequest(StrictModel):
    scenario: ScenarioModel


class ParasiteValidateRequest(StrictModel):
    scenario: ScenarioModel
    samples: int = Field(default=200_000, ge=10_000)
    seed: int = 0
    workers: int = Field(default=1, ge=1)


class AggregateBoundRequest(StrictModel):
    scenario: ScenarioModel
    hosts: int = Field(default=1, ge=1)


class AppendixCheckRequest(StrictModel):
    thetas: Optional[list[float]] = None
    tol: float = Field(default=1e-9, gt=0.0)


# --- responses ---------------------------------------------------------------

class R0Result(StrictModel):
    r0: float
    sqrt_r0: float


class BoundsRow(StrictModel):
    r: float
    p: float
    G1_bound: float
    G2_c1: float
    G2_c2: float
    G2_c3: float
    G2_bound: float


class BoundsResult(StrictModel):
    rows: list[BoundsRow]


class SteinSolveResult(StrictModel):
    r: float
    p: float
    i: int
    n: int
    mu_f: float
    residual_max: float
    g: list[float]  # g(1), ..., g(N+1)


class CertifyRow(StrictModel):
    r: float
    p: float
    G1_measured: float
    G1_bound: float
    G2_measured: float
    G2_bound: float
    argmax_i: int
    ok: bool


class SteinCertifyResult(StrictModel):
    rows: list[CertifyRow]
    all_ok: bool


class SimulateIbdResult(StrictModel):
    counts: dict[int, int]
    n: int
    seed: int


class LemmaRow(StrictModel):
    check: str
    a: float
    b: float
    t: float
    i: int
    n: int
    tv: float
    threshold: float
    mean_z: Optional[float] = None
    m2_z: Optional[float] = None
    ok: bool


class VerifyLemmasResult(StrictModel):
    rows: list[LemmaRow]
    all_ok: bool


class IdentityRow(StrictModel):
    p: float
    I1: float
    I1_expected: float
    I2: float
    I2_expected: float
    max_err: float
    ok: bool


class VerifyIdentitiesResult(StrictModel):
    rows: list[IdentityRow]
    all_ok: bool


class ParasiteBoundResult(StrictModel):
    A_T: float
    A_star: float
    R_T: float
    R_a_star: float
    theta_T: float
    mu_T: float
    bound_total: float
    term_A: float
    term_main: float
    delta_g_factor: float
    log_factor: float
    constant: float


class ParasiteValidateResult(StrictModel):
    empirical_dW: float
    bound: float
    mc_halfwidth: float
    passed: bool = Field(alias="pass")
    seed: int
    n: int


class AggregateBoundResult(StrictModel):
    bound: float
    n_hosts: int
    r_bar: float
    n_r_bar: float
    theta_T: float
    r0: float
    sum_A_star: float


class AppendixRow(StrictModel):
    theta_T: float
    lhs: float
    rhs_closed: float
    rhs_absorbed: float
    f2_integral: float
    f2_integral_bound: float
    geom_identity_err: float
    j_truncated: int
    k1_main_sufficient: bool
    ok: bool


class AppendixCheckResult(StrictModel):
    rows: list[AppendixRow]
    all_ok: bool
