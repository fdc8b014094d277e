"""HTTP front end: one POST route per service command.

Domain failures map to status codes the CLI translates back into exit
codes: invalid values and unmet preconditions become 422, certification
noise (uncertifiable accuracy) becomes 500 with the error message.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import schemas as S
from . import service
from .errors import (
    AccuracyError,
    PrecisionError,
    PreconditionError,
    SupercriticalGrowthError,
)

app = FastAPI(title="nbstein", version="0.1.0")


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(PrecisionError)
async def _precision_error(request: Request, exc: PrecisionError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(PreconditionError)
async def _precondition_error(request: Request, exc: PreconditionError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(AccuracyError)
async def _accuracy_error(request: Request, exc: AccuracyError) -> JSONResponse:
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.exception_handler(SupercriticalGrowthError)
async def _growth_error(request: Request, exc: SupercriticalGrowthError) -> JSONResponse:
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.post("/r0", response_model=S.R0Result)
def r0(req: S.R0Request) -> S.R0Result:
    return service.run_r0(req)


@app.post("/bounds", response_model=S.BoundsResult)
def bounds(req: S.BoundsRequest) -> S.BoundsResult:
    return service.run_bounds(req)


@app.post("/stein/solve", response_model=S.SteinSolveResult)
def stein_solve(req: S.SteinSolveRequest) -> S.SteinSolveResult:
    return service.run_stein_solve(req)


@app.post("/stein/certify", response_model=S.SteinCertifyResult)
def stein_certify(req: S.SteinCertifyRequest) -> S.SteinCertifyResult:
    return service.run_stein_certify(req)


@app.post("/ibd/simulate", response_model=S.SimulateIbdResult)
def simulate_ibd(req: S.SimulateIbdRequest) -> S.SimulateIbdResult:
    return service.run_simulate_ibd(req)


@app.post("/ibd/verify-lemmas", response_model=S.VerifyLemmasResult)
def verify_lemmas(req: S.VerifyLemmasRequest) -> S.VerifyLemmasResult:
    return service.run_verify_lemmas(req)


@app.post("/identities", response_model=S.VerifyIdentitiesResult)
def verify_identities(req: S.VerifyIdentitiesRequest) -> S.VerifyIdentitiesResult:
    return service.run_verify_identities(req)


@app.post("/parasite/bound", response_model=S.ParasiteBoundResult)
def parasite_bound(req: S.ParasiteBoundRequest) -> S.ParasiteBoundResult:
    return service.run_parasite_bound(req)


@app.post("/parasite/validate", response_model=S.ParasiteValidateResult)
def parasite_validate(req: S.ParasiteValidateRequest) -> S.ParasiteValidateResult:
    return service.run_parasite_validate(req)


@app.post("/parasite/aggregate", response_model=S.AggregateBoundResult)
def aggregate(req: S.AggregateBoundRequest) -> S.AggregateBoundResult:
    return service.run_aggregate_bound(req)


@app.post("/appendix", response_model=S.AppendixCheckResult)
def appendix(req: S.AppendixCheckRequest) -> S.AppendixCheckResult:
    return service.run_appendix_check(req)
