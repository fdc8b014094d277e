"""Command-line front end.

Every subcommand builds a request model, runs it through the shared service
layer (in-process by default, or against a running HTTP server via
``--server``), and renders the response as CSV (tables) or JSON (reports).

Exit codes: 0 success; 1 a certification check failed (some row not ok, or
a validation did not pass); 2 usage error (bad flags, bad scenario file,
unmet preconditions); 3 accuracy or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from pydantic import BaseModel, ValidationError

from . import schemas as S
from . import service
from .errors import (
    AccuracyError,
    PrecisionError,
    PreconditionError,
    SupercriticalGrowthError,
)

_COMMANDS = {
    "r0": ("/r0", S.R0Request, S.R0Result, service.run_r0),
    "bounds": ("/bounds", S.BoundsRequest, S.BoundsResult, service.run_bounds),
    "stein-solve": ("/stein/solve", S.SteinSolveRequest, S.SteinSolveResult,
                    service.run_stein_solve),
    "stein-certify": ("/stein/certify", S.SteinCertifyRequest,
                      S.SteinCertifyResult, service.run_stein_certify),
    "simulate-ibd": ("/ibd/simulate", S.SimulateIbdRequest, S.SimulateIbdResult,
                     service.run_simulate_ibd),
    "verify-lemmas": ("/ibd/verify-lemmas", S.VerifyLemmasRequest,
                      S.VerifyLemmasResult, service.run_verify_lemmas),
    "verify-identities": ("/identities", S.VerifyIdentitiesRequest,
                          S.VerifyIdentitiesResult, service.run_verify_identities),
    "parasite-bound": ("/parasite/bound", S.ParasiteBoundRequest,
                       S.ParasiteBoundResult, service.run_parasite_bound),
    "parasite-validate": ("/parasite/validate", S.ParasiteValidateRequest,
                          S.ParasiteValidateResult, service.run_parasite_validate),
    "aggregate-bound": ("/parasite/aggregate", S.AggregateBoundRequest,
                        S.AggregateBoundResult, service.run_aggregate_bound),
    "appendix-check": ("/appendix", S.AppendixCheckRequest,
                       S.AppendixCheckResult, service.run_appendix_check),
}


def _fmt(x) -> str:
    """One CSV cell: floats at 17 significant digits, booleans lowercase."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    if x is None:
        return ""
    return str(x)


def _csv_table(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def _render_csv(result: BaseModel) -> str:
    if isinstance(result, S.SimulateIbdResult):
        return _csv_table(["k", "count"],
                          [[k, c] for k, c in sorted(result.counts.items())])
    if isinstance(result, S.SteinSolveResult):
        return _csv_table(["i", "g"],
                          [[i + 1, v] for i, v in enumerate(result.g)])
    data = result.model_dump(by_alias=True)
    rows = data.pop("rows", None)
    if rows is not None:
        header = list(rows[0].keys()) if rows else []
        return _csv_table(header, [list(r.values()) for r in rows])
    return _csv_table(list(data.keys()), [list(data.values())])


def _render_json(result: BaseModel) -> str:
    return json.dumps(result.model_dump(by_alias=True), indent=2) + "\n"


def _failed_certification(result: BaseModel) -> bool:
    if getattr(result, "all_ok", True) is False:
        return True
    if getattr(result, "passed", True) is False:
        return True
    return False


def _load_scenario(path: str) -> S.ScenarioModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return S.ScenarioModel.model_validate(doc)


def _load_grid(arg: Optional[str]) -> Optional[list[S.GridPoint]]:
    """--grid default (or omitted) -> None, meaning the built-in grid;
    otherwise a JSON file holding a list of [r, p] pairs."""
    if arg is None or arg == "default":
        return None
    with open(arg, "r", encoding="utf-8") as fh:
        pairs = json.load(fh)
    return [S.GridPoint(r=pair[0], p=pair[1]) for pair in pairs]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nbstein",
        description="Negative binomial Stein factors, birth-death law checks, "
                    "and seasonal parasite-load bounds.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"),
                        help="output format (default: CSV for tables, JSON for reports)")
    common.add_argument("--server", help="base URL of a running API server; "
                                         "the command is sent there instead of "
                                         "computed in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("r0", parents=[common],
                       help="threshold shape r0 for the factor bounds")
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("bounds", parents=[common],
                       help="proved G1/G2 factor bounds per (r, p)")
    p.add_argument("--r", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--grid", help="'default' or a JSON file of [r, p] pairs")

    p = sub.add_parser("stein-solve", parents=[common],
                       help="solve the characterizing equation for a wedge "
                            "test function and print g")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--i", type=int, default=0, help="wedge vertex (0 = -x)")
    p.add_argument("--n", type=int, help="truncation index (default: automatic)")

    p = sub.add_parser("stein-certify", parents=[common],
                       help="measure factors on a grid and certify them "
                            "against the proved bounds")
    p.add_argument("--grid", help="'default' or a JSON file of [r, p] pairs")
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("simulate-ibd", parents=[common],
                       help="sample endpoint counts of an immigration-"
                            "birth-death process")
    p.add_argument("--a", type=float, required=True, help="immigration rate")
    p.add_argument("--b", type=float, default=0.0, help="per-head birth rate")
    p.add_argument("--z0", type=int, default=0, help="initial population")
    p.add_argument("--t", type=float, required=True, help="horizon")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify-lemmas", parents=[common],
                       help="simulation checks: clan law, NB endpoint law, "
                            "stationary law, additive coupling")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify-identities", parents=[common],
                       help="quadrature check of the two closed-form "
                            "discount integrals")
    p.add_argument("--p", type=float, help="single evaluation point "
                                           "(default: built-in grid)")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("parasite-bound", parents=[common],
                       help="exposure functionals and the season-level "
                            "distance bound for a scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON file")

    p = sub.add_parser("parasite-validate", parents=[common],
                       help="Monte Carlo check of a scenario against its bound")
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("aggregate-bound", parents=[common],
                       help="distance bound for the summed load of identical "
                            "hosts")
    p.add_argument("--scenario", required=True)
    p.add_argument("--hosts", type=int, default=1)

    p = sub.add_parser("appendix-check", parents=[common],
                       help="audit the variation-sum inequality chain behind "
                            "the bound constant")
    p.add_argument("--t", type=float, dest="theta",
                   help="single theta_T evaluation point (default: built-in grid)")
    p.add_argument("--tol", type=float, default=1e-9)

    return parser


def _build_request(args: argparse.Namespace) -> BaseModel:
    cmd = args.command
    if cmd == "r0":
        return S.R0Request(tol=args.tol)
    if cmd == "bounds":
        if (args.r is None) != (args.p is None):
            raise ValueError("--r and --p must be given together")
        if args.r is not None:
            return S.BoundsRequest(points=[S.GridPoint(r=args.r, p=args.p)])
        return S.BoundsRequest(points=_load_grid(args.grid))
    if cmd == "stein-solve":
        return S.SteinSolveRequest(r=args.r, p=args.p, i=args.i, n=args.n)
    if cmd == "stein-certify":
        return S.SteinCertifyRequest(points=_load_grid(args.grid), tol=args.tol)
    if cmd == "simulate-ibd":
        return S.SimulateIbdRequest(a=args.a, b=args.b, z0=args.z0, t=args.t,
                                    samples=args.samples, seed=args.seed,
                                    workers=args.workers)
    if cmd == "verify-lemmas":
        return S.VerifyLemmasRequest(samples=args.samples, seed=args.seed,
                                     workers=args.workers)
    if cmd == "verify-identities":
        ps = None if args.p is None else [args.p]
        return S.VerifyIdentitiesRequest(ps=ps, tol=args.tol)
    if cmd == "parasite-bound":
        return S.ParasiteBoundRequest(scenario=_load_scenario(args.scenario))
    if cmd == "parasite-validate":
        return S.ParasiteValidateRequest(scenario=_load_scenario(args.scenario),
                                         samples=args.samples, seed=args.seed,
                                         workers=args.workers)
    if cmd == "aggregate-bound":
        return S.AggregateBoundRequest(scenario=_load_scenario(args.scenario),
                                       hosts=args.hosts)
    if cmd == "appendix-check":
        thetas = None if args.theta is None else [args.theta]
        return S.AppendixCheckRequest(thetas=thetas, tol=args.tol)
    raise ValueError(f"unknown command {cmd!r}")


def _dispatch(command: str, req: BaseModel, server: Optional[str]) -> BaseModel:
    route, _, result_model, runner = _COMMANDS[command]
    if server is None:
        return runner(req)
    import httpx

    resp = httpx.post(server.rstrip("/") + route,
                      json=req.model_dump(by_alias=True, mode="json"),
                      timeout=600.0)
    if resp.status_code == 422:
        raise ValueError(resp.json().get("detail", resp.text))
    if resp.status_code >= 500:
        raise AccuracyError(resp.json().get("detail", resp.text))
    resp.raise_for_status()
    return result_model.model_validate(resp.json())


_DEFAULT_JSON = {"r0", "parasite-bound", "parasite-validate", "aggregate-bound"}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        req = _build_request(args)
        result = _dispatch(args.command, req, args.server)
    except (ValidationError, ValueError, PrecisionError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AccuracyError, SupercriticalGrowthError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    fmt = args.format or ("json" if args.command in _DEFAULT_JSON else "csv")
    text = _render_json(result) if fmt == "json" else _render_csv(result)
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 1 if _failed_certification(result) else 0


if __name__ == "__main__":
    sys.exit(main())
