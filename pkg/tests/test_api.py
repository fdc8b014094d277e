"""HTTP layer: routes, validation rejects, and seeded determinism."""

import math

import pytest
from fastapi.testclient import TestClient

from nbstein.api import app
from nbstein import schemas, service

client = TestClient(app)

SINUSOID = {"rate": {"kind": "sinusoid", "abar": 2.0, "amp": 0.5,
                     "period": 1.0, "phase": 0.0},
            "b": 0.5, "T": 4.0}


def test_r0_route():
    resp = client.post("/r0", json={})
    assert resp.status_code == 200
    body = resp.json()
    assert body["sqrt_r0"] == pytest.approx(math.sqrt(body["r0"]), rel=1e-15)
    assert 1.41 < body["sqrt_r0"] <= 1.427


def test_bounds_single_point():
    resp = client.post("/bounds", json={"points": [{"r": 1.0, "p": 0.5}]})
    assert resp.status_code == 200
    row = resp.json()["rows"][0]
    assert row["G1_bound"] == 2.0
    assert row["G2_c1"] == 4.0
    assert row["G2_c2"] == 6.0
    assert row["G2_bound"] == 4.0


def test_bounds_default_grid():
    resp = client.post("/bounds", json={})
    assert resp.status_code == 200
    assert len(resp.json()["rows"]) == 54  # 6 shapes x 9 success probs


def test_stein_solve_hand_case():
    resp = client.post("/stein/solve",
                       json={"r": 1.0, "p": 0.5, "i": 1, "n": 3})
    assert resp.status_code == 200
    body = resp.json()
    assert body["g"] == pytest.approx([0.0, 1.0, 4.0 / 3.0, 1.5], abs=1e-9)
    assert body["residual_max"] <= 1e-9


def test_stein_solve_rejects_bad_p():
    resp = client.post("/stein/solve", json={"r": 1.0, "p": 1.5})
    assert resp.status_code == 422


def test_stein_certify_small_grid():
    resp = client.post("/stein/certify",
                       json={"points": [{"r": 1.0, "p": 0.5},
                                        {"r": 5.0, "p": 0.2}]})
    assert resp.status_code == 200
    assert resp.json()["all_ok"] is True


def test_simulate_deterministic():
    req = {"a": 1.0, "b": 0.5, "t": 1.0, "samples": 500, "seed": 9}
    one = client.post("/ibd/simulate", json=req)
    two = client.post("/ibd/simulate", json=req)
    assert one.status_code == two.status_code == 200
    assert one.json() == two.json()
    assert sum(one.json()["counts"].values()) == 500


def test_identities_route():
    resp = client.post("/identities", json={})
    assert resp.status_code == 200
    body = resp.json()
    assert body["all_ok"] is True
    assert [row["p"] for row in body["rows"]] == [0.1, 0.5, 0.9]


def test_parasite_bound_matches_service():
    resp = client.post("/parasite/bound", json={"scenario": SINUSOID})
    assert resp.status_code == 200
    req = schemas.ParasiteBoundRequest(scenario=schemas.ScenarioModel(**SINUSOID))
    want = service.run_parasite_bound(req)
    assert resp.json() == want.model_dump(by_alias=True)


def test_scenario_rejects_unknown_keys():
    bad = {"rate": {"kind": "constant", "abar": 2.0, "typo": 1}, "b": 0.5, "T": 4.0}
    resp = client.post("/parasite/bound", json={"scenario": bad})
    assert resp.status_code == 422


def test_validate_rejects_small_n():
    resp = client.post("/parasite/validate",
                       json={"scenario": SINUSOID, "samples": 10})
    assert resp.status_code == 422


def test_aggregate_precondition():
    thin = {"rate": {"kind": "constant", "abar": 0.2}, "b": 0.5, "T": 2.0}
    resp = client.post("/parasite/aggregate", json={"scenario": thin, "hosts": 1})
    assert resp.status_code == 422
    assert "r0" in resp.json()["detail"]


def test_aggregate_route():
    resp = client.post("/parasite/aggregate",
                       json={"scenario": SINUSOID, "hosts": 2})
    assert resp.status_code == 200
    body = resp.json()
    assert body["n_hosts"] == 2
    assert body["bound"] > 0.0
    assert body["n_r_bar"] == pytest.approx(2.0 * body["r_bar"], rel=1e-15)


def test_appendix_route():
    resp = client.post("/appendix", json={"thetas": [0.5]})
    assert resp.status_code == 200
    row = resp.json()["rows"][0]
    assert row["ok"] is True
    assert row["rhs_closed"] == pytest.approx(8.234432833386009, rel=1e-12)
