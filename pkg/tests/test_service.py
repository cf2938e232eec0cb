"""HTTP layer: request validation, domain-error mapping, payload shapes."""
import warnings

import pytest

import vscstab
from vscstab.service import build_app

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient


@pytest.fixture(scope="module")
def client():
    return TestClient(build_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["version"] == vscstab.__version__


def test_unknown_request_field_is_422(client):
    r = client.post("/analyze/bode", json={"conf": {}})
    assert r.status_code == 422


def test_unknown_config_key_is_422(client):
    r = client.post("/analyze/bode",
                    json={"config": {"circuit": {"freq": 60.0}}})
    assert r.status_code == 422


def test_bad_override_is_400(client):
    r = client.post("/analyze/bode", json={"overrides": ["circuit.nope=1"]})
    assert r.status_code == 400
    assert "nope" in r.json()["detail"]


def test_domain_error_is_400(client):
    r = client.post("/analyze/marginal",
                    json={"config": {"analysis": {"marginal_lo_hz": 2.0,
                                                  "marginal_hi_hz": 4.0}}})
    assert r.status_code == 400
    assert "SearchDomainError" in r.json()["detail"]


def test_bode_payload_shape(client):
    r = client.post("/analyze/bode",
                    json={"config": {"circuit": {"i_ref_pu": "0.5+0j"}}})
    assert r.status_code == 200
    body = r.json()
    assert body["exit_code"] == 0
    assert sorted(body["files"]) == [
        "bode_accurate_negative.csv", "bode_accurate_positive.csv",
        "bode_reduced_negative.csv", "bode_reduced_positive.csv"]
    first = body["files"]["bode_accurate_positive.csv"].splitlines()
    assert first[0] == "f_dq_hz,f_phase_hz,re_ohm,im_ohm,mag_ohm,phase_deg"
    assert len(first) == 1001  # header plus the configured grid


def test_nyquist_verdicts_and_exit_code(client):
    r = client.post("/analyze/nyquist",
                    json={"overrides": ["control.pll_bw_hz=100"]})
    assert r.status_code == 200
    body = r.json()
    assert body["exit_code"] == 2
    v = body["verdicts"]
    assert v["accurate"]["stable"] is False
    assert v["mimo"]["stable"] is False
    assert v["reduced"]["stable"] is True
    assert any(n < 0 for n in v["accurate"]["encirclements"].values())
    assert set(v["mimo"]["encirclements"]) == {"lambda_1", "lambda_2"}
    assert "verdicts.csv" in body["files"]
    assert "nyquist_mimo_lambda_1.csv" in body["files"]


def test_passivity_payload(client):
    r = client.post("/analyze/passivity",
                    json={"overrides": ["control.pll_bw_hz=100"]})
    assert r.status_code == 200
    body = r.json()
    assert body["exit_code"] == 2  # negative-resistance crossing
    acc = body["crossings"]["accurate"]
    assert acc["stable"] is False
    assert any(c["re_sign"] == "negative" for c in acc["positive"])
    assert body["crossings"]["reduced"]["stable"] is True


def test_simulate_hold_scenario(client):
    r = client.post("/sim/simulate",
                    json={"config": {"sim": {"duration_s": 1.0},
                                     "output": {"spectrum_window_s": 0.5}}})
    assert r.status_code == 200
    body = r.json()
    assert body["boundedness"] == "bounded"
    assert body["diverged"] is False
    assert body["exit_code"] == 0
    assert set(body["files"]) == {"timeseries.csv", "spectrum.csv"}
