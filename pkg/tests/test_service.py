import pytest
from fastapi.testclient import TestClient

import paralab
from paralab.engine import config_from_dict, run
from paralab.service import app

client = TestClient(app)

REQ = {"experiment": {"name": "reconstruct", "seed": "11"},
       "scene": {"kind": "circle", "n": "32"},
       "params": {"count": "4"}}


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["version"] == paralab.__version__


def test_scenes_listing():
    r = client.get("/scenes")
    assert r.status_code == 200
    kinds = [s["kind"] for s in r.json()]
    assert kinds == ["circle", "torus2", "heisenberg", "graph"]


def test_run_matches_engine():
    r = client.post("/run", json=REQ)
    assert r.status_code == 200
    remote = r.json()
    local = run(config_from_dict(
        {k: dict(v) for k, v in REQ.items()}))
    assert remote["passed"] == local["passed"]
    assert remote["experiment"] == "reconstruct"
    assert remote["series_rows"] == local["series_rows"]
    names = [c["name"] for c in remote["checks"]]
    assert names == [c["name"] for c in local["checks"]]
    # CSV is inlined so a thin client can write identical artifacts
    assert remote["csv"].startswith("index,rel_error")


def test_run_rejects_unknown_experiment():
    r = client.post("/run", json={"experiment": {"name": "nope"}})
    assert r.status_code == 422
    assert "unknown experiment" in r.json()["detail"]


def test_run_rejects_bad_window():
    req = {"experiment": {"name": "paralinearize"},
           "scene": {"kind": "circle", "n": "32"},
           "params": {"s": "0.3"}}
    r = client.post("/run", json=req)
    assert r.status_code == 422
    assert "s must lie in (d/p, 1)" in r.json()["detail"]


def test_suite_aggregation():
    bad = {"experiment": {"name": "nope"}}
    r = client.post("/suite", json={"runs": [REQ, bad]})
    assert r.status_code == 200
    body = r.json()
    assert body["severity"] == 2
    assert len(body["rows"]) == 2
    assert body["rows"][0]["status"] == "pass"
    assert body["rows"][1]["status"] == "CONFIG ERROR"
    assert len(body["reports"]) == 1


def test_suite_all_pass():
    r = client.post("/suite", json={"runs": [REQ]})
    body = r.json()
    assert body["severity"] == 0
    assert body["rows"][0]["summary"].startswith("reconstruct")
