"""FastAPI service wrapping the experiment engine.

POST /run executes one experiment config and returns the full report
(CSV rendering inlined so thin clients can write identical artifacts).
POST /suite executes a list of configs without short-circuiting.
"""

from fastapi import FastAPI, HTTPException

from . import __version__
from .engine import SCHEMA_VERSION, ConfigError, config_from_dict, render_csv, run
from .schemas import (RunReport, RunRequest, SceneInfo, SuiteReport,
                      SuiteRequest)

app = FastAPI(title="paralab", version=__version__)


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/scenes", response_model=list[SceneInfo])
def scenes():
    return [
        SceneInfo(kind="circle", arguments=["n", "h?"],
                  note="periodic grid, one centered-difference field"),
        SceneInfo(kind="torus2", arguments=["nx", "ny", "h?"],
                  note="flat periodic grid, two commuting fields"),
        SceneInfo(kind="heisenberg", arguments=["nx", "ny", "nz", "h?"],
                  note="periodic x, y with z-twisted horizontal fields, "
                       "reflecting z"),
        SceneInfo(kind="graph", arguments=["path"],
                  note="user-supplied measure and skew-adjoint couplings"),
    ]


@app.post("/run", response_model=RunReport)
def run_endpoint(req: RunRequest):
    try:
        cfg = config_from_dict(req.as_config_dict())
        report = run(cfg)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail=str(e))
    report["csv"] = render_csv(report) if report["series_columns"] else None
    return report


@app.post("/suite", response_model=SuiteReport)
def suite_endpoint(req: SuiteRequest):
    rows = []
    reports = []
    severity = 0
    for i, r in enumerate(req.runs):
        try:
            cfg = config_from_dict(r.as_config_dict())
            rep = run(cfg)
            rep["csv"] = render_csv(rep) if rep["series_columns"] else None
            reports.append(rep)
            rows.append({"index": i, "experiment": rep["experiment"],
                         "status": "pass" if rep["passed"] else "FAIL",
                         "summary": rep["summary"]})
            if not rep["passed"]:
                severity = max(severity, 1)
        except ConfigError as e:
            rows.append({"index": i, "experiment": "?",
                         "status": "CONFIG ERROR", "summary": str(e)})
            severity = max(severity, 2)
    return {"schema_version": SCHEMA_VERSION, "rows": rows,
            "severity": severity, "reports": reports}
