"""Experiment engine: INI configs in, deterministic reports out.

A run produces a JSON report (all checks with measured values, config
echo, wall time) and a CSV series. The CSV carries no timing, so reruns
of the same config and seed are byte-identical. The CLI and the HTTP
service are both thin wrappers over run().
"""

import configparser
import io
import json
import os
import time

import numpy as np

from . import acceptance
from .paralin import (ParalinError, make_nonlinearity, paralinearize,
                      smoothing_study)
from .paraproduct import (ParaproductConfig, decompose_product,
                          residual_doubling_study,
                          structural_identity_residual)
from .propagate import (manufacture, refinement_study, twisted_consistency)
from .scene import SceneError, build_scene, geometry_report
from .sobolev import (canonical_dim, embedding_probe, higher_order_norm_probe,
                      probe_family, riesz_probe, seeded_functions,
                      sobolev_norm, SobolevParams, SobolevError)
from .speccalc import (MultiplierFamily, SpectralError, eigendecompose,
                       make_quadrature, reconstruct)

SCHEMA_VERSION = 1
EXPERIMENTS = ("geometry", "reconstruct", "decompose", "sobolev",
               "paralinearize", "smoothing", "propagate")


class ConfigError(ValueError):
    pass


class ExperimentConfig:
    def __init__(self, scene, multiplier, quadrature, experiment, params,
                 output):
        self.scene = scene
        self.multiplier = multiplier
        self.quadrature = quadrature
        self.experiment = experiment
        self.params = params
        self.output = output

    def echo(self):
        return {"scene": dict(self.scene), "multiplier": dict(self.multiplier),
                "quadrature": dict(self.quadrature),
                "experiment": dict(self.experiment),
                "params": dict(self.params), "output": dict(self.output)}


def _as_int(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError("missing integer %r" % key)
        return default
    try:
        return int(section[key])
    except ValueError:
        raise ConfigError("%r must be an integer, got %r" % (key, section[key]))


def _as_float(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError("missing number %r" % key)
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError("%r must be a number, got %r" % (key, section[key]))


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError("config file %r not found" % path)
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as e:
        raise ConfigError("cannot parse %r: %s" % (path, e))
    return config_from_dict({s: dict(cp[s]) for s in cp.sections()})


def config_from_dict(d):
    scene = dict(d.get("scene", {}))
    multiplier = dict(d.get("multiplier", {}))
    quadrature = dict(d.get("quadrature", {}))
    experiment = dict(d.get("experiment", {}))
    params = dict(d.get("params", {}))
    output = dict(d.get("output", {}))
    name = experiment.get("name")
    if name is None:
        raise ConfigError("[experiment] needs a name")
    if name not in EXPERIMENTS + ("acceptance",):
        raise ConfigError("unknown experiment %r (known: %s, acceptance)"
                          % (name, ", ".join(EXPERIMENTS)))
    if name == "acceptance":
        k = _as_int(experiment, "criterion")
        if not 1 <= k <= 10:
            raise ConfigError("criterion must be 1..10")
    emit = output.get("emit", "both")
    if emit not in ("json", "csv", "both"):
        raise ConfigError("emit must be json, csv, or both")
    return ExperimentConfig(scene, multiplier, quadrature, experiment,
                            params, output)


def _build_scene(cfg):
    sc = cfg.scene
    kind = sc.get("kind", "circle")
    kw = {}
    for key in ("n", "nx", "ny", "nz"):
        if key in sc:
            kw[key] = _as_int(sc, key)
    if "h" in sc:
        kw["h"] = _as_float(sc, "h")
    if "path" in sc:
        kw["path"] = sc["path"]
    try:
        return build_scene(kind, **kw)
    except SceneError as e:
        raise ConfigError(str(e))


def _build_calculus(cfg, spec):
    order = _as_int(cfg.multiplier, "order", 8)
    npd = _as_int(cfg.quadrature, "nodes_per_decade", 16)
    pad = _as_float(cfg.quadrature, "pad_decades", 4.0)
    try:
        fam = MultiplierFamily(order)
        quad = make_quadrature(spec, fam, npd, pad)
    except SpectralError as e:
        raise ConfigError(str(e))
    return fam, quad


def _check(name, value, threshold, passed):
    return {"name": name, "value": None if value is None else float(value),
            "threshold": None if threshold is None else float(threshold),
            "passed": bool(passed)}


def _note(name, value):
    return {"name": name, "value": None if value is None else float(value),
            "threshold": None, "passed": None}


def run(cfg):
    """Execute one experiment; returns the report dict."""
    t0 = time.perf_counter()
    name = cfg.experiment["name"]
    seed = _as_int(cfg.experiment, "seed", 0)
    checks = []
    cols, rows = [], []

    if name == "acceptance":
        rec = acceptance.run_criterion(_as_int(cfg.experiment, "criterion"))
        checks = [_check(c["name"], c["value"], c["threshold"], c["passed"])
                  for c in rec["checks"]]
        cols = ["criterion", "passed"]
        rows = [[rec["criterion"], int(rec["passed"])]]
        summary_line = rec["line"]
    else:
        fn = _RUNNERS[name]
        summary_line = fn(cfg, seed, checks, cols, rows)

    hard = [c for c in checks if c["passed"] is not None]
    passed = all(c["passed"] for c in hard)
    report = {
        "schema_version": SCHEMA_VERSION,
        "experiment": name,
        "config": cfg.echo(),
        "seed": seed,
        "workers": int(os.environ.get("PARALAB_WORKERS", "1")),
        "checks": checks,
        "series_columns": cols,
        "series_rows": rows,
        "passed": passed,
        "summary": summary_line,
        "wall_time_s": time.perf_counter() - t0,
    }
    return report


# -- individual experiments ---------------------------------------------------


def _run_geometry(cfg, seed, checks, cols, rows):
    scene = _build_scene(cfg)
    spec = eigendecompose(scene)
    skew = max(scene.skew_residuals())
    checks.append(_check("max skew residual", skew, 1e-10, skew <= 1e-10))
    rt = np.sqrt(scene.mu)
    S = (rt[:, None] * scene.laplacian()) / rt[None, :]
    lam_raw = np.linalg.eigvalsh((S + S.T) / 2)
    psd = lam_raw[0] >= -1e-10 * max(lam_raw[-1], 1.0)
    checks.append(_check("min raw eigenvalue", lam_raw[0], 0.0, psd))
    rep = geometry_report(scene)
    checks.append(_note("doubling constant", rep.doubling_constant))
    checks.append(_note("d_hom", rep.d_hom))
    checks.append(_note("vol_lower_c", rep.vol_lower_c))
    checks.append(_note("poincare constant", rep.poincare_constant))
    checks.append(_note("growth exponent fit", rep.growth_fit))
    checks.append(_note("kernel dimension", spec.kernel_dim))
    cols.extend(["doubling_constant", "d_hom", "vol_lower_c",
                 "poincare_constant", "growth_fit", "kernel_dim",
                 "skew_max"])
    rows.append([rep.doubling_constant, rep.d_hom, rep.vol_lower_c,
                 rep.poincare_constant, rep.growth_fit, spec.kernel_dim,
                 skew])
    return "geometry on %s: C_D=%.4g d_hom=%.4g" % (
        scene.kind, rep.doubling_constant, rep.d_hom)


def _run_reconstruct(cfg, seed, checks, cols, rows):
    scene = _build_scene(cfg)
    spec = eigendecompose(scene)
    fam, quad = _build_calculus(cfg, spec)
    count = int(_as_float(cfg.params, "count", 50))
    cols.extend(["index", "rel_error"])
    worst = 0.0
    for i, f in enumerate(seeded_functions(spec, count, seed=seed or 1234)):
        err = scene.norm2(reconstruct(spec, fam, quad, f) - f) / scene.norm2(f)
        worst = max(worst, err)
        rows.append([i, err])
    checks.append(_check("max relative reconstruction error", worst, 1e-6,
                         worst <= 1e-6))
    checks.append(_check("quadrature not degraded", quad.worst_err, 1e-8,
                         not quad.degraded))
    return "reconstruct: worst %.3e over %d functions" % (worst, count)


def _run_decompose(cfg, seed, checks, cols, rows):
    scene = _build_scene(cfg)
    spec = eigendecompose(scene)
    fam, quad = _build_calculus(cfg, spec)
    pcfg = ParaproductConfig(fam, quad)
    pairs = int(_as_float(cfg.params, "pairs", 20))
    fs = seeded_functions(spec, 2 * pairs, seed=seed or 777)
    cols.extend(["pair", "residual", "rel_residual"])
    worst = 0.0
    for i in range(pairs):
        r = decompose_product(pcfg, spec, fs[2 * i], fs[2 * i + 1])
        worst = max(worst, r.rel_residual)
        rows.append([i, r.residual, r.rel_residual])
    if quad.nodes_per_decade >= 16:
        checks.append(_check("max relative residual", worst, 1e-5,
                             worst <= 1e-5))
    else:
        checks.append(_note("max relative residual (low-resolution rule)",
                            worst))
    series = residual_doubling_study(pcfg, spec, fs[0], fs[1], (4, 8, 16))
    decreasing = all(b < a for a, b in zip(series, series[1:]))
    checks.append(_check("doubling study strictly decreases", series[-1],
                         None, decreasing))
    return "decompose: worst %.3e over %d pairs" % (worst, pairs)


def _run_sobolev(cfg, seed, checks, cols, rows):
    scene = _build_scene(cfg)
    spec = eigendecompose(scene)
    fam, quad = _build_calculus(cfg, spec)
    pcfg = ParaproductConfig(fam, quad)
    cols.extend(["field", "riesz_norm"])
    for k in range(len(scene.fields)):
        val = riesz_probe(spec, (k,), p=2.0)["norm"]
        checks.append(_check("riesz norm X_%d" % k, val, 1.0 + 1e-10,
                             val <= 1.0 + 1e-10))
        rows.append([k, val])
    hi = higher_order_norm_probe(spec, 1, 2.0)
    checks.append(_note("order-1 norm ratio min", hi["min_ratio"]))
    checks.append(_note("order-1 norm ratio max", hi["max_ratio"]))
    beta = _as_float(cfg.params, "beta", 0.5)
    fs = seeded_functions(spec, 2, seed=seed or 99)
    res = structural_identity_residual(pcfg, spec, fs[0], fs[1], beta)
    checks.append(_check("structural identity residual (beta=%g)" % beta,
                         res, 1e-8, res <= 1e-8))
    try:
        emb = embedding_probe(spec, 1.0, 2.0, 0.0, np.inf)
        checks.append(_note("embedding ratio (W^1,2 into Linf)",
                            emb["max_ratio"]))
    except SobolevError:
        pass
    return "sobolev: riesz/structural checks on %s" % scene.kind


def _run_paralinearize(cfg, seed, checks, cols, rows):
    scene = _build_scene(cfg)
    spec = eigendecompose(scene)
    fam, quad = _build_calculus(cfg, spec)
    pcfg = ParaproductConfig(fam, quad)
    s = _as_float(cfg.params, "s", 0.8)
    p = _as_float(cfg.params, "p", 2.0)
    eps = _as_float(cfg.params, "eps", 0.05)
    d = canonical_dim(scene)
    if not (d / p < s < 1):
        raise ConfigError("s must lie in (d/p, 1): got s=%g, d/p=%g"
                          % (s, d / p))
    tag = cfg.params.get("nonlinearity", "sin")
    try:
        F = make_nonlinearity(tag)
    except ParalinError as e:
        raise ConfigError(str(e))
    from .paralin import lacunary_probe
    depth = int(_as_float(cfg.params, "depth", 3))
    f, _ = lacunary_probe(spec, depth, s + eps)
    term_npd = int(_as_float(cfg.params, "term_nodes_per_decade", 96))
    rep = paralinearize(pcfg, spec, F, f, s=s, p=p, eps=eps, with_terms=True,
                        term_nodes_per_decade=term_npd)
    res = rep.consistency_residual
    checks.append(_check("five-term consistency residual", res, 1e-4,
                         res <= 1e-4))
    checks.append(_note("w norm at sigma*=%g" % rep.sigma_star,
                        rep.w_norms["sigma_star"].inhomog))
    checks.append(_note("w norm at s", rep.w_norms["s"].inhomog))
    checks.append(_note("F(f) norm at s", rep.fF_norm.inhomog))
    cols.extend(["term", "l2_norm"])
    for key in ("I", "II", "III", "IV", "V"):
        rows.append([key, scene.norm2(rep.terms[key])])
    return "paralinearize %s: consistency %.3e" % (tag, res)


def _run_smoothing(cfg, seed, checks, cols, rows):
    scene = _build_scene(cfg)
    spec = eigendecompose(scene)
    fam, quad = _build_calculus(cfg, spec)
    pcfg = ParaproductConfig(fam, quad)
    s = _as_float(cfg.params, "s", 0.8)
    p = _as_float(cfg.params, "p", 2.0)
    eps = _as_float(cfg.params, "eps", 0.05)
    d = canonical_dim(scene)
    if not (d / p < s < 1):
        raise ConfigError("s must lie in (d/p, 1): got s=%g, d/p=%g"
                          % (s, d / p))
    if eps <= 0:
        raise ConfigError("eps must be positive")
    kr = cfg.params.get("k_range", "3:6")
    try:
        a, b = kr.split(":")
        k_range = tuple(range(int(a), int(b) + 1))
    except ValueError:
        raise ConfigError("k_range must look like 3:6, got %r" % kr)
    tag = cfg.params.get("nonlinearity", "sin")
    F = make_nonlinearity(tag)
    rep = smoothing_study(pcfg, spec, F, s=s, p=p, eps=eps, k_range=k_range)
    stars = [r["ratio_star"] for r in rep["rows"]]
    checks.append(_check("sigma* ratio series max/min",
                         max(stars) / min(stars), 3.0, rep["bounded_star"]))
    checks.append(_note("bumped series increasing",
                        1.0 if rep["increasing_bump"] else 0.0))
    if rep["truncated"]:
        checks.append(_note("lacunary depth truncated", 1.0))
    cols.extend(["K", "ratio_star", "ratio_bump"])
    for r in rep["rows"]:
        rows.append([r["K"], r["ratio_star"], r["ratio_bump"]])
    return "smoothing %s: sigma*=%g spread %.3f" % (
        tag, rep["sigma_star"], max(stars) / min(stars))


def _run_propagate(cfg, seed, checks, cols, rows):
    scene = _build_scene(cfg)
    spec = eigendecompose(scene)
    fam, quad = _build_calculus(cfg, spec)
    pcfg = ParaproductConfig(fam, quad)
    recipe = cfg.params.get("recipe", "gradient_circle")
    s = _as_float(cfg.params, "s", 0.8)
    p = _as_float(cfg.params, "p", 2.0)
    d = canonical_dim(scene)
    gap = s - d / p
    if gap <= 0:
        raise ConfigError("need s > d/p for the propagation window, got "
                          "s=%g d/p=%g" % (s, d / p))
    from .propagate import PropagateError
    try:
        prob = manufacture(scene, recipe, s_target=s, p=p)
    except PropagateError as e:
        raise ConfigError(str(e))
    checks.append(_check("manufactured residual", prob.residual, 1e-10,
                         prob.residual <= 1e-10))
    sizes_raw = cfg.params.get("sizes", "64,128,256")
    try:
        sizes = tuple(int(x) for x in sizes_raw.split(","))
    except ValueError:
        raise ConfigError("sizes must be a comma list, got %r" % sizes_raw)
    rho_in = _as_float(cfg.params, "rho_in", 0.5 * gap)
    rho_out = _as_float(cfg.params, "rho_out", gap + 0.4)
    rin = refinement_study(recipe, sizes, rho_in, s, p)
    rout = refinement_study(recipe, sizes, rho_out, s, p)
    checks.append(_check("bounded U series max/min (rho=%g)" % rho_in,
                         max(rin["series"]) / min(rin["series"]), 3.0,
                         rin["bounded"]))
    checks.append(_check("increasing U series (rho=%g)" % rho_out,
                         rout["series"][-1], None, rout["increasing"]))
    alpha = _as_float(cfg.params, "alpha", 0.3)
    tw = twisted_consistency(pcfg, spec, prob, alpha)
    checks.append(_check("twisted route residual (alpha=%g)" % alpha,
                         tw["max_residual"], 1e-5,
                         tw["max_residual"] <= 1e-5))
    cols.extend(["size", "U_in", "U_out"])
    for n, a, b in zip(sizes, rin["series"], rout["series"]):
        rows.append([n, a, b])
    return "propagate %s: twisted %.3e" % (recipe, tw["max_residual"])


_RUNNERS = {
    "geometry": _run_geometry,
    "reconstruct": _run_reconstruct,
    "decompose": _run_decompose,
    "sobolev": _run_sobolev,
    "paralinearize": _run_paralinearize,
    "smoothing": _run_smoothing,
    "propagate": _run_propagate,
}


# -- artifact writers ---------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(report):
    buf = io.StringIO()
    buf.write(",".join(report["series_columns"]) + "\n")
    for row in report["series_rows"]:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_artifacts(report, outdir, emit="both", stem=None):
    os.makedirs(outdir, exist_ok=True)
    stem = stem or ("run_%s" % report["experiment"])
    paths = {}
    if emit in ("json", "both"):
        p = os.path.join(outdir, stem + ".json")
        with open(p, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths["json"] = p
    if emit in ("csv", "both") and report["series_columns"]:
        p = os.path.join(outdir, stem + ".csv")
        with open(p, "w") as fh:
            fh.write(render_csv(report))
        paths["csv"] = p
    return paths


# -- suite --------------------------------------------------------------------


def run_suite(config_dir):
    """Run every .ini in a directory (sorted), aggregating a summary table.

    Never short-circuits: every config runs; config errors are reported as
    rows. Returns (summary dict, severity) with severity 0 (all pass),
    1 (some invariant failed), 2 (some config failed to load or validate).
    """
    if not os.path.isdir(config_dir):
        raise ConfigError("suite directory %r not found" % config_dir)
    names = sorted(fn for fn in os.listdir(config_dir) if fn.endswith(".ini"))
    rows = []
    reports = []
    severity = 0
    for fn in names:
        path = os.path.join(config_dir, fn)
        try:
            cfg = load_config(path)
            rep = run(cfg)
            reports.append((fn, rep))
            rows.append({"config": fn, "experiment": rep["experiment"],
                         "status": "pass" if rep["passed"] else "FAIL",
                         "summary": rep["summary"]})
            if not rep["passed"]:
                severity = max(severity, 1)
        except ConfigError as e:
            rows.append({"config": fn, "experiment": "?",
                         "status": "CONFIG ERROR", "summary": str(e)})
            severity = max(severity, 2)
    summary = {"schema_version": SCHEMA_VERSION, "rows": rows,
               "configs": len(names), "severity": severity}
    return summary, reports, severity
