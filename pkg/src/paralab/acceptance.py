"""The ten shipped acceptance checks.

Each criterion function is self-contained (builds its scenes, runs the
computation, times itself) and returns a record with individual check rows
and a single summary line. The test suite and the CLI suite runner both
call these, so the pass/fail table is computed one way only.
"""

import time

import numpy as np

from .paralin import (compute_terms, lacunary_probe, make_nonlinearity,
                      paralin_remainder, smoothing_study)
from .paraproduct import (ParaproductConfig, decompose_product, rest,
                          residual_doubling_study,
                          structural_identity_residual)
from .propagate import refinement_study
from .scene import build_scene, geometry_report
from .sobolev import riesz_probe, seeded_functions
from .speccalc import (MultiplierFamily, eigendecompose, make_quadrature,
                       reconstruct)

_SPEC_CACHE = {}


def _spec(kind, **kw):
    key = (kind, tuple(sorted(kw.items())))
    if key not in _SPEC_CACHE:
        scene = build_scene(kind, **kw)
        _SPEC_CACHE[key] = eigendecompose(scene)
    return _SPEC_CACHE[key]


def _check(name, value, threshold, passed):
    return {"name": name, "value": float(value),
            "threshold": float(threshold), "passed": bool(passed)}


def _flag(name, passed, value=None):
    return {"name": name, "value": value, "threshold": None,
            "passed": bool(passed)}


def _finish(num, title, checks, t0, limit):
    wall = time.perf_counter() - t0
    checks.append(_check("wall time (s)", wall, limit, wall < limit))
    passed = all(c["passed"] for c in checks)
    parts = []
    for c in checks[:-1]:
        if c["value"] is None:
            parts.append("%s: %s" % (c["name"], "yes" if c["passed"] else "NO"))
        else:
            parts.append("%s=%.3e" % (c["name"], c["value"]))
    line = "criterion %2d %s: %s (%s; %.2fs)" % (
        num, "PASS" if passed else "FAIL", title, "; ".join(parts), wall)
    return {"criterion": num, "title": title, "passed": passed,
            "checks": checks, "wall_time_s": wall, "line": line}


def criterion_1():
    """Quadrature reproduces the multiplier normalization on the circle
    spectrum to 1e-8 at the default resolution."""
    t0 = time.perf_counter()
    spec = _spec("circle", n=64)
    fam = MultiplierFamily(8)
    quad = make_quadrature(spec, fam, nodes_per_decade=16, pad_decades=4.0)
    checks = [
        _check("worst reproduction error", quad.worst_err, 1e-8,
               quad.worst_err <= 1e-8),
        _flag("rule not degraded", not quad.degraded),
    ]
    return _finish(1, "scalar normalization", checks, t0, 1.0)


def criterion_2():
    """Reconstruction of 50 seeded kernel-free functions, relative L2
    error at most 1e-6 each."""
    t0 = time.perf_counter()
    spec = _spec("circle", n=64)
    fam = MultiplierFamily(8)
    quad = make_quadrature(spec, fam)
    scene = spec.scene
    worst = 0.0
    for f in seeded_functions(spec, 50, seed=1234):
        err = scene.norm2(reconstruct(spec, fam, quad, f) - f) / scene.norm2(f)
        worst = max(worst, err)
    checks = [_check("max relative L2 error", worst, 1e-6, worst <= 1e-6)]
    return _finish(2, "reconstruction", checks, t0, 5.0)


def criterion_3():
    """Product decomposition residual at most 1e-5 relative on 20 seeded
    pairs, strictly decreasing under quadrature doubling."""
    t0 = time.perf_counter()
    spec = _spec("circle", n=64)
    fam = MultiplierFamily(8)
    cfg = ParaproductConfig(fam, make_quadrature(spec, fam))
    fs = seeded_functions(spec, 40, seed=777)
    worst = 0.0
    for i in range(20):
        worst = max(worst, decompose_product(cfg, spec, fs[2 * i],
                                             fs[2 * i + 1]).rel_residual)
    series = residual_doubling_study(cfg, spec, fs[0], fs[1], (4, 8, 16))
    decreasing = all(b < a for a, b in zip(series, series[1:]))
    checks = [
        _check("max relative residual", worst, 1e-5, worst <= 1e-5),
        _flag("residual strictly decreases at 4/8/16 nodes per decade "
              "(%.2e, %.2e, %.2e)" % tuple(series), decreasing),
    ]
    return _finish(3, "product decomposition", checks, t0, 30.0)


def criterion_4():
    """Quadratic paralinearization remainder equals Rest(f, f) to 1e-6
    relative on the same 20 pairs' first elements."""
    t0 = time.perf_counter()
    spec = _spec("circle", n=64)
    fam = MultiplierFamily(8)
    cfg = ParaproductConfig(fam, make_quadrature(spec, fam))
    F = make_nonlinearity("square")
    scene = spec.scene
    worst = 0.0
    for f in seeded_functions(spec, 20, seed=777):
        w = paralin_remainder(cfg, spec, F, f)
        r = rest(cfg, spec, f, f)
        worst = max(worst, scene.norm2(w - r) / scene.norm2(r))
    checks = [_check("max ||w - Rest||/||Rest||", worst, 1e-6, worst <= 1e-6)]
    return _finish(4, "quadratic remainder", checks, t0, 30.0)


def criterion_5():
    """Five-term expansion reproduces the sine remainder on a lacunary
    input to 1e-4 of ||F(f)||."""
    t0 = time.perf_counter()
    spec = _spec("circle", n=64)
    fam = MultiplierFamily(8)
    cfg = ParaproductConfig(fam, make_quadrature(spec, fam))
    F = make_nonlinearity("sin")
    f, _ = lacunary_probe(spec, 3, 0.85)
    terms = compute_terms(cfg, spec, F, f, nodes_per_decade=96)
    res = terms["consistency_residual"]
    checks = [_check("consistency residual", res, 1e-4, res <= 1e-4)]
    return _finish(5, "five-term expansion", checks, t0, 60.0)


def criterion_6():
    """Riesz transform norm ||X_k (1+L)^(-1/2)|| at most 1 + 1e-10 on
    every shipped scene kind."""
    t0 = time.perf_counter()
    checks = []
    for label, spec in (
            ("circle", _spec("circle", n=64)),
            ("torus2", _spec("torus2", nx=8, ny=8)),
            ("heisenberg", _spec("heisenberg", nx=8, ny=8, nz=8))):
        for k in range(len(spec.scene.fields)):
            val = riesz_probe(spec, (k,), p=2.0)["norm"]
            checks.append(_check("%s X_%d" % (label, k), val, 1.0 + 1e-10,
                                 val <= 1.0 + 1e-10))
    return _finish(6, "Riesz transforms", checks, t0, 10.0)


def criterion_7():
    """Structural identity for the shifted paraproduct at beta = 0.5,
    residual at most 1e-8 against ||L^beta f|| ||g||_inf."""
    t0 = time.perf_counter()
    spec = _spec("circle", n=64)
    fam = MultiplierFamily(8)
    cfg = ParaproductConfig(fam, make_quadrature(spec, fam))
    fs = seeded_functions(spec, 10, seed=99)
    lac, _ = lacunary_probe(spec, 3, 0.8)
    pairs = [(fs[0], fs[1]), (fs[2], fs[3]), (fs[4], fs[5]),
             (lac, fs[6]), (fs[7], lac)]
    worst = 0.0
    for f, g in pairs:
        worst = max(worst, structural_identity_residual(cfg, spec, f, g, 0.5))
    checks = [_check("max structural residual", worst, 1e-8, worst <= 1e-8)]
    return _finish(7, "fractional shift identity", checks, t0, 30.0)


def criterion_8():
    """Smoothing contrast on the circle at n = 256: the sigma* ratio series
    stays within a factor 3 and the bumped series increases at each K."""
    t0 = time.perf_counter()
    spec = _spec("circle", n=256)
    fam = MultiplierFamily(8)
    cfg = ParaproductConfig(fam, make_quadrature(spec, fam))
    F = make_nonlinearity("sin")
    rep = smoothing_study(cfg, spec, F, s=0.8, p=2.0, eps=0.05,
                          k_range=(3, 4, 5, 6))
    stars = [r["ratio_star"] for r in rep["rows"]]
    bumps = [r["ratio_bump"] for r in rep["rows"]]
    checks = [
        _check("sigma* series max/min", max(stars) / min(stars), 3.0,
               rep["bounded_star"]),
        _flag("bumped series strictly increasing (%s)"
              % ", ".join("%.3e" % b for b in bumps), rep["increasing_bump"]),
    ]
    return _finish(8, "smoothing contrast", checks, t0, 300.0)


def criterion_9():
    """Directional regularity along the manufactured gradient equation:
    bounded U series below the roughness budget, growth above it."""
    t0 = time.perf_counter()
    s, d, p = 0.8, 1.0, 2.0
    rho_in = 0.5 * (s - d / p)
    rho_out = (s - d / p) + 0.4
    rin = refinement_study("gradient_circle", (64, 128, 256), rho_in, s, p)
    rout = refinement_study("gradient_circle", (64, 128, 256), rho_out, s, p)
    checks = [
        _check("bounded series max/min (rho=%.2f)" % rho_in,
               max(rin["series"]) / min(rin["series"]), 3.0, rin["bounded"]),
        _flag("series strictly increasing at rho=%.2f (%s)"
              % (rho_out, ", ".join("%.3e" % v for v in rout["series"])),
              rout["increasing"]),
    ]
    return _finish(9, "directional regularity", checks, t0, 300.0)


def criterion_10():
    """Geometry and operator sanity: circle doubling constant at most 3,
    exact skew-adjointness everywhere, Heisenberg positivity with a
    one-dimensional kernel."""
    t0 = time.perf_counter()
    spec_c = _spec("circle", n=64)
    rep = geometry_report(spec_c.scene)
    checks = [_check("circle doubling constant", rep.doubling_constant, 3.0,
                     rep.doubling_constant <= 3.0)]
    worst_skew = 0.0
    for label, spec in (
            ("circle", spec_c),
            ("torus2", _spec("torus2", nx=8, ny=8)),
            ("heisenberg", _spec("heisenberg", nx=8, ny=8, nz=8))):
        worst_skew = max(worst_skew, max(spec.scene.skew_residuals()))
    checks.append(_check("worst skew residual", worst_skew, 1e-10,
                         worst_skew <= 1e-10))
    spec_h = _spec("heisenberg", nx=8, ny=8, nz=8)
    scene_h = spec_h.scene
    rt = np.sqrt(scene_h.mu)
    S = (rt[:, None] * scene_h.laplacian()) / rt[None, :]
    lam_raw = np.linalg.eigvalsh((S + S.T) / 2)
    psd = lam_raw[0] >= -1e-10 * lam_raw[-1]
    checks.append(_check("heisenberg min eigenvalue", lam_raw[0], 0.0, psd))
    kd = spec_h.kernel_dim
    checks.append(_check("heisenberg kernel dimension", kd, 1.0, kd == 1))
    return _finish(10, "geometry and operator sanity", checks, t0, 30.0)


ALL = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
       criterion_6, criterion_7, criterion_8, criterion_9, criterion_10)


def run_criterion(k):
    return ALL[k - 1]()


def run_all():
    return [fn() for fn in ALL]
