import numpy as np
import pytest

from paralab.paralin import (Nonlinearity, ParalinError, VectorNonlinearity,
                             compute_terms, lacunary_probe,
                             make_nonlinearity, paralin_remainder,
                             paralinearize, smoothing_study,
                             vector_paralinearize)
from paralab.paraproduct import ParaproductConfig, rest
from paralab.speccalc import MultiplierFamily, make_quadrature
from conftest import random_kernel_free


def test_registry_derivatives_consistent():
    for tag in ("sin", "tanh", "square", "cube", "expm1"):
        make_nonlinearity(tag).validate_derivatives()
    make_nonlinearity("poly", coeffs=[1.0, -0.5, 0.25]).validate_derivatives()


def test_registry_rejects_unknown():
    with pytest.raises(ParalinError):
        make_nonlinearity("cosh")
    with pytest.raises(ParalinError):
        make_nonlinearity("poly")


def test_nonlinearity_must_vanish_at_origin():
    with pytest.raises(ParalinError):
        Nonlinearity("cos", np.cos, lambda x: -np.sin(x),
                     lambda x: -np.cos(x))


def test_quadratic_remainder_is_rest(circle64, circle64_cfg):
    # for F(u) = u^2 the chain rule is exact and the remainder collapses
    # onto the symmetric rest term
    scene, spec = circle64[0], circle64[1]
    F = make_nonlinearity("square")
    for seed in (61, 62):
        f = random_kernel_free(spec, seed)
        w = paralin_remainder(circle64_cfg, spec, F, f)
        r = rest(circle64_cfg, spec, f, f)
        assert scene.norm2(w - r) / scene.norm2(r) <= 1e-10


def test_linear_nonlinearity_gives_zero(circle64, circle64_cfg):
    scene, spec = circle64[0], circle64[1]
    F = make_nonlinearity("poly", coeffs=[1.0])
    f = random_kernel_free(spec, 63)
    w = paralin_remainder(circle64_cfg, spec, F, f)
    assert scene.norm2(w) / scene.norm2(f) <= 1e-12


def test_constant_input_terms(circle64, circle64_cfg):
    # a kernel input never moves: II, III, IV, V vanish and I carries F(c)
    scene, spec = circle64[0], circle64[1]
    F = make_nonlinearity("sin")
    f = 0.7 * np.ones(scene.n)
    T = compute_terms(circle64_cfg, spec, F, f, nodes_per_decade=16)
    for key in ("II", "III", "IV", "V"):
        assert np.abs(T[key]).max() <= 1e-12
    assert np.allclose(T["I"], np.sin(0.7) * np.ones(scene.n), atol=1e-12)
    assert T["consistency_residual"] <= 1e-12


def test_five_terms_reproduce_remainder(circle64, circle64_cfg):
    spec = circle64[1]
    F = make_nonlinearity("sin")
    f, _ = lacunary_probe(spec, 3, 0.85)
    T = compute_terms(circle64_cfg, spec, F, f, nodes_per_decade=96)
    assert T["nodes_per_decade"] == 96
    assert T["consistency_residual"] <= 1e-4


def test_term_split_converges_in_resolution(circle64, circle64_cfg):
    spec = circle64[1]
    F = make_nonlinearity("sin")
    f, _ = lacunary_probe(spec, 3, 0.85)
    r16 = compute_terms(circle64_cfg, spec, F, f,
                        nodes_per_decade=16)["consistency_residual"]
    r48 = compute_terms(circle64_cfg, spec, F, f,
                        nodes_per_decade=48)["consistency_residual"]
    # the t = 1 boundary converges at second order in the log step
    assert r48 < r16 / 4


def test_paralinearize_report(circle64, circle64_cfg):
    spec = circle64[1]
    F = make_nonlinearity("sin")
    f, _ = lacunary_probe(spec, 3, 0.85)
    rep = paralinearize(circle64_cfg, spec, F, f, s=0.8, p=2.0, eps=0.05)
    assert rep.sigma_star == pytest.approx(2 * 0.8 - 0.5)
    assert rep.w_norms["sigma_star"].inhomog > 0
    assert rep.w_norms["s"].inhomog > 0
    assert rep.fF_norm.inhomog > 0
    assert rep.terms is None
    rep2 = paralinearize(circle64_cfg, spec, F, f, with_terms=True,
                         term_nodes_per_decade=48)
    assert rep2.consistency_residual <= 1e-3


def test_paralinearize_window_checks(circle64, circle64_cfg):
    spec = circle64[1]
    F = make_nonlinearity("sin")
    f, _ = lacunary_probe(spec, 3, 0.85)
    with pytest.raises(ParalinError, match=r"s must lie in \(d/p, 1\)"):
        paralinearize(circle64_cfg, spec, F, f, s=0.3, p=2.0)
    with pytest.raises(ParalinError, match=r"s must lie in \(d/p, 1\)"):
        paralinearize(circle64_cfg, spec, F, f, s=1.1, p=2.0)
    with pytest.raises(ParalinError):
        paralinearize(circle64_cfg, spec, F, f, s=0.8, p=2.0, eps=0.0)


def test_lacunary_probe_truncates(circle64):
    spec = circle64[1]
    f, realized = lacunary_probe(spec, 10, 0.85)
    assert realized < 10
    assert realized == 3
    f2, r2 = lacunary_probe(spec, 2, 0.85)
    assert r2 == 2


def test_smoothing_study_flags(circle64, circle64_cfg):
    spec = circle64[1]
    F = make_nonlinearity("sin")
    out = smoothing_study(circle64_cfg, spec, F, s=0.8, p=2.0, eps=0.05,
                          k_range=(2, 3, 4))
    assert out["sigma_star"] == pytest.approx(1.1)
    assert len(out["rows"]) == 3
    assert out["truncated"]
    stars = [r["ratio_star"] for r in out["rows"]]
    assert out["bounded_star"] == (max(stars) <= 3.0 * min(stars))
    bumps = [r["ratio_bump"] for r in out["rows"]]
    assert out["increasing_bump"] == all(
        b > a for a, b in zip(bumps, bumps[1:]))


def test_smoothing_study_window(circle64, circle64_cfg):
    spec = circle64[1]
    F = make_nonlinearity("sin")
    with pytest.raises(ParalinError):
        smoothing_study(circle64_cfg, spec, F, s=0.4, p=2.0)
    with pytest.raises(ParalinError):
        smoothing_study(circle64_cfg, spec, F, s=0.8, p=2.0, eps=-0.1)


def test_vector_single_slot_reduces_to_scalar(circle64, circle64_cfg):
    spec = circle64[1]
    f = random_kernel_free(spec, 64)
    Fv = VectorNonlinearity("sin", lambda u: np.sin(u),
                            [lambda u: np.cos(u)])
    out = vector_paralinearize(circle64_cfg, spec, Fv, f, [None])
    w = paralin_remainder(circle64_cfg, spec, make_nonlinearity("sin"), f)
    assert np.allclose(out["w"], w, atol=1e-14)


def test_vector_product_matches_rest(circle9):
    """F(u, v) = u v with v the derivative slot.

    On an odd circle the kernel is the constants alone, both slots are
    mean-free, and the vector remainder is exactly the symmetric rest
    term of the decomposition identity.
    """
    scene, spec, fam, quad = circle9
    cfg = ParaproductConfig(fam, quad)
    f = random_kernel_free(spec, 65)
    Fv = VectorNonlinearity("uv", lambda u, v: u * v,
                            [lambda u, v: v, lambda u, v: u])
    out = vector_paralinearize(cfg, spec, Fv, f, [None, 0])
    g = scene.fields[0] @ f
    r = rest(cfg, spec, f, g)
    assert scene.norm2(out["w"] - r) / scene.norm2(r) <= 1e-10
    assert np.array_equal(out["slots"][1], g)


def test_vector_index_checks(circle64, circle64_cfg):
    spec = circle64[1]
    f = random_kernel_free(spec, 66)
    Fv = VectorNonlinearity("sin", lambda u: np.sin(u),
                            [lambda u: np.cos(u)])
    with pytest.raises(ParalinError):
        vector_paralinearize(circle64_cfg, spec, Fv, f, [None, 0])
    with pytest.raises(ParalinError):
        vector_paralinearize(circle64_cfg, spec, Fv, f, [5])


def test_vector_requires_vanishing_unless_waived():
    with pytest.raises(ParalinError):
        VectorNonlinearity("bad", lambda u: u + 1.0, [lambda u: np.ones_like(u)])
    VectorNonlinearity("ok", lambda u: u + 1.0,
                       [lambda u: np.ones_like(u)], require_zero=False)
