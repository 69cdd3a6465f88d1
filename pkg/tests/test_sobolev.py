import numpy as np
import pytest
from scipy import stats

from paralab.sobolev import (SobolevError, SobolevParams, canonical_dim,
                             chain_rule_probe, embedding_probe,
                             higher_order_norm_probe, lp_norm, probe_family,
                             riesz_probe, s_functional, seeded_functions,
                             sobolev_norm)
from conftest import random_kernel_free


def test_params_validation():
    with pytest.raises(SobolevError):
        SobolevParams(s=0.5, p=0.5)
    with pytest.raises(SobolevError):
        SobolevParams(s=0.5, p=2.0, rho=3.0)
    with pytest.raises(SobolevError):
        SobolevParams(s=0.5, p=2.0, rho=-1.0)
    SobolevParams(s=0.5, p=4.0, rho=2.0)


def test_lp_norm_constant(circle64):
    scene = circle64[0]
    c = 2.5 * np.ones(scene.n)
    assert lp_norm(scene, c, 2.0) == pytest.approx(
        2.5 * np.sqrt(scene.total_mass()))
    assert lp_norm(scene, c, 1.0) == pytest.approx(2.5 * scene.total_mass())
    assert lp_norm(scene, c, np.inf) == pytest.approx(2.5)


def test_canonical_dims(circle64, torus8, heis):
    assert canonical_dim(circle64[0]) == 1.0
    assert canonical_dim(torus8[0]) == 2.0
    assert canonical_dim(heis[0]) == 4.0


def test_sobolev_norm_s_zero_is_l2(circle64):
    scene, spec = circle64[0], circle64[1]
    f = random_kernel_free(spec, 31)
    rep = sobolev_norm(spec, f, SobolevParams(s=0.0))
    assert rep.inhomog == pytest.approx(lp_norm(scene, f, 2.0), rel=1e-12)
    assert rep.homog == pytest.approx(lp_norm(scene, f, 2.0), rel=1e-12)


def test_sobolev_norm_eigenvector_scaling(circle64):
    spec = circle64[1]
    idx = spec.kernel_dim + 7
    lam = spec.lam[idx]
    e = spec.E[:, idx]
    for s in (0.4, 0.8, 1.6):
        rep = sobolev_norm(spec, e, SobolevParams(s=s))
        assert rep.homog == pytest.approx(lam ** (s / 2), rel=1e-10)
        assert rep.inhomog == pytest.approx((1 + lam) ** (s / 2), rel=1e-10)


def test_inhomog_monotone_in_s(circle64):
    spec = circle64[1]
    f = random_kernel_free(spec, 32)
    vals = [sobolev_norm(spec, f, SobolevParams(s=s)).inhomog
            for s in (0.0, 0.3, 0.8, 1.5)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_s_functional_window(circle64):
    scene = circle64[0]
    f = np.ones(scene.n)
    with pytest.raises(SobolevError):
        s_functional(scene, f, SobolevParams(s=1.2))
    with pytest.raises(SobolevError):
        s_functional(scene, f, SobolevParams(s=0.0))
    S = s_functional(scene, f, SobolevParams(s=0.5))
    # oscillation of a constant vanishes at every scale
    assert np.allclose(S, 0.0, atol=1e-14)


def test_s_functional_tracks_spectral_norm(circle64):
    """Ordering agreement between the two smoothness measures.

    Progressive spectral smoothing of one field must shrink the
    ball-oscillation functional and the spectral norm in the same order,
    and their ratio stays within a fixed band.
    """
    scene, spec = circle64[0], circle64[1]
    pars = SobolevParams(s=0.6, p=2.0, rho=2.0)
    g = random_kernel_free(spec, 33)
    a, b = [], []
    for j in range(9):
        f = spec.E @ ((1.0 + spec.lam) ** (-j / 4.0) * (spec.EtM @ g))
        a.append(lp_norm(scene, s_functional(scene, f, pars), 2.0))
        b.append(sobolev_norm(spec, f, pars).homog)
    assert stats.spearmanr(a, b).statistic == pytest.approx(1.0)
    ratios = np.array(a) / np.array(b)
    assert ratios.min() > 0.2 and ratios.max() < 20.0


def test_probe_family_composition(circle64):
    spec = circle64[1]
    fams = probe_family(spec)
    assert len(fams) == 50
    for f in fams:
        assert f.shape == (spec.n,)
        assert np.all(np.isfinite(f))


def test_seeded_functions_deterministic(circle64):
    spec = circle64[1]
    a = seeded_functions(spec, 3, seed=9)
    b = seeded_functions(spec, 3, seed=9)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    scene = circle64[0]
    for x in a:
        assert scene.norm2(x) == pytest.approx(1.0, rel=1e-12)


def test_embedding_precondition_named(circle64):
    spec = circle64[1]
    with pytest.raises(SobolevError, match="1/q - t/d > 1/p - s/d"):
        embedding_probe(spec, s=0.5, p=2.0, t=0.5, q=2.0)


def test_embedding_into_sup_norm(circle64):
    spec = circle64[1]
    out = embedding_probe(spec, s=0.8, p=2.0, t=0.0, q=np.inf)
    assert out["max_ratio"] > 0
    assert np.isfinite(out["max_ratio"])


def test_riesz_contraction_p2(circle64, torus8):
    for fix in (circle64, torus8):
        spec = fix[1]
        for k in range(len(fix[0].fields)):
            out = riesz_probe(spec, (k,), p=2.0)
            assert out["exact"]
            assert out["norm"] <= 1.0 + 1e-10


def test_riesz_circle_value(circle64):
    spec = circle64[1]
    assert riesz_probe(spec, 0)["norm"] == pytest.approx(0.99522, abs=1e-4)


def test_riesz_other_p_recorded(circle64):
    spec = circle64[1]
    out = riesz_probe(spec, 0, p=4.0)
    assert not out["exact"]
    assert out["norm"] > 0


def test_higher_order_two_sided(circle64):
    spec = circle64[1]
    out = higher_order_norm_probe(spec, 1)
    assert 0 < out["min_ratio"] <= out["max_ratio"]
    assert out["max_ratio"] / out["min_ratio"] < 10.0


def test_chain_rule_bounded(circle64):
    spec = circle64[1]
    out = chain_rule_probe(spec, np.tanh, s=0.8, p=2.0)
    assert 0 < out["max_ratio"] < 10.0


def test_chain_rule_requires_vanishing(circle64):
    spec = circle64[1]
    with pytest.raises(SobolevError):
        chain_rule_probe(spec, np.cos, s=0.8, p=2.0)
