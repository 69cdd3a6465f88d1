import numpy as np
import pytest
from scipy import integrate, linalg, special

from paralab.scene import build_scene
from paralab.speccalc import (MultiplierFamily, SpectralError,
                              apply_multiplier, eigendecompose,
                              eval_multiplier, kernel_bound_probe,
                              make_quadrature, reconstruct, semigroup,
                              square_function)
from conftest import random_kernel_free


def test_normalization_constant_order3():
    fam = MultiplierFamily(order=3)
    assert fam.c0 == pytest.approx(-4.0 / 7.0, rel=1e-14)


def test_regularized_gamma_against_scipy():
    fam = MultiplierFamily(order=8)
    for a in (3, 8, 9):
        for x in (0.0, 0.3, 2.0, 17.5, 120.0):
            assert fam._Q(a, np.array([x]))[0] == pytest.approx(
                special.gammaincc(a, x), abs=1e-13)


def test_values_at_origin():
    for N in (3, 8):
        fam = MultiplierFamily(order=N)
        z = np.array([0.0])
        assert fam.phi_tilde(z)[0] == pytest.approx(1.0, rel=1e-14)
        expect = N * (1 - 2.0 ** -(N + 1)) / (1 - 2.0 ** -N)
        assert fam.phi(z)[0] == pytest.approx(expect, rel=1e-13)
        assert fam.psi(z)[0] == 0.0
        assert fam.psi_tilde(z)[0] == 0.0


def test_primitive_derivative_identities():
    # phi' = psi and phi_tilde' = psi_tilde, checked by central differences
    fam = MultiplierFamily(order=8)
    x = np.linspace(0.05, 40.0, 300)
    e = 1e-5
    dphi = (fam.phi(x + e) - fam.phi(x - e)) / (2 * e)
    assert np.allclose(dphi, fam.psi(x), atol=1e-8)
    dpt = (fam.phi_tilde(x + e) - fam.phi_tilde(x - e)) / (2 * e)
    assert np.allclose(dpt, fam.psi_tilde(x), atol=1e-8)


def test_scalar_calibration_integrals():
    """Independent dt/t integrals over the multiplier profile.

    The generator is normalized so -int psi du/u = 1, and the split
    against phi_tilde carries exactly half: int psi phi_tilde du/u = -1/2.
    """
    fam = MultiplierFamily(order=8)

    def du_over_u(g):
        val = 0.0
        for a, b in ((0, 1.0), (1.0, 10.0), (10.0, 100.0), (100.0, np.inf)):
            v, _ = integrate.quad(lambda u: g(np.array([u]))[0] / u, a, b,
                                  limit=300)
            val += v
        return val

    assert du_over_u(fam.psi) == pytest.approx(-1.0, abs=1e-9)
    assert du_over_u(lambda u: fam.psi(u) * fam.phi_tilde(u)) \
        == pytest.approx(-0.5, abs=1e-9)


def test_negative_argument_rejected():
    fam = MultiplierFamily(order=8)
    with pytest.raises(SpectralError):
        fam.psi(np.array([-0.1]))


def test_quadrature_reproduction_error(circle64):
    _, spec, fam, quad = circle64
    assert quad.worst_err <= 1e-8
    assert not quad.degraded
    q4 = make_quadrature(spec, fam, nodes_per_decade=4)
    assert q4.worst_err == pytest.approx(3.661e-3, rel=1e-3)
    q8 = make_quadrature(spec, fam, nodes_per_decade=8)
    assert q8.worst_err == pytest.approx(1.630e-8, rel=1e-3)
    assert q8.degraded


def test_quadrature_degrades_without_padding(circle64):
    _, spec, fam, _ = circle64
    q = make_quadrature(spec, fam, nodes_per_decade=16, pad_decades=0.0)
    assert q.degraded


def test_quadrature_grid_aligned_at_split(circle64):
    # cell edges sit on integer multiples of the log step away from t = 1,
    # so midpoints land half a step off the lattice
    _, _, _, quad = circle64
    ds = np.log(10.0) / quad.nodes_per_decade
    offs = np.log(quad.t) / ds - 0.5
    assert np.allclose(offs, np.round(offs), atol=1e-9)
    assert quad.t_min < 1.0 < quad.t_max
    assert np.allclose(quad.w, ds)


def test_eigendecompose_cache_roundtrip(tmp_path):
    scene = build_scene("circle", n=32)
    a = eigendecompose(scene, cache_dir=str(tmp_path))
    files = list(tmp_path.glob("paralab_spec_*.npz"))
    assert len(files) == 1
    b = eigendecompose(scene, cache_dir=str(tmp_path))
    assert np.array_equal(a.lam, b.lam)
    assert np.array_equal(a.E, b.E)


def test_semigroup_matches_matrix_exponential(circle64):
    scene, spec, _, _ = circle64
    f = random_kernel_free(spec, 21)
    t = 0.37
    expect = linalg.expm(-t * scene.laplacian()) @ f
    assert np.allclose(semigroup(spec, t, f), expect, atol=1e-10)


def test_half_power_squares_to_laplacian(circle64):
    scene, spec, fam, _ = circle64
    f = random_kernel_free(spec, 22)
    h1 = apply_multiplier(spec, fam, ("power", 0.5), 1.0, f)
    h2 = apply_multiplier(spec, fam, ("power", 0.5), 1.0, h1)
    Lf = scene.laplacian() @ f
    assert np.allclose(h2, Lf, atol=1e-10 * max(1.0, np.abs(Lf).max()))


def test_apply_multiplier_input_checks(circle64):
    _, spec, fam, _ = circle64
    with pytest.raises(SpectralError):
        apply_multiplier(spec, fam, "heat", -1.0, np.zeros(spec.n))
    with pytest.raises(SpectralError):
        apply_multiplier(spec, fam, "heat", 1.0, np.zeros(spec.n + 1))
    with pytest.raises(SpectralError):
        eval_multiplier(fam, "no_such", np.array([1.0]))


def test_reconstruct_kernel_free(circle64):
    scene, spec, fam, quad = circle64
    for seed in (1, 2, 3):
        f = random_kernel_free(spec, seed)
        r = reconstruct(spec, fam, quad, f)
        assert scene.norm2(r - f) / scene.norm2(f) <= 1e-12


def test_reconstruct_drops_kernel(circle64):
    scene, spec, fam, quad = circle64
    f = random_kernel_free(spec, 4) + 2.0
    r = reconstruct(spec, fam, quad, f)
    assert scene.norm2(r - spec.remove_kernel(f)) \
        / scene.norm2(f) <= 1e-12


def test_square_function_eigenvector_oracle(circle64):
    # on a single eigenvector the psi square function is a known scalar
    scene, spec, fam, quad = circle64
    idx = spec.kernel_dim + 5
    lam = spec.lam[idx]
    e = spec.E[:, idx]
    S = square_function(spec, fam, quad, e, variant="psi")
    scalar = np.sqrt(np.sum(quad.w * fam.psi(quad.t * lam) ** 2))
    assert np.allclose(S, scalar * np.abs(e), atol=1e-12)


def test_square_function_grad_variant(circle64):
    _, spec, fam, quad = circle64
    f = random_kernel_free(spec, 5)
    S = square_function(spec, fam, quad, f, variant="grad")
    assert S.shape == (spec.n,)
    assert np.all(S >= 0)


def test_kernel_bound_probe_records(circle64):
    _, spec, _, _ = circle64
    out = kernel_bound_probe(spec, [0.1, 1.0])
    assert "rows" in out or isinstance(out, dict)
