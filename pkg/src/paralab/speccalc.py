"""Spectral calculus: mu-weighted eigenbasis of L, the multiplier family,
and the logarithmic quadrature that discretizes int_0^inf m(tL) dt/t.

All operator functions act through the eigenbasis. The basis is orthonormal
for the mu-weighted inner product, which is what makes analysis followed by
synthesis the identity on any scene, uniform measure or not.
"""

import os

import numpy as np

from .scene import KERNEL_RTOL

SPECTRAL_CAP = 2048
LOG10 = np.log(10.0)


class SpectralError(ValueError):
    pass


class SpectralData:
    """Eigenpairs of L in the mu-weighted sense.

    L = E diag(lam) E^T M with E^T M E = I (M = diag(mu)). Columns of E are
    the eigenvectors; lam is ascending with near-zero values clamped to 0.

    Attributes
    ----------
    lam : ndarray, shape (n,)
    E : ndarray, shape (n, n)
    EtM : ndarray, shape (n, n)
        Analysis map; coeffs = EtM @ f.
    kernel_dim : int
    scene : Scene
    """

    def __init__(self, scene, lam, E):
        self.scene = scene
        self.lam = lam
        self.E = E
        self.EtM = E.T * scene.mu[None, :]
        self.kernel_dim = int(np.sum(lam == 0.0))
        self.n = lam.size

    def analyze(self, f):
        return self.EtM @ f

    def synthesize(self, c):
        return self.E @ c

    def project_kernel(self, f):
        """Projection onto ker L."""
        kd = self.kernel_dim
        if kd == 0:
            return np.zeros_like(f)
        c = self.EtM[:kd] @ f
        return self.E[:, :kd] @ c

    def remove_kernel(self, f):
        return f - self.project_kernel(f)

    def lam_min_positive(self):
        pos = self.lam[self.lam > 0]
        if pos.size == 0:
            raise SpectralError("L has no positive eigenvalues")
        return float(pos.min())

    def lam_max(self):
        return float(self.lam.max())


def eigendecompose(scene, cache_dir=None):
    """Diagonalize L = -sum X_k^2 in the mu-weighted inner product.

    Conjugates by M^(1/2) to get a symmetric matrix, symmetrizes against
    rounding, and rescales eigenvectors back. Eigenvalues below
    KERNEL_RTOL * lam_max are clamped to exactly zero; their count is
    kernel_dim.

    Parameters
    ----------
    cache_dir : str, optional
        Directory for an .npz sidecar keyed by the scene content hash.
    """
    if scene.n > SPECTRAL_CAP:
        raise SpectralError("scene size %d exceeds spectral cap %d"
                            % (scene.n, SPECTRAL_CAP))
    cache_path = None
    if cache_dir is not None:
        cache_path = os.path.join(cache_dir,
                                  "paralab_spec_%s.npz" % scene.content_hash())
        if os.path.exists(cache_path):
            with np.load(cache_path) as z:
                lam, E = z["lam"], z["E"]
            if lam.shape == (scene.n,) and E.shape == (scene.n, scene.n):
                return SpectralData(scene, lam, E)
    L = scene.laplacian()
    rt = np.sqrt(scene.mu)
    S = (rt[:, None] * L) / rt[None, :]
    S = (S + S.T) / 2
    lam, V = np.linalg.eigh(S)
    lam[lam < KERNEL_RTOL * max(lam[-1], 1e-300)] = 0.0
    E = V / rt[:, None]
    if cache_path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        np.savez(cache_path, lam=lam, E=E)
    return SpectralData(scene, lam, E)


# -- multiplier family --------------------------------------------------------


def _gamma_int(N):
    # Gamma(N) for integer N >= 1
    out = 1.0
    for k in range(2, N):
        out *= k
    return out


class MultiplierFamily:
    """The order-N multiplier family.

    psi(x) = c0 x^N e^(-x) (1 - e^(-x)) with c0 chosen so that
    -int_0^inf psi(u) du/u = 1, and psi_tilde = psi / x. phi and phi_tilde
    are the decaying primitives (phi' = psi, phi_tilde' = psi_tilde, both
    vanishing at infinity), normalized so phi_tilde(0) = 1. The primitives
    evaluate through closed forms built on the regularized upper incomplete
    gamma Q(a, x) = e^(-x) sum_(k<a) x^k / k!, so no special-function
    library is involved.
    """

    def __init__(self, order=8):
        if order < 2 or int(order) != order:
            raise SpectralError("multiplier order must be an integer >= 2")
        self.order = int(order)
        self.c0 = -1.0 / (_gamma_int(self.order) * (1.0 - 2.0 ** (-self.order)))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise SpectralError("multiplier arguments must be >= 0")
        return x

    def _Q(self, a, x):
        # regularized upper incomplete gamma for integer a, stable for x >= 0
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        small = x < 700.0
        xs = x[small]
        term = np.ones_like(xs)
        s = term.copy()
        for k in range(1, a):
            term = term * xs / k
            s += term
        out[small] = np.exp(-xs) * s
        return out

    def psi(self, x):
        x = self._check(x)
        out = np.zeros_like(x)
        m = (x > 0) & (x < 700.0)
        xm = x[m]
        out[m] = self.c0 * xm ** self.order * np.exp(-xm) * (-np.expm1(-xm))
        return out

    def psi_tilde(self, x):
        # psi(x)/x, finite at 0 (vanishes to order N-1)
        x = self._check(x)
        out = np.zeros_like(x)
        m = (x > 0) & (x < 700.0)
        xm = x[m]
        out[m] = self.c0 * xm ** (self.order - 1) * np.exp(-xm) * (-np.expm1(-xm))
        return out

    def phi_tilde(self, x):
        x = self._check(x)
        N = self.order
        return (self._Q(N, x) - 2.0 ** (-N) * self._Q(N, 2 * x)) / (1.0 - 2.0 ** (-N))

    def phi(self, x):
        x = self._check(x)
        N = self.order
        return N * (self._Q(N + 1, x) - 2.0 ** (-(N + 1)) * self._Q(N + 1, 2 * x)) \
            / (1.0 - 2.0 ** (-N))

    def heat(self, x):
        x = self._check(x)
        out = np.zeros_like(x)
        m = x < 700.0
        out[m] = np.exp(-x[m])
        return out

    def power(self, s):
        """z -> z^s with the convention 0^s = 0 for s != 0 (kernel modes
        are annihilated by any nonzero power, including negative ones)."""
        def f(x):
            x = self._check(x)
            if s == 0.0:
                return np.ones_like(x)
            out = np.zeros_like(x)
            m = x > 0
            out[m] = x[m] ** s
            return out
        return f

    def by_name(self, which):
        table = {
            "psi": self.psi,
            "psi_tilde": self.psi_tilde,
            "phi": self.phi,
            "phi_tilde": self.phi_tilde,
            "heat": self.heat,
        }
        if callable(which):
            return which
        if isinstance(which, tuple) and len(which) == 2 and which[0] == "power":
            return self.power(float(which[1]))
        if which in table:
            return table[which]
        raise SpectralError("unknown multiplier %r" % (which,))


def eval_multiplier(fam, which, x):
    """Evaluate a named multiplier (or ('power', s), or a callable) at x >= 0."""
    return fam.by_name(which)(np.asarray(x, dtype=float))


# -- quadrature ---------------------------------------------------------------


class QuadratureRule:
    """Midpoint rule in log t for int_0^inf m(tL) dt/t.

    Attributes
    ----------
    t : ndarray
        Node values, ascending.
    w : ndarray
        Node weights (all equal to the log step).
    degraded : bool
        True when the reproduction check -sum w psi(t lam) = 1 misses
        1e-8 somewhere on the positive spectrum.
    worst_err : float
        The worst reproduction error found.
    """

    def __init__(self, t, w, nodes_per_decade, pad_decades, t_split,
                 degraded, worst_err):
        self.t = t
        self.w = w
        self.nodes_per_decade = nodes_per_decade
        self.pad_decades = pad_decades
        self.t_split = t_split
        self.degraded = degraded
        self.worst_err = worst_err

    @property
    def t_min(self):
        return float(self.t[0])

    @property
    def t_max(self):
        return float(self.t[-1])


def make_quadrature(spec, fam, nodes_per_decade=16, pad_decades=4.0,
                    t_split=1.0):
    """Build the log-midpoint rule covering [10^-pad / lam_max,
    10^pad / lam_min_pos], with cell edges aligned at t_split so interval
    splits at that point are node-exact.

    The rule is checked by reproducing 1 = -sum_j w_j psi(t_j lam) on the
    positive spectrum; failures beyond 1e-8 set the degraded flag.
    """
    if nodes_per_decade < 1:
        raise SpectralError("nodes_per_decade must be >= 1")
    lam_max = spec.lam_max()
    lam_min = spec.lam_min_positive()
    ds = LOG10 / nodes_per_decade
    t_min = 10.0 ** (-pad_decades) / lam_max
    t_max = 10.0 ** pad_decades / lam_min
    la = np.log(t_split)
    klo = int(np.ceil((la - np.log(t_min)) / ds))
    khi = int(np.ceil((np.log(t_max) - la) / ds))
    edges = la + ds * np.arange(-klo, khi + 1)
    mids = (edges[:-1] + edges[1:]) / 2
    t = np.exp(mids)
    w = np.full(t.size, ds)
    pos = np.unique(spec.lam[spec.lam > 0])
    recon = -(w[:, None] * fam.psi(t[:, None] * pos[None, :])).sum(0)
    worst = float(np.abs(recon - 1.0).max()) if pos.size else 0.0
    return QuadratureRule(t, w, nodes_per_decade, pad_decades, t_split,
                          worst > 1e-8, worst)


# -- operator application -----------------------------------------------------


def _check_scene(spec, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (spec.n,):
        raise SpectralError("function shape %s does not match scene size %d"
                            % (f.shape, spec.n))
    return f


def apply_multiplier(spec, fam, which, t, f):
    """Apply b(tL) to f through the eigenbasis; b named, ('power', s),
    or callable."""
    f = _check_scene(spec, f)
    if t < 0:
        raise SpectralError("t must be >= 0")
    b = fam.by_name(which)
    return spec.E @ (b(t * spec.lam) * (spec.EtM @ f))


def semigroup(spec, t, f):
    """Heat semigroup e^(-tL) f."""
    fam = MultiplierFamily(2)
    return apply_multiplier(spec, fam, "heat", t, f)


def reconstruct(spec, fam, quad, f):
    """-sum_j w_j psi(t_j L) f, which reproduces f minus its kernel
    projection up to the quadrature's reproduction error."""
    f = _check_scene(spec, f)
    c = spec.EtM @ f
    tl = quad.t[:, None] * spec.lam[None, :]
    acc = -(quad.w[:, None] * fam.psi(tl)).sum(0)
    return spec.E @ (acc * c)


def square_function(spec, fam, quad, f, variant="psi"):
    """Pointwise square function.

    variant 'psi':   G(x)^2 = sum_j w_j |psi(t_j L) f (x)|^2
    variant 'grad':  G(x)^2 = sum_j w_j t_j |X phi_tilde(t_j L) f (x)|^2
    """
    f = _check_scene(spec, f)
    c = spec.EtM @ f
    tl = quad.t[:, None] * spec.lam[None, :]
    if variant == "psi":
        P = (fam.psi(tl) * c[None, :]) @ spec.E.T
        return np.sqrt((quad.w[:, None] * P ** 2).sum(0))
    if variant == "grad":
        U = (fam.phi_tilde(tl) * c[None, :]) @ spec.E.T
        acc = np.zeros(spec.n)
        for X in spec.scene.fields:
            acc += ((U @ X.T) ** 2 * (quad.w * quad.t)[:, None]).sum(0)
        return np.sqrt(acc)
    raise SpectralError("unknown square function variant %r" % (variant,))


def kernel_bound_probe(spec, t_values, geometry=None, delta=1.0):
    """Fit the off-diagonal decay of the heat kernel at each t.

    For each t the kernel matrix K_t(x, y) is compared against
    C * V(x, sqrt t)^-1 * (1 + d(x,y)/sqrt t)^(-d-2N-delta) and the smallest
    admissible C(t) is reported. Diagnostic only; nothing is asserted.

    Parameters
    ----------
    t_values : array
    geometry : GeometryReport, optional
        Supplies d_hom and the growth exponent N; computed if omitted.
    """
    from .scene import geometry_report
    scene = spec.scene
    if geometry is None:
        geometry = geometry_report(scene)
    d_hom = geometry.d_hom
    Ngrow = geometry.growth_fit
    d = scene.metric
    mu = scene.mu
    finite = np.isfinite(d)
    rows = []
    for t in np.asarray(t_values, dtype=float):
        K = (spec.E * np.exp(-t * spec.lam)[None, :]) @ spec.EtM
        rt = np.sqrt(t)
        vol = (d < rt) @ mu
        bound = (1.0 + d / rt) ** (-(d_hom + 2 * Ngrow + delta)) / vol[:, None]
        C = float(np.abs(K[finite] / bound[finite]).max())
        rows.append({"t": float(t), "C": C,
                     "max_offdiag": float(np.abs(K - np.diag(np.diag(K))).max())})
    return {"d_hom": d_hom, "growth_fit": Ngrow, "delta": delta, "rows": rows}
