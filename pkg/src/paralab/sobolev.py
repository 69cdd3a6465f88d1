"""Sobolev norms adapted to L, the ball-based S-functional, and norm
comparison probes (embedding, Riesz transforms, higher order, chain rule).

Spectral norms use the convention that fractional powers of L annihilate
the kernel, so the homogeneous norm is blind to kernel mass while the
inhomogeneous one keeps it through (1 + L)^(s/2).
"""

import numpy as np

from .scene import geometry_report


class SobolevError(ValueError):
    pass


class SobolevParams:
    """Smoothness s, integrability p, and the inner exponent rho used by
    the S-functional (rho must stay below min(2, p))."""

    def __init__(self, s, p=2.0, rho=1.0):
        if p < 1:
            raise SobolevError("p must be >= 1")
        if not 0 < rho <= min(2.0, p):
            raise SobolevError("rho must lie in (0, min(2, p)]")
        self.s = float(s)
        self.p = float(p)
        self.rho = float(rho)


class NormReport:
    def __init__(self, lp, homog, inhomog, sfunc=None):
        self.lp = lp
        self.homog = homog
        self.inhomog = inhomog
        self.sfunc = sfunc

    def as_dict(self):
        return {"lp": self.lp, "homog": self.homog, "inhomog": self.inhomog,
                "sfunc": self.sfunc}


def lp_norm(scene, f, p):
    """mu-weighted L^p norm; p = inf gives the max norm."""
    f = np.asarray(f, dtype=float)
    if np.isinf(p):
        return float(np.abs(f).max())
    if p < 1:
        raise SobolevError("p must be >= 1")
    return float((scene.mu @ np.abs(f) ** p) ** (1.0 / p))


def canonical_dim(scene):
    """Dimension entering exponent arithmetic: 1, 2, 4 for the shipped
    kinds (homogeneous dimension for the twisted lattice), fitted d_hom
    for graphs."""
    table = {"circle": 1.0, "torus2": 2.0, "heisenberg": 4.0}
    if scene.kind in table:
        return table[scene.kind]
    if "d_hom_fitted" not in scene.meta:
        scene.meta["d_hom_fitted"] = geometry_report(scene).d_hom
    return float(scene.meta["d_hom_fitted"])


def _spectral_apply(spec, weights, f):
    return spec.E @ (weights * (spec.EtM @ f))


def sobolev_norm(spec, f, params, with_sfunc=False):
    """NormReport for f: plain L^p, homogeneous ||L^(s/2) f||_p,
    inhomogeneous ||(1+L)^(s/2) f||_p, and optionally the L^p norm of the
    ball S-functional (0 < s < 1 only)."""
    scene = spec.scene
    f = np.asarray(f, dtype=float)
    s, p = params.s, params.p
    lp = lp_norm(scene, f, p)
    wh = np.zeros_like(spec.lam)
    mpos = spec.lam > 0
    wh[mpos] = spec.lam[mpos] ** (s / 2.0) if s != 0 else 1.0
    homog = lp_norm(scene, _spectral_apply(spec, wh, f), p)
    inhomog = lp_norm(scene, _spectral_apply(spec, (1.0 + spec.lam) ** (s / 2.0), f), p)
    sf = None
    if with_sfunc:
        sf = lp_norm(scene, s_functional(scene, f, params), p)
    return NormReport(lp, homog, inhomog, sf)


def s_functional(scene, f, params, r_top=1.0):
    """Pointwise ball-oscillation square function.

    S(x)^2 = sum over dyadic radii r = r_top, r_top/2, ... of
    ln2 * [ r^(-s) ( avg_(B(x,r)) |f(y) - f(x)|^rho dmu(y) )^(1/rho) ]^2,
    stopping once balls degenerate to {x} (those radii contribute 0).
    Requires 0 < s < 1.
    """
    s, rho = params.s, params.rho
    if not (0 < s < 1):
        raise SobolevError("S-functional needs s in (0, 1)")
    f = np.asarray(f, dtype=float)
    d = scene.metric
    mu = scene.mu
    acc = np.zeros(scene.n)
    r = float(r_top)
    while r > scene.h / 2:
        W = (d < r) * mu[None, :]
        mm = W.sum(1)
        osc = (W * np.abs(f[None, :] - f[:, None]) ** rho).sum(1) / mm
        acc += (r ** (-s) * osc ** (1.0 / rho)) ** 2 * np.log(2.0)
        r /= 2.0
    return np.sqrt(acc)


# -- probe families -----------------------------------------------------------


def probe_family(spec, seed=20260821, n_eig=20, n_rand=20, n_lac=10):
    """Deterministic probe functions: low nonkernel eigenvectors, seeded
    gaussians (kernel-removed, L2-normalized), and lacunary sums
    sum_k 2^(-k s) e(4^k) at several roughness levels."""
    out = []
    kd = spec.kernel_dim
    for i in range(min(n_eig, spec.n - kd)):
        out.append(spec.E[:, kd + i].copy())
    rng = np.random.default_rng(seed)
    scene = spec.scene
    for _ in range(n_rand):
        f = spec.remove_kernel(rng.standard_normal(spec.n))
        nn = scene.norm2(f)
        out.append(f / nn if nn > 0 else f)
    lam_max = spec.lam_max()
    K = 1
    while 4.0 ** (K + 1) <= lam_max:
        K += 1
    svals = [0.3, 0.5, 0.7, 0.9, 1.1]
    depths = [K, max(K - 1, 1)]
    count = 0
    for depth in depths:
        for sv in svals:
            if count >= n_lac:
                break
            g = np.zeros(spec.n)
            for k in range(1, depth + 1):
                idx = int(np.argmin(np.abs(spec.lam - 4.0 ** k)))
                g += 2.0 ** (-k * sv) * spec.E[:, idx]
            out.append(g)
            count += 1
    return out


def seeded_functions(spec, count, seed):
    """Seeded kernel-free gaussian fields, unit L2 norm."""
    rng = np.random.default_rng(seed)
    scene = spec.scene
    out = []
    for _ in range(count):
        f = spec.remove_kernel(rng.standard_normal(spec.n))
        out.append(f / scene.norm2(f))
    return out


# -- comparison probes --------------------------------------------------------


def embedding_probe(spec, s, p, t, q, family=None, seed=20260821):
    """Max ratio ||f||_(t,q) / ||f||_(s,p) over a family, inhomogeneous
    norms, after checking the index inequality
    1/q - t/d > 1/p - s/d (d = canonical dimension)."""
    scene = spec.scene
    d = canonical_dim(scene)
    lhs = (0.0 if np.isinf(q) else 1.0 / q) - t / d
    rhs = (0.0 if np.isinf(p) else 1.0 / p) - s / d
    if not lhs > rhs:
        raise SobolevError(
            "embedding precondition violated: need 1/q - t/d > 1/p - s/d, "
            "got %.4f <= %.4f (s=%g p=%g t=%g q=%g d=%g)"
            % (lhs, rhs, s, p, t, q, d))
    if family is None:
        family = probe_family(spec, seed=seed)
    src = SobolevParams(s=s, p=p)
    dst = SobolevParams(s=t, p=q) if not np.isinf(q) else None
    worst = 0.0
    for f in family:
        a = sobolev_norm(spec, f, src).inhomog
        if np.isinf(q):
            wt = (1.0 + spec.lam) ** (t / 2.0)
            b = lp_norm(scene, _spectral_apply(spec, wt, f), np.inf)
        else:
            b = sobolev_norm(spec, f, dst).inhomog
        if a > 0:
            worst = max(worst, b / a)
    return {"s": s, "p": p, "t": t, "q": q, "d": d, "max_ratio": worst,
            "family_size": len(family)}


def riesz_probe(spec, index, p=2.0, family=None, seed=20260821):
    """Norm of X_I (1 + L)^(-|I|/2).

    p = 2: exact operator norm through an SVD in the mu-weighted geometry.
    Other p: max ratio over a probe family, recorded.
    """
    scene = spec.scene
    if np.isscalar(index):
        index = (index,)
    index = tuple(int(i) for i in index)
    for i in index:
        if not 0 <= i < len(scene.fields):
            raise SobolevError("field index %d out of range" % i)
    k = len(index)
    wts = (1.0 + spec.lam) ** (-k / 2.0)

    def apply_T(f):
        g = _spectral_apply(spec, wts, f)
        for i in reversed(index):
            g = scene.fields[i] @ g
        return g

    if p == 2.0:
        # C = M^(1/2) X_I E diag(wts) E^T M M^(-1/2); operator norm = sigma_max
        A = spec.E * wts[None, :]
        for i in reversed(index):
            A = scene.fields[i] @ A
        rt = np.sqrt(scene.mu)
        C = (rt[:, None] * (A @ spec.EtM)) / rt[None, :]
        val = float(np.linalg.svd(C, compute_uv=False)[0])
        return {"index": index, "p": p, "norm": val, "exact": True}
    if family is None:
        family = probe_family(spec, seed=seed)
    worst = 0.0
    for f in family:
        a = lp_norm(scene, f, p)
        if a > 0:
            worst = max(worst, lp_norm(scene, apply_T(f), p) / a)
    return {"index": index, "p": p, "norm": worst, "exact": False,
            "family_size": len(family)}


def higher_order_norm_probe(spec, k, p=2.0, family=None, seed=20260821):
    """Two-sided comparison of the layered norm sum_(|I| <= k) ||X_I f||_p
    against the spectral norm ||(1 + L)^(k/2) f||_p over a family."""
    scene = spec.scene
    if family is None:
        family = probe_family(spec, seed=seed)
    nf = len(scene.fields)
    indices = [()]
    level = [()]
    for _ in range(k):
        level = [I + (i,) for I in level for i in range(nf)]
        indices.extend(level)
    ratios = []
    for f in family:
        tot = 0.0
        for I in indices:
            g = np.asarray(f, dtype=float)
            for i in reversed(I):
                g = scene.fields[i] @ g
            tot += lp_norm(scene, g, p)
        spn = lp_norm(scene, _spectral_apply(
            spec, (1.0 + spec.lam) ** (k / 2.0), f), p)
        if spn > 0:
            ratios.append(tot / spn)
    ratios = np.array(ratios)
    return {"k": k, "p": p, "min_ratio": float(ratios.min()),
            "max_ratio": float(ratios.max()), "family_size": len(family)}


def chain_rule_probe(spec, F, s, p, family=None, seed=20260821):
    """Max ratio ||F(f)||_(s,p) / ||f||_(s,p) for a scalar F with F(0) = 0,
    over a probe family. Recorded; stability across refinement is the
    meaningful check."""
    if abs(F(0.0)) > 1e-14:
        raise SobolevError("chain rule probe needs F(0) = 0")
    if family is None:
        family = probe_family(spec, seed=seed)
    par = SobolevParams(s=s, p=p)
    worst = 0.0
    for f in family:
        a = sobolev_norm(spec, f, par).inhomog
        if a > 0:
            b = sobolev_norm(spec, F(np.asarray(f, dtype=float)), par).inhomog
            worst = max(worst, b / a)
    return {"s": s, "p": p, "max_ratio": worst, "family_size": len(family)}
