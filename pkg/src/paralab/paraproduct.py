"""Semigroup paraproducts, the remainder bracket, and the exact product
decomposition f g = Pi_g(f) + Pi_f(g) + Rest(f, g) on kernel-free inputs.

Everything is assembled from node batches: for each quadrature node t_j the
multiplier matrices act on eigencoefficients, pointwise products happen in
physical space, and the outer multiplier plus weighted sum runs over nodes
in one fixed ascending-t accumulation.
"""

import weakref

import numpy as np

from .speccalc import SpectralError, make_quadrature


class ParaproductError(ValueError):
    pass


class _Batches:
    # per (config, spectrum) node data, ascending t
    def __init__(self, spec, fam, quad, t_split):
        self.t = quad.t
        self.w = quad.w
        self.lo = quad.t <= t_split
        self.hi = ~self.lo
        tl = quad.t[:, None] * spec.lam[None, :]
        self.tl = tl
        self.PT = fam.phi_tilde(tl)
        self.PS = fam.psi(tl)
        self.PST = fam.psi_tilde(tl)


class ParaproductConfig:
    """Bundle of multiplier family and quadrature rule.

    Node batches are cached per spectral object, so repeated calls on the
    same scene pay the multiplier evaluation once.
    """

    def __init__(self, fam, quad, t_split=1.0):
        self.fam = fam
        self.quad = quad
        self.t_split = float(t_split)
        self._cache = weakref.WeakKeyDictionary()

    def batches(self, spec):
        b = self._cache.get(spec)
        if b is None:
            b = _Batches(spec, self.fam, self.quad, self.t_split)
            self._cache[spec] = b
        return b

    def refined(self, spec, nodes_per_decade):
        """Same family, new rule at a different resolution."""
        q = make_quadrature(spec, self.fam, nodes_per_decade,
                            self.quad.pad_decades, self.quad.t_split)
        return ParaproductConfig(self.fam, q, self.t_split)


def _coeffs(spec, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (spec.n,):
        raise ParaproductError("function shape %s does not match scene size %d"
                               % (f.shape, spec.n))
    return spec.EtM @ f


def _nodes(spec, B, c):
    # synthesize one function per node: rows are B[j] * c in the eigenbasis
    return (B * c[None, :]) @ spec.E.T


def _outer(spec, wvec, B, P):
    # sum_j wvec_j * synth(B[j] * analyze(P[j])), accumulated ascending in t
    return spec.E @ ((wvec[:, None] * B * (P @ spec.EtM.T)).sum(0))


def pi(cfg, spec, f, g, parts="sum"):
    """Paraproduct Pi_g(f).

    Pi_g(f) = -sum_j w_j { psi_tilde(t_j L)[ (t_j L) phi_tilde(t_j L) f
                            * phi_tilde(t_j L) g ]
                         + phi_tilde(t_j L)[ psi(t_j L) f
                            * phi_tilde(t_j L) g ] }

    parts: 'sum' (default), 1 or 2 for a single piece, 'both' for a tuple.
    """
    b = cfg.batches(spec)
    cf = _coeffs(spec, f)
    cg = _coeffs(spec, g)
    V = _nodes(spec, b.PT, cg)
    p1 = p2 = None
    if parts in ("sum", "both", 1):
        U1 = _nodes(spec, b.tl * b.PT, cf)
        p1 = -_outer(spec, b.w, b.PST, U1 * V)
    if parts in ("sum", "both", 2):
        U2 = _nodes(spec, b.PS, cf)
        p2 = -_outer(spec, b.w, b.PT, U2 * V)
    if parts == "sum":
        return p1 + p2
    if parts == "both":
        return p1, p2
    return p1 if parts == 1 else p2


def leibniz_defect(spec, U, V):
    """Row-wise bilinear defect D(u, v) = L(uv) - (Lu)v - u(Lv) for node
    function batches U, V of shape (nodes, n). Equals -2<Xu, Xv> in the
    continuum limit and is the exact discrete carrier of that bracket."""
    lam = spec.lam
    cUV = (U * V) @ spec.EtM.T
    LUV = (cUV * lam[None, :]) @ spec.E.T
    LU = ((U @ spec.EtM.T) * lam[None, :]) @ spec.E.T
    LV = ((V @ spec.EtM.T) * lam[None, :]) @ spec.E.T
    return LUV - LU * V - U * LV


def rest(cfg, spec, f, g):
    """Remainder Rest(f, g) = -sum_j w_j t_j psi_tilde(t_j L)
    [ D(phi_tilde(t_j L) f, phi_tilde(t_j L) g) ], symmetric in f, g."""
    b = cfg.batches(spec)
    cf = _coeffs(spec, f)
    cg = _coeffs(spec, g)
    U = _nodes(spec, b.PT, cf)
    V = _nodes(spec, b.PT, cg)
    D = leibniz_defect(spec, U, V)
    return -_outer(spec, b.w * b.t, b.PST, D)


class DecompositionResult:
    """Three-term product decomposition with its residual.

    Attributes
    ----------
    pi_gf, pi_fg, rest : ndarray
    kernel_correction : ndarray
        Kernel projection of (P0 f)(P0 g) for the original inputs; the part
        of the product the projected identity never sees.
    residual : float
        L2 norm of f0 g0 - pi_gf - pi_fg - rest on the projected inputs.
    rel_residual : float
        residual / (||f0||_2 ||g0||_2), 0 convention when either norm is 0.
    projected : bool
        True when the inputs carried kernel mass that was removed.
    """

    def __init__(self, pi_gf, pi_fg, rest_fg, kernel_correction, residual,
                 rel_residual, projected):
        self.pi_gf = pi_gf
        self.pi_fg = pi_fg
        self.rest = rest_fg
        self.kernel_correction = kernel_correction
        self.residual = residual
        self.rel_residual = rel_residual
        self.projected = projected

    def total(self):
        return self.pi_gf + self.pi_fg + self.rest


def decompose_product(cfg, spec, f, g):
    """Split the pointwise product of two functions.

    Inputs are projected off the kernel first (flagged when that changes
    them). On kernel-free inputs the three terms reproduce the full
    product, kernel component of f0 g0 included; the quadrature's
    reproduction error is the only error source.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    scene = spec.scene
    f0 = spec.remove_kernel(f)
    g0 = spec.remove_kernel(g)
    nf = scene.norm2(f)
    ng = scene.norm2(g)
    projected = (scene.norm2(f - f0) > 1e-12 * max(nf, 1e-300)
                 or scene.norm2(g - g0) > 1e-12 * max(ng, 1e-300))
    kc = spec.project_kernel(spec.project_kernel(f) * spec.project_kernel(g))
    a = pi(cfg, spec, f0, g0)
    bb = pi(cfg, spec, g0, f0)
    r = rest(cfg, spec, f0, g0)
    res = scene.norm2(f0 * g0 - a - bb - r)
    den = scene.norm2(f0) * scene.norm2(g0)
    rel = res / den if den > 0 else 0.0
    return DecompositionResult(a, bb, r, kc, res, rel, projected)


def residual_doubling_study(cfg, spec, f, g, npd_list=(4, 8, 16)):
    """Decomposition residual at each quadrature resolution."""
    out = []
    for npd in npd_list:
        c = cfg.refined(spec, npd)
        out.append(decompose_product(c, spec, f, g).residual)
    return out


# -- twisted variants ---------------------------------------------------------


def _zpow(tl, a):
    # (t lam)^a with kernel columns (exact zeros) mapped to 0 when a != 0
    if a == 0.0:
        return np.ones_like(tl)
    out = np.zeros_like(tl)
    m = tl > 0
    out[m] = tl[m] ** a
    return out


def pi_twisted(cfg, spec, f, g, alpha):
    """Fractionally twisted paraproduct: the rough-slot multipliers trade
    a factor (t L)^alpha with the outer one.

    part 1: outer (tL)^alpha psi_tilde, inner (tL)^(1-alpha) phi_tilde on f
    part 2: outer (tL)^alpha phi_tilde, inner (tL)^(-alpha) psi on f

    Coincides with pi at alpha = 0. Requires 0 <= alpha < order - 2 so the
    inner multipliers keep integrable decay at the origin.
    """
    N = cfg.fam.order
    if alpha < 0 or alpha >= N - 2:
        raise ParaproductError("alpha must lie in [0, %d) for order %d"
                               % (N - 2, N))
    b = cfg.batches(spec)
    cf = _coeffs(spec, f)
    cg = _coeffs(spec, g)
    za = _zpow(b.tl, alpha)
    V = _nodes(spec, b.PT, cg)
    U1 = _nodes(spec, _zpow(b.tl, 1.0 - alpha) * b.PT, cf)
    p1 = -_outer(spec, b.w, za * b.PST, U1 * V)
    U2 = _nodes(spec, _zpow(b.tl, -alpha) * b.PS, cf)
    p2 = -_outer(spec, b.w, za * b.PT, U2 * V)
    return p1 + p2


def pi2_shifted(cfg, spec, f, g, beta):
    """Second-piece paraproduct with the power (tL)^beta moved outside:
    -sum_j w_j (t_j L)^beta phi_tilde(t_j L)[ (t_j L)^(-beta) psi(t_j L) f
    * phi_tilde(t_j L) g ]."""
    b = cfg.batches(spec)
    cf = _coeffs(spec, f)
    cg = _coeffs(spec, g)
    V = _nodes(spec, b.PT, cg)
    U = _nodes(spec, _zpow(b.tl, -beta) * b.PS, cf)
    return -_outer(spec, b.w, _zpow(b.tl, beta) * b.PT, U * V)


def structural_identity_residual(cfg, spec, f, g, beta):
    """Relative residual of L^beta Pi2_g(f) = Pi2-shifted_g(L^beta f).

    The identity is node-exact: both sides expand into identical eigenvalue
    factors per node, so the residual measures pure rounding.
    """
    scene = spec.scene
    p2 = pi(cfg, spec, f, g, parts=2)
    lhs = spec.E @ (cfg.fam.power(beta)(spec.lam) * (spec.EtM @ p2))
    lbf = spec.E @ (cfg.fam.power(beta)(spec.lam) * (spec.EtM @ f))
    rhs = pi2_shifted(cfg, spec, lbf, g, beta)
    den = scene.norm2(lbf) * float(np.abs(g).max())
    return scene.norm2(lhs - rhs) / den if den > 0 else 0.0


# -- boundedness probes -------------------------------------------------------


def lebesgue_bound_probe(cfg, spec, p, q, family=None, seed=20260821):
    """Worst ratio ||Pi_g(f)||_r / (||f||_p ||g||_q) with 1/r = 1/p + 1/q
    over a probe family. Reported, not asserted; q = inf means r = p.
    """
    from .sobolev import lp_norm, probe_family
    scene = spec.scene
    if family is None:
        family = probe_family(spec, seed=seed)
    if np.isinf(q):
        r = p
    else:
        r = 1.0 / (1.0 / p + 1.0 / q)
    worst = 0.0
    worst_pair = None
    for i, f in enumerate(family):
        for j, g in enumerate(family):
            nf = lp_norm(scene, f, p)
            ng = lp_norm(scene, g, q)
            if nf * ng == 0:
                continue
            val = lp_norm(scene, pi(cfg, spec, f, g), r) / (nf * ng)
            if val > worst:
                worst, worst_pair = val, (i, j)
    return {"p": p, "q": q, "r": r, "max_ratio": worst, "argmax": worst_pair,
            "family_size": len(family)}


def sobolev_bound_probe(cfg, spec, s, p, q, family=None, seed=20260821):
    """Worst ratio ||Pi_g(f)||_(s,p) / (||f||_(s,p) ||g||_q) over a probe
    family, inhomogeneous norms. Reported, not asserted."""
    from .sobolev import SobolevParams, lp_norm, probe_family, sobolev_norm
    scene = spec.scene
    if family is None:
        family = probe_family(spec, seed=seed)
    par = SobolevParams(s=s, p=p)
    worst = 0.0
    worst_pair = None
    for i, f in enumerate(family):
        for j, g in enumerate(family):
            nf = sobolev_norm(spec, f, par).inhomog
            ng = lp_norm(scene, g, q)
            if nf * ng == 0:
                continue
            val = sobolev_norm(spec, pi(cfg, spec, f, g), par).inhomog / (nf * ng)
            if val > worst:
                worst, worst_pair = val, (i, j)
    return {"s": s, "p": p, "q": q, "max_ratio": worst, "argmax": worst_pair,
            "family_size": len(family)}
