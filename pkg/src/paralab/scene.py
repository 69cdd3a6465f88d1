"""Discrete scenes: measure, vector fields, metric, and geometry diagnostics.

A scene is a finite point set with a positive measure mu, a grid scale h,
and a list of mu-skew-adjoint first-order difference operators (the fields).
The positive operator L = -sum_k X_k^2 built from the fields is what every
downstream module diagonalizes.

Shipped kinds: periodic circle, flat 2-torus, a Heisenberg-type lattice with
twisted horizontal fields, and user-supplied weighted graphs.
"""

import hashlib
import io

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

SCENE_CAP = 2048
KERNEL_RTOL = 1e-10


class SceneError(ValueError):
    pass


class Scene:
    """Point cloud with measure, scale, and skew-adjoint fields.

    Attributes
    ----------
    kind : str
        One of 'circle', 'torus2', 'heisenberg', 'graph'.
    n : int
        Number of points.
    h : float
        Grid scale. Distances are integer hop counts times h.
    mu : ndarray, shape (n,)
        Positive point masses.
    fields : list of ndarray, shape (n, n)
        Difference operators X_k with M X_k skew-symmetric (M = diag(mu)).
    coords : dict
        Coordinate arrays used by manufactured problems (scene dependent).
    """

    def __init__(self, kind, h, mu, fields, coords=None, meta=None):
        self.kind = kind
        self.h = float(h)
        self.mu = np.asarray(mu, dtype=float)
        self.n = self.mu.size
        self.fields = [np.asarray(X, dtype=float) for X in fields]
        self.coords = coords or {}
        self.meta = meta or {}
        self._metric = None
        if self.n > SCENE_CAP:
            raise SceneError("scene size %d exceeds cap %d" % (self.n, SCENE_CAP))
        if self.n == 0:
            raise SceneError("empty scene")
        if not np.all(np.isfinite(self.mu)) or np.any(self.mu <= 0):
            raise SceneError("mu must be strictly positive and finite")
        if self.h <= 0:
            raise SceneError("h must be positive")
        for X in self.fields:
            if X.shape != (self.n, self.n):
                raise SceneError("field shape %s does not match n=%d" % (X.shape, self.n))

    # -- operators ---------------------------------------------------------

    def laplacian(self):
        """Dense positive operator L = -sum_k X_k @ X_k."""
        L = np.zeros((self.n, self.n))
        for X in self.fields:
            L -= X @ X
        return L

    def gradient(self, f):
        """Stack of X_k f, shape (len(fields), n)."""
        return np.array([X @ f for X in self.fields])

    def grad_norm(self, f):
        """Pointwise |Xf| = sqrt(sum_k (X_k f)^2)."""
        return np.sqrt(sum((X @ f) ** 2 for X in self.fields))

    def inner(self, f, g):
        """mu-weighted inner product."""
        return float(np.dot(self.mu * f, g))

    def norm2(self, f):
        return float(np.sqrt(np.dot(self.mu, np.abs(f) ** 2)))

    def total_mass(self):
        return float(self.mu.sum())

    # -- validation --------------------------------------------------------

    def skew_residuals(self):
        """Relative skew defect of each field: ||M X + X^T M|| / ||M X||.

        Max-entry norms. Zero by construction for the shipped kinds.
        """
        out = []
        for X in self.fields:
            B = self.mu[:, None] * X
            num = np.abs(B + B.T).max()
            den = max(np.abs(B).max(), 1e-300)
            out.append(num / den)
        return out

    def validate(self, rtol=1e-12):
        """Raise SceneError naming the worst offending entry if any field
        fails mu-skew-adjointness."""
        for k, X in enumerate(self.fields):
            B = self.mu[:, None] * X
            D = B + B.T
            num = np.abs(D).max()
            den = max(np.abs(B).max(), 1e-300)
            if num > rtol * den:
                i, j = np.unravel_index(np.argmax(np.abs(D)), D.shape)
                raise SceneError(
                    "field %d is not mu-skew-adjoint: worst defect %.3e at (%d, %d)"
                    % (k, num / den, i, j)
                )
        return True

    # -- metric ------------------------------------------------------------

    @property
    def metric(self):
        """Shortest-path distance matrix, hop counts times h.

        Two points are adjacent when any field couples them. Hop counts are
        exact integers, so ball membership tests carry no rounding ties.
        Disconnected scenes get inf between components.
        """
        if self._metric is None:
            A = np.zeros((self.n, self.n), dtype=bool)
            for X in self.fields:
                A |= X != 0.0
            A |= A.T
            np.fill_diagonal(A, False)
            hops = shortest_path(csr_matrix(A.astype(np.int8)), method="D",
                                 unweighted=True, directed=False)
            self._metric = hops * self.h
        return self._metric

    def ball(self, center, r):
        """Index array of the open ball {y : d(center, y) < r}."""
        return np.flatnonzero(self.metric[center] < r)

    def diameter(self):
        d = self.metric
        finite = d[np.isfinite(d)]
        return float(finite.max())

    # -- hashing / serialization -------------------------------------------

    def content_hash(self):
        buf = io.BytesIO()
        buf.write(self.kind.encode())
        buf.write(np.float64(self.h).tobytes())
        buf.write(self.mu.tobytes())
        for X in self.fields:
            i, j = np.nonzero(X)
            buf.write(i.astype(np.int64).tobytes())
            buf.write(j.astype(np.int64).tobytes())
            buf.write(X[i, j].tobytes())
        return hashlib.sha256(buf.getvalue()).hexdigest()


# -- constructors ------------------------------------------------------------


def _circulant_centered_diff(n, h):
    X = np.zeros((n, n))
    idx = np.arange(n)
    X[idx, (idx + 1) % n] = 1.0 / (2 * h)
    X[idx, (idx - 1) % n] = -1.0 / (2 * h)
    return X


def _onesided_reflecting(n, h):
    # interior centered, boundary one-sided; antisymmetrized by the caller
    D = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    D[idx, idx + 1] = 1.0 / (2 * h)
    D[idx, idx - 1] = -1.0 / (2 * h)
    D[0, 0] = -1.0 / h
    D[0, 1] = 1.0 / h
    D[n - 1, n - 2] = -1.0 / h
    D[n - 1, n - 1] = 1.0 / h
    return D


def build_scene(kind, n=None, nx=None, ny=None, nz=None, h=None, path=None,
                mu=None, fields=None):
    """Construct a shipped scene or wrap user data.

    Parameters
    ----------
    kind : str
        'circle' (needs n), 'torus2' (nx, ny), 'heisenberg' (nx, ny, nz),
        'graph' (path to a scene file, or explicit mu + fields + h).
    h : float, optional
        Scale override. Defaults: 2*pi/n for grids, 1.0 for graphs.

    Returns
    -------
    Scene
    """
    if kind == "circle":
        if n is None or n < 3:
            raise SceneError("circle needs n >= 3")
        h = 2 * np.pi / n if h is None else float(h)
        X = _circulant_centered_diff(n, h)
        theta = h * np.arange(n)
        return Scene("circle", h, np.full(n, h), [X], coords={"theta": theta})

    if kind == "torus2":
        if nx is None or ny is None or nx < 3 or ny < 3:
            raise SceneError("torus2 needs nx, ny >= 3")
        h = 2 * np.pi / nx if h is None else float(h)
        Dx = _circulant_centered_diff(nx, h)
        Dy = _circulant_centered_diff(ny, h)
        Ix, Iy = np.eye(nx), np.eye(ny)
        X1 = np.kron(Dx, Iy)
        X2 = np.kron(Ix, Dy)
        xs = h * np.arange(nx)
        ys = h * np.arange(ny)
        xg = np.repeat(xs, ny)
        yg = np.tile(ys, nx)
        npts = nx * ny
        return Scene("torus2", h, np.full(npts, h * h), [X1, X2],
                     coords={"x": xg, "y": yg}, meta={"nx": nx, "ny": ny})

    if kind == "heisenberg":
        if nx is None or ny is None or nz is None or min(nx, ny, nz) < 3:
            raise SceneError("heisenberg needs nx, ny, nz >= 3")
        h = 2 * np.pi / nx if h is None else float(h)
        Dx1 = _circulant_centered_diff(nx, h)
        Dy1 = _circulant_centered_diff(ny, h)
        Dz1 = _onesided_reflecting(nz, h)
        Ix, Iy, Iz = np.eye(nx), np.eye(ny), np.eye(nz)
        Dx = np.kron(np.kron(Dx1, Iy), Iz)
        Dy = np.kron(np.kron(Ix, Dy1), Iz)
        Dz = np.kron(np.kron(Ix, Iy), Dz1)
        # centered coordinate grids so the twist is symmetric about the origin
        xs = (np.arange(nx) - (nx - 1) / 2) * h
        ys = (np.arange(ny) - (ny - 1) / 2) * h
        zs = (np.arange(nz) - (nz - 1) / 2) * h
        npts = nx * ny * nz
        xg = np.repeat(xs, ny * nz)
        yg = np.tile(np.repeat(ys, nz), nx)
        zg = np.tile(zs, nx * ny)
        X = Dx - 0.5 * yg[:, None] * Dz
        Y = Dy + 0.5 * xg[:, None] * Dz
        X = (X - X.T) / 2
        Y = (Y - Y.T) / 2
        return Scene("heisenberg", h, np.full(npts, h ** 3), [X, Y],
                     coords={"x": xg, "y": yg, "z": zg},
                     meta={"nx": nx, "ny": ny, "nz": nz})

    if kind == "graph":
        if path is not None:
            return read_scene(path)
        if mu is None or fields is None:
            raise SceneError("graph needs a path or explicit mu and fields")
        h = 1.0 if h is None else float(h)
        sc = Scene("graph", h, mu, fields)
        sc.validate(rtol=1e-10)
        return sc

    raise SceneError("unknown scene kind %r" % (kind,))


# -- scene file format --------------------------------------------------------
#
#   # comments and blank lines ignored
#   kind graph
#   h 1.0
#   points 12
#   mu
#   <n lines, one mass each>
#   field
#   i j value          (one coupling per line)
#   endfield           (repeat field blocks per operator)


def write_scene(scene, path):
    with open(path, "w") as fh:
        fh.write("# paralab scene v1\n")
        fh.write("kind %s\n" % scene.kind)
        fh.write("h %.17g\n" % scene.h)
        fh.write("points %d\n" % scene.n)
        fh.write("mu\n")
        for m in scene.mu:
            fh.write("%.17g\n" % m)
        for X in scene.fields:
            fh.write("field\n")
            ii, jj = np.nonzero(X)
            for i, j in zip(ii, jj):
                fh.write("%d %d %.17g\n" % (i, j, X[i, j]))
            fh.write("endfield\n")


def read_scene(path):
    kind, h, n = "graph", None, None
    mu = None
    fields = []
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    pos = 0
    while pos < len(lines):
        ln = lines[pos]
        if ln.startswith("kind "):
            kind = ln.split(None, 1)[1]
            pos += 1
        elif ln.startswith("h "):
            h = float(ln.split()[1])
            pos += 1
        elif ln.startswith("points "):
            n = int(ln.split()[1])
            pos += 1
        elif ln == "mu":
            if n is None:
                raise SceneError("scene file: 'points' must precede 'mu'")
            mu = np.array([float(lines[pos + 1 + i]) for i in range(n)])
            pos += 1 + n
        elif ln == "field":
            if n is None:
                raise SceneError("scene file: 'points' must precede 'field'")
            X = np.zeros((n, n))
            pos += 1
            while lines[pos] != "endfield":
                i, j, v = lines[pos].split()
                X[int(i), int(j)] = float(v)
                pos += 1
            pos += 1
            fields.append(X)
        else:
            raise SceneError("scene file: unrecognized line %r" % ln)
    if mu is None or not fields or h is None:
        raise SceneError("scene file: missing h, mu, or field blocks")
    sc = Scene(kind, h, mu, fields)
    sc.validate(rtol=1e-10)
    return sc


# -- geometry diagnostics -----------------------------------------------------


def default_radii(scene):
    """Dyadic ladder h, 2h, 4h, ... up to just past the diameter."""
    diam = scene.diameter()
    radii = []
    r = scene.h
    while r <= 2 * diam:
        radii.append(r)
        if r > diam:
            break
        r *= 2
    return np.array(radii)


def _ball_masses(scene, radii):
    # mass[x, ir] = mu(B(x, radii[ir])), open balls
    d = scene.metric
    out = np.empty((scene.n, len(radii)))
    for ir, r in enumerate(radii):
        out[:, ir] = (d < r) @ scene.mu
    return out


def _probe_functions(scene, count_eig=20, count_rand=20, seed=20260821):
    # low eigenvectors of L plus seeded gaussians, used by the Poincare scan
    L = scene.laplacian()
    rt = np.sqrt(scene.mu)
    S = (rt[:, None] * L) / rt[None, :]
    S = (S + S.T) / 2
    lam, V = np.linalg.eigh(S)
    E = V / rt[:, None]
    kd = int(np.sum(lam <= KERNEL_RTOL * max(lam.max(), 1.0)))
    probes = [E[:, kd + i] for i in range(min(count_eig, scene.n - kd))]
    rng = np.random.default_rng(seed)
    for _ in range(count_rand):
        probes.append(rng.standard_normal(scene.n))
    return probes


class GeometryReport:
    """Doubling, volume-growth, and Poincare diagnostics for a scene."""

    def __init__(self, doubling_constant, d_hom, vol_lower_c,
                 poincare_constant, radii_tested, growth_fit):
        self.doubling_constant = doubling_constant
        self.d_hom = d_hom
        self.vol_lower_c = vol_lower_c
        self.poincare_constant = poincare_constant
        self.radii_tested = radii_tested
        self.growth_fit = growth_fit

    def as_dict(self):
        return {
            "doubling_constant": self.doubling_constant,
            "d_hom": self.d_hom,
            "vol_lower_c": self.vol_lower_c,
            "poincare_constant": self.poincare_constant,
            "radii_tested": list(map(float, self.radii_tested)),
            "growth_fit": self.growth_fit,
        }


def geometry_report(scene, radii=None):
    """Measure the doubling constant, homogeneous dimension, volume lower
    bound, relative-growth fit, and an L1 Poincare constant.

    All balls are open. The doubling constant maximizes
    mu(B(x,2r))/mu(B(x,r)) over every center and every tested radius with
    2r still meaningful; d_hom = log2 of it.
    """
    if radii is None:
        radii = default_radii(scene)
    radii = np.asarray(radii, dtype=float)
    d = scene.metric
    mb_r = _ball_masses(scene, radii)
    mb_2r = _ball_masses(scene, 2 * radii)
    cd = float((mb_2r / mb_r).max())
    d_hom = float(np.log2(cd)) if cd > 0 else 0.0

    diam = scene.diameter()
    if diam >= 1.0 and np.all(np.isfinite(d)):
        vol_lower_c = float(((d < 1.0) @ scene.mu).min())
    else:
        vol_lower_c = float("nan")

    # relative growth fit: max over center pairs and radii of the exponent
    # solving mu(B(y,r))/mu(B(x,r)) = (1 + d(x,y)/r)^N
    growth = 0.0
    finite = np.isfinite(d)
    mask = finite & (d > 0)
    for ir, r in enumerate(radii):
        mb = mb_r[:, ir]
        if not mask.any():
            break
        ratio = mb[None, :] / mb[:, None]
        base = 1.0 + d / r
        expo = np.log(ratio[mask]) / np.log(base[mask])
        growth = max(growth, float(expo.max()))

    # Poincare scan: worst ratio of mean oscillation to r * mean |Xf|
    probes = _probe_functions(scene)
    grads = [scene.grad_norm(f) for f in probes]
    mu = scene.mu
    pc = 0.0
    for r in radii:
        W = (d < r) * mu[None, :]
        mm = W.sum(1)
        for f, gn in zip(probes, grads):
            favg = (W @ f) / mm
            osc = (W * np.abs(f[None, :] - favg[:, None])).sum(1) / mm
            gavg = (W @ gn) / mm
            ok = r * gavg > 0
            if ok.any():
                pc = max(pc, float((osc[ok] / (r * gavg[ok])).max()))
    return GeometryReport(cd, d_hom, vol_lower_c, pc, radii, growth)


def maximal_function(scene, f, s=1.0):
    """Uncentered maximal function of |f|^s: at y, the sup over all balls
    containing y of the ball average of |f|^s.

    Exact sup over every ball of the finite metric space, computed per
    center by sorting distances and scanning nested balls.
    """
    d = scene.metric
    mu = scene.mu
    g = np.abs(f) ** s
    out = np.zeros(scene.n)
    for c in range(scene.n):
        order = np.argsort(d[c], kind="stable")
        dist = d[c][order]
        mass = np.cumsum(mu[order])
        val = np.cumsum((mu * g)[order])
        avg = val / mass
        # points at tied distance enter a ball together, so the only
        # realizable balls end at tie-group boundaries
        grp_end = np.empty(scene.n, dtype=int)
        i = 0
        while i < scene.n:
            j = i
            while j + 1 < scene.n and dist[j + 1] == dist[i]:
                j += 1
            grp_end[i:j + 1] = j
            i = j + 1
        realizable = np.full(scene.n, -np.inf)
        ends = grp_end == np.arange(scene.n)
        realizable[ends] = avg[ends]
        # best average available to order[i]: max over balls containing it,
        # i.e. realizable prefixes ending at or after its group end
        suf = np.maximum.accumulate(realizable[::-1])[::-1]
        best = suf[grp_end]
        np.maximum.at(out, order, best)
    return out
