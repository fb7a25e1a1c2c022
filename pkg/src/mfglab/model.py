"""Problem data: grids, Lagrangians, couplings, and assumption checks.

The state space is a box [lo, hi]^n (n = 1 or 2) discretized by a uniform
node grid; velocities live on their own symmetric uniform grid.  All
structural hypotheses (uniform convexity in v, confinement gap of the
coupling, common spatial minimizer) are checked numerically on sample
points rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GapViolated,
    MaximizerOnBoundary,
    MinOnBoundary,
    UnsupportedDimension,
)

ARGMIN_TOL = 1e-10  # two node values within this are treated as tied minima
HESSIAN_RTOL = 1e-3  # relative tolerance on finite-difference matrix bounds


# ---------------------------------------------------------------------------
# grids


class GridSpec:
    """Uniform box discretization plus the velocity grid and time step.

    lo, hi, nodes may be scalars (1-D) or length-2 sequences.  The velocity
    grid is linspace(-v_max, v_max, v_nodes) per axis; v_nodes should be odd
    so that v = 0 is representable.
    """

    def __init__(self, lo, hi, nodes, dt, v_max, v_nodes):
        lo_t = tuple(float(a) for a in np.atleast_1d(lo))
        hi_t = tuple(float(a) for a in np.atleast_1d(hi))
        nodes_t = tuple(int(a) for a in np.atleast_1d(nodes))
        if not (len(lo_t) == len(hi_t) == len(nodes_t)):
            raise ValueError("lo, hi, nodes must agree in length")
        if len(lo_t) not in (1, 2):
            raise UnsupportedDimension(f"dim {len(lo_t)} not supported")
        for a, b, n in zip(lo_t, hi_t, nodes_t):
            if not (b > a and n >= 2):
                raise ValueError("need hi > lo and at least two nodes per axis")
        if dt <= 0 or v_max <= 0 or v_nodes < 3:
            raise ValueError("need dt > 0, v_max > 0, v_nodes >= 3")
        self.dim = len(lo_t)
        self.lo = lo_t
        self.hi = hi_t
        self.nodes = nodes_t
        self.dt = float(dt)
        self.v_max = float(v_max)
        self.v_nodes = int(v_nodes)
        self.axes = tuple(
            np.linspace(a, b, n) for a, b, n in zip(lo_t, hi_t, nodes_t)
        )
        self.dx = tuple((b - a) / (n - 1) for a, b, n in zip(lo_t, hi_t, nodes_t))
        self.n_points = int(np.prod(nodes_t))
        if self.dim == 1:
            self.points = self.axes[0]
        else:
            xx, yy = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
            self.points = np.column_stack([xx.ravel(), yy.ravel()])
        self.v_axis = np.linspace(-self.v_max, self.v_max, self.v_nodes)
        if self.dim == 1:
            self.velocities = self.v_axis
        else:
            vv, ww = np.meshgrid(self.v_axis, self.v_axis, indexing="ij")
            self.velocities = np.column_stack([vv.ravel(), ww.ravel()])

    @property
    def dx_max(self):
        return max(self.dx)

    def radii(self):
        """Euclidean norm of every node (distance to the origin)."""
        if self.dim == 1:
            return np.abs(self.points)
        return np.sqrt((self.points**2).sum(axis=1))

    def ball_mask(self, R):
        return self.radii() <= R + 1e-12

    def contains_ball(self, R):
        """Whether the closed ball B_R around the origin fits in the box."""
        return all(a <= -R and b >= R for a, b in zip(self.lo, self.hi))

    def contains_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.dim == 1:
            return (pts >= self.lo[0] - 1e-12) & (pts <= self.hi[0] + 1e-12)
        ok = np.ones(pts.shape[0], dtype=bool)
        for d in range(2):
            ok &= (pts[:, d] >= self.lo[d] - 1e-12) & (pts[:, d] <= self.hi[d] + 1e-12)
        return ok

    def nearest_node(self, x):
        """Flat index of the node closest to x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = []
        for d in range(self.dim):
            i = int(round((x[d] - self.lo[d]) / self.dx[d]))
            idx.append(min(max(i, 0), self.nodes[d] - 1))
        if self.dim == 1:
            return idx[0]
        return idx[0] * self.nodes[1] + idx[1]

    def time_steps(self, T):
        """Number of uniform steps covering [0, T]; T must be a near-multiple of dt."""
        K = int(round(T / self.dt))
        if K < 1 or abs(K * self.dt - T) > 1e-9 * max(1.0, T):
            raise ValueError(f"T={T} is not a multiple of dt={self.dt}")
        return K

    def with_resolution(self, dx=None, dt=None):
        """Same box and velocity extent at a different resolution."""
        nodes = self.nodes
        if dx is not None:
            nodes = tuple(int(round((b - a) / dx)) + 1 for a, b in zip(self.lo, self.hi))
            for a, b, n in zip(self.lo, self.hi, nodes):
                if abs((b - a) / (n - 1) - dx) > 1e-12:
                    raise ValueError(f"dx={dx} does not tile the box [{a},{b}]")
        new_dt = self.dt if dt is None else dt
        if dx is not None and dt is None:
            new_dt = dx
        v_nodes = self.v_nodes
        if dx is not None:
            # keep dv comparable to the original ratio dv/dx
            dv_old = 2 * self.v_max / (self.v_nodes - 1)
            ratio = dv_old / self.dx[0]
            dv_new = ratio * dx
            v_nodes = 2 * int(round(self.v_max / dv_new / 1.0)) + 1
        return GridSpec(self.lo, self.hi, nodes, new_dt, self.v_max, v_nodes)

    def describe(self):
        return {
            "dim": self.dim,
            "lo": list(self.lo),
            "hi": list(self.hi),
            "nodes": list(self.nodes),
            "dx": list(self.dx),
            "dt": self.dt,
            "v_max": self.v_max,
            "v_nodes": self.v_nodes,
        }


def interp_grid(grid, values, pts):
    """Clamped multilinear interpolation of node values at points."""
    if grid.dim == 1:
        return np.interp(pts, grid.axes[0], values)
    pts = np.asarray(pts, dtype=float)
    n1, n2 = grid.nodes
    vals = values.reshape(n1, n2)
    out_shape = pts.shape[:-1]
    p = pts.reshape(-1, 2)
    fx = np.clip((p[:, 0] - grid.lo[0]) / grid.dx[0], 0.0, n1 - 1.0)
    fy = np.clip((p[:, 1] - grid.lo[1]) / grid.dx[1], 0.0, n2 - 1.0)
    i0 = np.minimum(fx.astype(int), n1 - 2)
    j0 = np.minimum(fy.astype(int), n2 - 2)
    ax = fx - i0
    ay = fy - j0
    out = (
        vals[i0, j0] * (1 - ax) * (1 - ay)
        + vals[i0 + 1, j0] * ax * (1 - ay)
        + vals[i0, j0 + 1] * (1 - ax) * ay
        + vals[i0 + 1, j0 + 1] * ax * ay
    )
    return out.reshape(out_shape)


# ---------------------------------------------------------------------------
# Lagrangians


@dataclass
class LagrangianModel:
    """Running cost L(x, v) with declared Tonelli constants.

    eval must broadcast over numpy arrays of positions and velocities.
    C1 bounds the velocity Hessian from both sides (I/C1 <= D^2_vv L <= C1 I),
    C2 bounds the mixed Hessian, C3 bounds data at v = 0.  alpha and beta are
    the growth constants derived from them.
    """

    eval: callable
    C1: float
    C2: float
    C3: float
    reversible: bool = True
    name: str = "lagrangian"

    @property
    def alpha(self):
        return self.C3 + self.C1

    @property
    def beta(self):
        return 0.5 * self.C1 + self.C3


def quadratic_kinetic(potential=None, C1=1.0, C2=1.0, C3=None, name=None):
    """L(x, v) = |v|^2/2 + phi(x), the reference reversible family."""

    if potential is None:
        def ev(x, v):
            # the x term only forces broadcasting against position arrays
            return 0.5 * _sqnorm(v) + 0.0 * _first_coord(x)
        c3 = 1.0 if C3 is None else C3
        return LagrangianModel(ev, C1, C2, c3, True, name or "kinetic")

    def ev(x, v):
        return 0.5 * _sqnorm(v) + potential(x)

    if C3 is None:
        raise ValueError("declare C3 when a potential is present")
    return LagrangianModel(ev, C1, C2, C3, True, name or "kinetic+potential")


def _sqnorm(v):
    v = np.asarray(v, dtype=float)
    if v.ndim >= 1 and v.shape[-1] == 2:
        return (v**2).sum(axis=-1)
    return v**2


def _first_coord(x):
    x = np.asarray(x, dtype=float)
    if x.ndim >= 1 and x.shape[-1] == 2:
        return x[..., 0]
    return x


# ---------------------------------------------------------------------------
# measures live in measure.py; couplings only need integrate-against-f


@dataclass
class Coupling:
    """Mean-field cost F(x, m) with the declared confinement data.

    K0 is a closed sub-box strictly inside the state box; delta0 the declared
    confinement gap; lip2 the declared Lipschitz constant of m -> F(., m) in
    d_1.  separable, when set, is (f callable, G callable, Gprime callable)
    and eval is f(x) * G(integral of f dm).
    """

    eval: callable
    K0_lo: tuple
    K0_hi: tuple
    delta0: float
    lip2: float
    separable: tuple | None = None
    name: str = "coupling"

    def __post_init__(self):
        self.K0_lo = tuple(float(a) for a in np.atleast_1d(self.K0_lo))
        self.K0_hi = tuple(float(a) for a in np.atleast_1d(self.K0_hi))

    def validate_geometry(self, grid):
        for a, b, lo, hi in zip(self.K0_lo, self.K0_hi, grid.lo, grid.hi):
            if not (lo < a < b < hi):
                raise ValueError("K0 must sit strictly inside the box")

    def K0_mask(self, grid):
        pts = grid.points
        if grid.dim == 1:
            return (pts >= self.K0_lo[0] - 1e-12) & (pts <= self.K0_hi[0] + 1e-12)
        ok = np.ones(grid.n_points, dtype=bool)
        for d in range(2):
            ok &= (pts[:, d] >= self.K0_lo[d] - 1e-12) & (pts[:, d] <= self.K0_hi[d] + 1e-12)
        return ok

    def values_on(self, grid, m):
        """F(., m) at every grid node."""
        if self.separable is not None:
            f, G, _ = self.separable
            a = float(np.dot(m.weights, f(grid.points)))
            return f(grid.points) * G(a)
        return self.eval(grid.points, m)

    def path_values(self, grid, weight_rows, f_nodes=None):
        """F at all nodes for a stack of measures given as weight rows."""
        if self.separable is not None:
            f, G, _ = self.separable
            fn = f(grid.points) if f_nodes is None else f_nodes
            a = weight_rows @ fn
            return np.asarray(G(a))[:, None] * fn[None, :]
        from .measure import GridMeasure

        rows = []
        for w in weight_rows:
            rows.append(self.eval(grid.points, GridMeasure(grid, w)))
        return np.array(rows)


def separable_coupling(f, G, Gprime, K0_lo, K0_hi, delta0, lip2, name="separable"):
    def ev(x, m):
        a = float(np.dot(m.weights, f(m.grid.points)))
        return f(x) * G(a)

    return Coupling(ev, K0_lo, K0_hi, delta0, lip2, (f, G, Gprime), name)


@dataclass
class MeanFieldLagrangian:
    """L_m(x, v) = L(x, v) + F(x, m) for a frozen measure m."""

    base: LagrangianModel
    coupling: Coupling
    m: object  # GridMeasure

    def eval(self, x, v):
        return self.base.eval(x, v) + self.coupling.eval(x, self.m)

    def values_at_rest(self, grid):
        """L_m(x, 0) at every node; the landscape whose minima confine."""
        zero = 0.0 if grid.dim == 1 else np.zeros(2)
        base = self.base.eval(grid.points, zero)
        return np.broadcast_to(base, (grid.n_points,)) + self.coupling.values_on(grid, self.m)


# ---------------------------------------------------------------------------
# Legendre transform


def legendre_transform(L, x, p, grid):
    """H(x, p) = max over v of <p, v> - L(x, v), with the maximizing v.

    The max is taken over the velocity grid and refined by one quadratic fit
    around the discrete maximizer (per axis in 2-D).  Raises
    MaximizerOnBoundary when the discrete maximizer sits on the grid edge.
    """
    if grid.dim == 1:
        v = grid.v_axis
        obj = p * v - L.eval(x, v)
        j = int(np.argmax(obj))
        if j in (0, len(v) - 1):
            raise MaximizerOnBoundary(x, p)
        vj = _quad_vertex(v[j - 1 : j + 2], obj[j - 1 : j + 2])
        cand = p * vj - float(L.eval(x, vj))
        if cand > obj[j]:
            return float(cand), float(vj)
        return float(obj[j]), float(v[j])
    # 2-D: full tensor grid then one per-axis fit
    V = grid.velocities
    obj = V @ np.asarray(p, dtype=float) - L.eval(x, V)
    j = int(np.argmax(obj))
    nv = grid.v_nodes
    j1, j2 = divmod(j, nv)
    if j1 in (0, nv - 1) or j2 in (0, nv - 1):
        raise MaximizerOnBoundary(x, p)
    va = grid.v_axis
    o = obj.reshape(nv, nv)
    v1 = _quad_vertex(va[j1 - 1 : j1 + 2], o[j1 - 1 : j1 + 2, j2])
    v2 = _quad_vertex(va[j2 - 1 : j2 + 2], o[j1, j2 - 1 : j2 + 2])
    vstar = np.array([v1, v2])
    cand = float(np.dot(p, vstar) - L.eval(x, vstar))
    if cand > obj[j]:
        return cand, vstar
    return float(obj[j]), V[j].copy()


def _quad_vertex(vs, ys):
    """Vertex of the parabola through three points; middle point if degenerate."""
    denom = ys[0] - 2.0 * ys[1] + ys[2]
    if denom >= -1e-300:  # not strictly concave around the sample
        return vs[1]
    h = vs[1] - vs[0]
    return vs[1] + 0.5 * h * (ys[0] - ys[2]) / denom


# ---------------------------------------------------------------------------
# assumption checks


@dataclass
class TonelliReport:
    passed: bool
    violations: list = field(default_factory=list)
    growth_flags: list = field(default_factory=list)
    alpha: float = 0.0
    beta: float = 0.0

    def __bool__(self):
        return self.passed


def check_strict_tonelli(L, grid, sample_points=None, sample_velocities=None):
    """Finite-difference verification of the strict Tonelli bounds.

    Checks, at sampled (x, v): eigenvalues of D^2_vv L within [1/C1, C1],
    the mixed Hessian norm below C2 (1 + |v|), and the v=0 data bound C3;
    all with relative tolerance 1e-3.  Growth bounds with the derived
    alpha, beta are flagged (not failed) when violated.
    """
    xs = _default_x_samples(grid) if sample_points is None else sample_points
    vs = _default_v_samples(grid) if sample_velocities is None else sample_velocities
    rep = TonelliReport(True, [], [], L.alpha, L.beta)
    rtol = HESSIAN_RTOL
    for x in xs:
        for v in vs:
            hvv = _hess_vv(L, x, v, grid.dim)
            eig = np.linalg.eigvalsh(hvv) if grid.dim == 2 else np.array([hvv])
            lo_b, hi_b = 1.0 / L.C1, L.C1
            if eig.min() < lo_b * (1 - rtol) or eig.max() > hi_b * (1 + rtol):
                rep.violations.append(("vv_bounds", x, v, float(eig.min()), float(eig.max())))
            hvx = _hess_vx(L, x, v, grid.dim)
            bound = L.C2 * (1.0 + _norm(v))
            if _matnorm(hvx, grid.dim) > bound * (1 + rtol):
                rep.violations.append(("vx_bound", x, v, float(_matnorm(hvx, grid.dim)), bound))
            val = abs(float(L.eval(x, _zero(grid.dim)))) + _norm(
                _grad_x(L, x, _zero(grid.dim), grid.dim)
            ) + _norm(_grad_v(L, x, _zero(grid.dim), grid.dim))
            if val > L.C3 * (1 + rtol):
                rep.violations.append(("c3_bound", x, None, float(val), L.C3))
            lv = float(L.eval(x, v))
            nv2 = _norm(v) ** 2
            if not (nv2 / (4 * L.beta) - L.alpha <= lv + 1e-9 and lv <= 4 * L.beta * nv2 + L.alpha + 1e-9):
                rep.growth_flags.append(("energy_growth", x, v, lv))
            if _norm(_grad_v(L, x, v, grid.dim)) > L.alpha * (1 + _norm(v)) * (1 + rtol):
                rep.growth_flags.append(("dv_growth", x, v))
    rep.passed = not rep.violations
    return rep


def _default_x_samples(grid):
    if grid.dim == 1:
        return list(np.linspace(grid.lo[0], grid.hi[0], 9))
    return [np.array([a, b]) for a in np.linspace(grid.lo[0], grid.hi[0], 4)
            for b in np.linspace(grid.lo[1], grid.hi[1], 4)]


def _default_v_samples(grid):
    vm = grid.v_max
    if grid.dim == 1:
        return list(np.linspace(-0.9 * vm, 0.9 * vm, 7))
    return [np.array([a, b]) for a in np.linspace(-0.9 * vm, 0.9 * vm, 3)
            for b in np.linspace(-0.9 * vm, 0.9 * vm, 3)]


def _zero(dim):
    return 0.0 if dim == 1 else np.zeros(2)


def _norm(v):
    v = np.asarray(v, dtype=float)
    return float(np.sqrt((v**2).sum()))


def _matnorm(h, dim):
    if dim == 1:
        return abs(float(h))
    return float(np.linalg.norm(h, 2))


def _fd_step(v):
    return 1e-4 * (1.0 + _norm(v))


def _hess_vv(L, x, v, dim):
    h = _fd_step(v)
    if dim == 1:
        return (float(L.eval(x, v + h)) - 2 * float(L.eval(x, v)) + float(L.eval(x, v - h))) / h**2
    out = np.empty((2, 2))
    e = np.eye(2)
    for i in range(2):
        for j in range(2):
            out[i, j] = (
                float(L.eval(x, v + h * e[i] + h * e[j]))
                - float(L.eval(x, v + h * e[i] - h * e[j]))
                - float(L.eval(x, v - h * e[i] + h * e[j]))
                + float(L.eval(x, v - h * e[i] - h * e[j]))
            ) / (4 * h**2)
    return 0.5 * (out + out.T)


def _hess_vx(L, x, v, dim):
    h = _fd_step(v)
    if dim == 1:
        return (
            float(L.eval(x + h, v + h))
            - float(L.eval(x + h, v - h))
            - float(L.eval(x - h, v + h))
            + float(L.eval(x - h, v - h))
        ) / (4 * h**2)
    out = np.empty((2, 2))
    e = np.eye(2)
    for i in range(2):  # d/dv_i d/dx_j
        for j in range(2):
            out[i, j] = (
                float(L.eval(x + h * e[j], v + h * e[i]))
                - float(L.eval(x + h * e[j], v - h * e[i]))
                - float(L.eval(x - h * e[j], v + h * e[i]))
                + float(L.eval(x - h * e[j], v - h * e[i]))
            ) / (4 * h**2)
    return out


def _grad_v(L, x, v, dim):
    h = _fd_step(v)
    if dim == 1:
        return (float(L.eval(x, v + h)) - float(L.eval(x, v - h))) / (2 * h)
    e = np.eye(2)
    return np.array(
        [(float(L.eval(x, v + h * e[i])) - float(L.eval(x, v - h * e[i]))) / (2 * h) for i in range(2)]
    )


def _grad_x(L, x, v, dim):
    h = _fd_step(v)
    if dim == 1:
        return (float(L.eval(x + h, v)) - float(L.eval(x - h, v))) / (2 * h)
    e = np.eye(2)
    return np.array(
        [(float(L.eval(x + h * e[i], v)) - float(L.eval(x - h * e[i], v))) / (2 * h) for i in range(2)]
    )


def check_F4_gap(coupling, L, grid, probes):
    """Confinement gap of x -> L_m(x, 0) between K0 and the rest of the box.

    Returns the minimum over probe measures of
    min outside K0 - min on K0; raises GapViolated when any probe's gap
    falls below the declared delta0.
    """
    coupling.validate_geometry(grid)
    mask = coupling.K0_mask(grid)
    if not mask.any() or mask.all():
        raise ValueError("K0 mask degenerate on this grid")
    gaps = []
    for k, m in enumerate(probes):
        rest = MeanFieldLagrangian(L, coupling, m).values_at_rest(grid)
        gap = float(rest[~mask].min() - rest[mask].min())
        if gap < coupling.delta0:
            raise GapViolated(f"probe[{k}]", gap, coupling.delta0)
        gaps.append(gap)
    return min(gaps)


def check_F5(coupling, L, grid, probes):
    """Common minimizer of L_m(., 0) over K0 across probes.

    Returns (ok, witness_flat_index).  Minimizing node sets are resolved at
    tolerance 1e-10 on the minimum value.
    """
    mask = coupling.K0_mask(grid)
    idx_k0 = np.flatnonzero(mask)
    common = None
    for m in probes:
        rest = MeanFieldLagrangian(L, coupling, m).values_at_rest(grid)[idx_k0]
        mn = rest.min()
        argset = set(idx_k0[np.flatnonzero(rest <= mn + ARGMIN_TOL)].tolist())
        common = argset if common is None else (common & argset)
        if not common:
            return False, None
    witness = min(common)  # lexicographic = smallest flat index
    return True, int(witness)
