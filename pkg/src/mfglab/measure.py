"""Probability measures on the grid and the 1-Wasserstein machinery.

Measures are nonnegative node-weight vectors summing to one.  d_1 is exact:
the CDF integral in 1-D, the transportation LP on supports in 2-D.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import EscapedBox, NotLipschitz, SupportTooLarge, UnsupportedDimension

MASS_TOL = 1e-12
SUPPORT_EPS = 1e-15
LP_SUPPORT_CAP = 4096


class GridMeasure:
    """Probability measure supported on grid nodes."""

    def __init__(self, grid, weights, validate=True):
        self.grid = grid
        self.weights = np.asarray(weights, dtype=float)
        if validate:
            self.validate()

    def validate(self):
        w = self.weights
        if w.shape != (self.grid.n_points,):
            raise ValueError("weight vector does not match the grid")
        if w.min() < -SUPPORT_EPS:
            raise ValueError(f"negative weight {w.min():.3e}")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"mass {w.sum()!r} not 1 within {MASS_TOL}")

    # constructors -----------------------------------------------------

    @classmethod
    def dirac(cls, grid, x):
        w = np.zeros(grid.n_points)
        w[grid.nearest_node(x)] = 1.0
        return cls(grid, w)

    @classmethod
    def uniform_on(cls, grid, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        pts = grid.points
        if grid.dim == 1:
            mask = (pts >= lo[0] - 1e-12) & (pts <= hi[0] + 1e-12)
        else:
            mask = np.ones(grid.n_points, dtype=bool)
            for d in range(2):
                mask &= (pts[:, d] >= lo[d] - 1e-12) & (pts[:, d] <= hi[d] + 1e-12)
        if not mask.any():
            raise ValueError("no grid nodes inside the requested sub-box")
        w = mask.astype(float)
        return cls(grid, w / w.sum())

    @classmethod
    def from_density(cls, grid, density):
        vals = np.asarray(density(grid.points), dtype=float)
        if vals.min() < 0:
            raise ValueError("density must be nonnegative")
        s = vals.sum()
        if s <= 0:
            raise ValueError("density integrates to zero on the grid")
        return cls(grid, vals / s)

    # queries ----------------------------------------------------------

    def support(self):
        return np.flatnonzero(self.weights > SUPPORT_EPS)

    def support_radius(self):
        r = self.grid.radii()
        return float(r[self.support()].max())

    def integrate(self, values_or_callable):
        v = values_or_callable
        if callable(v):
            v = v(self.grid.points)
        return float(np.dot(self.weights, np.asarray(v, dtype=float)))

    def mean(self):
        if self.grid.dim == 1:
            return self.integrate(self.grid.points)
        return self.weights @ self.grid.points

    def cdf(self):
        if self.grid.dim != 1:
            raise UnsupportedDimension("cdf is 1-D only")
        return np.cumsum(self.weights)

    # serialization ------------------------------------------------------

    def to_csv(self, path):
        write_measure_csv(path, self)

    @classmethod
    def from_csv(cls, grid, path):
        return read_measure_csv(grid, path)


def write_measure_csv(path, m):
    g = m.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if g.dim == 1:
            w.writerow(["node_index", "x", "weight"])
            for i in range(g.n_points):
                w.writerow([i, repr(float(g.points[i])), repr(float(m.weights[i]))])
        else:
            w.writerow(["node_index", "x", "y", "weight"])
            for i in range(g.n_points):
                w.writerow([
                    i,
                    repr(float(g.points[i, 0])),
                    repr(float(g.points[i, 1])),
                    repr(float(m.weights[i])),
                ])


def read_measure_csv(grid, path):
    weights = np.zeros(grid.n_points)
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        for row in r:
            i = int(row[0])
            weights[i] = float(row[-1])
            # node coordinates must match the grid they claim to live on
            if grid.dim == 1:
                if abs(float(row[1]) - grid.points[i]) > 1e-9:
                    raise ValueError(f"node {i} coordinate mismatch in {path}")
            else:
                if (
                    abs(float(row[1]) - grid.points[i, 0]) > 1e-9
                    or abs(float(row[2]) - grid.points[i, 1]) > 1e-9
                ):
                    raise ValueError(f"node {i} coordinate mismatch in {path}")
    _ = header
    return GridMeasure(grid, weights)


# ---------------------------------------------------------------------------
# Wasserstein-1


def wasserstein1(m1, m2):
    """Exact d_1 between two grid measures on the same grid.

    1-D: integral of |CDF difference| (piecewise-constant between nodes).
    2-D: transportation LP on the supports, solved with HiGHS.
    """
    if m1.grid is not m2.grid and m1.grid.describe() != m2.grid.describe():
        raise ValueError("measures live on different grids")
    g = m1.grid
    if g.dim == 1:
        c = np.cumsum(m1.weights - m2.weights)[:-1]
        return float(np.abs(c).sum() * g.dx[0])
    return _wasserstein1_lp(m1, m2)


def _wasserstein1_lp(m1, m2):
    s1 = m1.support()
    s2 = m2.support()
    if len(s1) > LP_SUPPORT_CAP or len(s2) > LP_SUPPORT_CAP:
        raise SupportTooLarge(f"supports {len(s1)}x{len(s2)} exceed cap {LP_SUPPORT_CAP}")
    a = m1.weights[s1]
    b = m2.weights[s2]
    p = m1.grid.points[s1]
    q = m2.grid.points[s2]
    cost = np.sqrt(((p[:, None, :] - q[None, :, :]) ** 2).sum(axis=2)).ravel()
    ni, nj = len(s1), len(s2)
    rows, cols, vals = [], [], []
    for i in range(ni):
        rows.extend([i] * nj)
        cols.extend(range(i * nj, (i + 1) * nj))
        vals.extend([1.0] * nj)
    for j in range(nj):
        rows.extend([ni + j] * ni)
        cols.extend(range(j, ni * nj, nj))
        vals.extend([1.0] * ni)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(ni + nj, ni * nj))
    rhs = np.concatenate([a, b])
    res = linprog(cost, A_eq=A, b_eq=rhs, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


def kantorovich_potential_1d(m1, m2):
    """A 1-Lipschitz witness achieving d_1 in the dual (1-D only)."""
    g = m1.grid
    if g.dim != 1:
        raise UnsupportedDimension("potential construction is 1-D only")
    c = np.cumsum(m1.weights - m2.weights)
    phi = np.zeros(g.n_points)
    # slope -sign(CDF gap) integrates the dual; Abel summation makes the
    # pairing equal the CDF integral exactly
    steps = -np.sign(c[:-1]) * g.dx[0]
    phi[1:] = np.cumsum(steps)
    return phi


def duality_gap_check(m1, m2, witness):
    """d_1(m1, m2) - (int w dm1 - int w dm2) for a 1-Lipschitz witness.

    Raises NotLipschitz when the witness violates the grid-edge Lipschitz
    bound.  The gap is nonnegative up to float error for any valid witness.
    """
    g = m1.grid
    w = np.asarray(witness, dtype=float)
    if g.dim == 1:
        if np.max(np.abs(np.diff(w))) > g.dx[0] * (1 + 1e-9) + 1e-12:
            raise NotLipschitz("witness exceeds slope 1 on a grid edge")
    else:
        wm = w.reshape(g.nodes)
        if (
            np.max(np.abs(np.diff(wm, axis=0))) > g.dx[0] * (1 + 1e-9) + 1e-12
            or np.max(np.abs(np.diff(wm, axis=1))) > g.dx[1] * (1 + 1e-9) + 1e-12
        ):
            raise NotLipschitz("witness exceeds slope 1 on a grid edge")
    pairing = float(np.dot(w, m1.weights - m2.weights))
    return wasserstein1(m1, m2) - pairing


# ---------------------------------------------------------------------------
# pushforward


def deposit(grid, pts, masses):
    """Area-weight the point masses onto their 2^n neighboring nodes."""
    pts = np.asarray(pts, dtype=float)
    masses = np.asarray(masses, dtype=float)
    w = np.zeros(grid.n_points)
    if grid.dim == 1:
        f = (pts - grid.lo[0]) / grid.dx[0]
        i0 = np.minimum(f.astype(int), grid.nodes[0] - 2)
        i0 = np.maximum(i0, 0)
        a = f - i0
        np.add.at(w, i0, masses * (1 - a))
        np.add.at(w, i0 + 1, masses * a)
        return w
    n1, n2 = grid.nodes
    fx = (pts[:, 0] - grid.lo[0]) / grid.dx[0]
    fy = (pts[:, 1] - grid.lo[1]) / grid.dx[1]
    i0 = np.clip(fx.astype(int), 0, n1 - 2)
    j0 = np.clip(fy.astype(int), 0, n2 - 2)
    ax = fx - i0
    ay = fy - j0
    base = i0 * n2 + j0
    np.add.at(w, base, masses * (1 - ax) * (1 - ay))
    np.add.at(w, base + n2, masses * ax * (1 - ay))
    np.add.at(w, base + 1, masses * (1 - ax) * ay)
    np.add.at(w, base + n2 + 1, masses * ax * ay)
    return w


def pushforward(m, images):
    """Image measure of m under a node map, deposited back onto the grid.

    images: array of image points aligned with m's support nodes (or a
    callable applied to the support nodes).  Mass is conserved exactly up to
    float drift <= 1e-14, which is renormalized away; anything larger is an
    error.  Images outside the box raise EscapedBox.
    """
    g = m.grid
    sup = m.support()
    pts = g.points[sup]
    if callable(images):
        img = np.asarray(images(pts), dtype=float)
    else:
        img = np.asarray(images, dtype=float)
        if img.shape[0] == g.n_points:
            img = img[sup]
    inside = g.contains_points(img)
    if not inside.all():
        k = int(np.flatnonzero(~inside)[0])
        raise EscapedBox(int(sup[k]), 0.0, img[k])
    w = deposit(g, img, m.weights[sup])
    drift = abs(w.sum() - 1.0)
    if drift > 1e-12:
        raise ValueError(f"pushforward lost mass: drift {drift:.3e}")
    if drift > 0:
        w = w / w.sum()
    return GridMeasure(g, w, validate=False)


class MeasurePath:
    """Time-indexed family of grid measures on a shared grid."""

    def __init__(self, grid, times, weight_rows, validate=True):
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.weights = np.asarray(weight_rows, dtype=float)
        if self.weights.shape != (len(self.times), grid.n_points):
            raise ValueError("weight rows do not match times x nodes")
        if validate:
            for k in range(len(self.times)):
                GridMeasure(grid, self.weights[k])

    def __len__(self):
        return len(self.times)

    def measure(self, k):
        return GridMeasure(self.grid, self.weights[k], validate=False)

    def d1_to(self, other_weights):
        """d_1 row-by-row against another weight stack (1-D grids)."""
        if self.grid.dim != 1:
            raise UnsupportedDimension("vectorized path distance is 1-D only")
        c = np.cumsum(self.weights - other_weights, axis=1)[:, :-1]
        return np.abs(c).sum(axis=1) * self.grid.dx[0]

    def to_csv(self, path):
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if g.dim == 1:
                w.writerow(["t", "node_index", "x", "weight"])
            else:
                w.writerow(["t", "node_index", "x", "y", "weight"])
            for k, t in enumerate(self.times):
                row_w = self.weights[k]
                for i in np.flatnonzero(row_w > SUPPORT_EPS):
                    if g.dim == 1:
                        w.writerow([repr(float(t)), i, repr(float(g.points[i])),
                                    repr(float(row_w[i]))])
                    else:
                        w.writerow([repr(float(t)), i,
                                    repr(float(g.points[i, 0])),
                                    repr(float(g.points[i, 1])),
                                    repr(float(row_w[i]))])

    @classmethod
    def from_csv(cls, grid, path):
        rows = {}
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            next(r)
            for row in r:
                t = float(row[0])
                rows.setdefault(t, np.zeros(grid.n_points))[int(row[1])] = float(row[-1])
        times = sorted(rows)
        return cls(grid, times, np.array([rows[t] for t in times]))
