"""Backward Hamilton-Jacobi solver on the box.

The value function of

    u(t, x) = inf over curves from (t, x) of
              int_t^T [L(xi, xi') + F(xi, s)] ds + u_f(xi(T))

is computed by semi-Lagrangian dynamic programming: at each step the
velocity is chosen from the grid, the continuation value interpolated
multilinearly, and the minimizing velocity stored as the optimal feedback.
Interpolation clamps to the box, which encodes state constraints at the
(remote) boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import MinimizerOnBoundary, NotLipschitz
from .model import interp_grid


@dataclass
class TerminalDatum:
    """Final cost u_f with declared Lipschitz constant and lower bound -c0."""

    eval: callable
    lip: float
    c0: float

    def values_on(self, grid):
        vals = np.asarray(self.eval(grid.points), dtype=float)
        return np.broadcast_to(vals, (grid.n_points,)).copy()

    def validate(self, grid):
        vals = self.values_on(grid)
        if vals.min() < -self.c0 - 1e-12:
            raise ValueError(
                f"terminal datum dips to {vals.min():.6g} below declared -c0={-self.c0}"
            )
        lip = _grid_lipschitz(grid, vals)
        if lip > self.lip * (1 + 1e-9) + 1e-12:
            raise NotLipschitz(
                f"terminal datum has grid Lipschitz {lip:.6g} > declared {self.lip}"
            )
        return vals


def zero_terminal():
    return TerminalDatum(lambda pts: np.zeros(np.shape(pts)[0] if np.ndim(pts) else 1), 0.0, 0.0)


def _grid_lipschitz(grid, vals, mask=None):
    """Max absolute slope over grid edges (optionally within a node mask)."""
    if grid.dim == 1:
        d = np.abs(np.diff(vals)) / grid.dx[0]
        if mask is not None:
            keep = mask[:-1] & mask[1:]
            d = d[keep]
        return float(d.max()) if d.size else 0.0
    vm = vals.reshape(grid.nodes)
    mk = None if mask is None else mask.reshape(grid.nodes)
    d0 = np.abs(np.diff(vm, axis=0)) / grid.dx[0]
    d1 = np.abs(np.diff(vm, axis=1)) / grid.dx[1]
    if mk is not None:
        d0 = d0[mk[:-1, :] & mk[1:, :]]
        d1 = d1[mk[:, :-1] & mk[:, 1:]]
    parts = [d.max() for d in (d0, d1) if d.size]
    return float(max(parts)) if parts else 0.0


@dataclass
class ValueField:
    """Space-time value table with the stored optimal feedback.

    values has shape (K+1, N); feedback has shape (K, N) (no minimization
    happens at the final time) and holds the chosen grid velocity, or in
    2-D two stacked components with shape (K, N, 2).
    """

    grid: object
    times: np.ndarray
    values: np.ndarray
    feedback: np.ndarray

    @property
    def T(self):
        return float(self.times[-1])

    def velocity_at(self, k, pts):
        """Feedback at arbitrary points, multilinear in space."""
        k = min(k, self.feedback.shape[0] - 1)
        if self.grid.dim == 1:
            return interp_grid(self.grid, self.feedback[k], pts)
        return np.stack(
            [interp_grid(self.grid, self.feedback[k, :, d], pts) for d in range(2)],
            axis=-1,
        )

    def to_csv(self, path):
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if g.dim == 1:
                w.writerow(["t", "node_index", "x", "u"])
                for k, t in enumerate(self.times):
                    for i in range(g.n_points):
                        w.writerow([repr(float(t)), i, repr(float(g.points[i])),
                                    repr(float(self.values[k, i]))])
            else:
                w.writerow(["t", "node_index", "x", "y", "u"])
                for k, t in enumerate(self.times):
                    for i in range(g.n_points):
                        w.writerow([repr(float(t)), i,
                                    repr(float(g.points[i, 0])),
                                    repr(float(g.points[i, 1])),
                                    repr(float(self.values[k, i]))])


def _as_path_values(F_path, grid, K):
    """Normalize the coupling term to an array of node rows per time index."""
    if F_path is None:
        return np.zeros((K + 1, grid.n_points))
    if callable(F_path):
        rows = [np.broadcast_to(np.asarray(F_path(grid.points, k * grid.dt), dtype=float),
                                (grid.n_points,))
                for k in range(K + 1)]
        return np.array(rows)
    F = np.asarray(F_path, dtype=float)
    if F.shape == (grid.n_points,):
        return np.broadcast_to(F, (K + 1, grid.n_points)).copy()
    if F.shape != (K + 1, grid.n_points):
        raise ValueError(f"F_path shape {F.shape} does not match (K+1, N)")
    return F


def solve_backward(L, F_path, uf, grid, T, check_boundary=True):
    """Dynamic-programming solve of the backward HJ equation on [0, T].

    u(t_k, x) = min over grid velocities v of
        dt * [L(x, v) + F(x, t_k)] + Interp[u(t_{k+1})](x + dt v).

    Returns a ValueField whose feedback rows hold the minimizing velocity
    per (t_k, node); ties go to the lowest velocity index.  Raises
    MinimizerOnBoundary when a minimizer lands on the velocity-grid edge,
    signalling that v_max is too small for the data.
    """
    K = grid.time_steps(T)
    times = np.arange(K + 1) * grid.dt
    F = _as_path_values(F_path, grid, K)
    uT = uf.validate(grid) if isinstance(uf, TerminalDatum) else np.asarray(uf, dtype=float)
    N = grid.n_points
    dt = grid.dt

    if grid.dim == 1:
        V = grid.v_axis
        Lmat = np.asarray(L.eval(grid.points[None, :], V[:, None]), dtype=float)
        pos = grid.points[None, :] + dt * V[:, None]
        pos_flat = pos.ravel()
        values = np.empty((K + 1, N))
        feedback = np.empty((K, N))
        values[K] = uT
        arangeN = np.arange(N)
        for k in range(K - 1, -1, -1):
            cont = np.interp(pos_flat, grid.axes[0], values[k + 1]).reshape(len(V), N)
            cand = dt * (Lmat + F[k][None, :]) + cont
            jstar = np.argmin(cand, axis=0)
            if check_boundary:
                bad = (jstar == 0) | (jstar == len(V) - 1)
                if bad.any():
                    i = int(arangeN[bad][0])
                    raise MinimizerOnBoundary(times[k], grid.points[i])
            values[k] = cand[jstar, arangeN]
            feedback[k] = V[jstar]
        return ValueField(grid, times, values, feedback)

    # 2-D
    Vlist = grid.velocities
    nv = grid.v_nodes
    Lmat = np.asarray(L.eval(grid.points[None, :, :], Vlist[:, None, :]), dtype=float)
    pos = grid.points[None, :, :] + dt * Vlist[:, None, :]
    values = np.empty((K + 1, N))
    feedback = np.empty((K, N, 2))
    values[K] = uT
    arangeN = np.arange(N)
    for k in range(K - 1, -1, -1):
        cont = interp_grid(grid, values[k + 1], pos)
        cand = dt * (Lmat + F[k][None, :]) + cont
        jstar = np.argmin(cand, axis=0)
        if check_boundary:
            j1, j2 = np.divmod(jstar, nv)
            bad = (j1 == 0) | (j1 == nv - 1) | (j2 == 0) | (j2 == nv - 1)
            if bad.any():
                i = int(arangeN[bad][0])
                raise MinimizerOnBoundary(times[k], grid.points[i])
        values[k] = cand[jstar, arangeN]
        feedback[k] = Vlist[jstar]
    return ValueField(grid, times, values, feedback)


def hopf_lax_oracle(uf, t, x, T, grid):
    """Direct Hopf-Lax value for L = |v|^2/2 and no coupling term.

    inf over grid nodes y of |x - y|^2 / (2 (T - t)) + u_f(y), refined by
    one quadratic fit around the discrete minimizer.  Independent of the
    dynamic-programming route, so it serves as an oracle for it.
    """
    if T <= t:
        vals = uf.values_on(grid) if isinstance(uf, TerminalDatum) else uf
        return float(interp_grid(grid, vals, x))
    tau = T - t
    vals = uf.values_on(grid) if isinstance(uf, TerminalDatum) else np.asarray(uf, dtype=float)
    if grid.dim == 1:
        y = grid.points
        obj = (x - y) ** 2 / (2 * tau) + vals
        j = int(np.argmin(obj))
        lo = max(j - 1, 0)
        hi = min(j + 2, len(y))
        if hi - lo == 3:
            ys = y[lo:hi]
            os_ = obj[lo:hi]
            denom = os_[0] - 2 * os_[1] + os_[2]
            if denom > 1e-300:
                ystar = ys[1] - 0.5 * (ys[1] - ys[0]) * (os_[2] - os_[0]) / denom
                cand = (x - ystar) ** 2 / (2 * tau) + float(
                    interp_grid(grid, vals, ystar)
                )
                return float(min(obj[j], cand))
        return float(obj[j])
    y = grid.points
    obj = ((x - y) ** 2).sum(axis=1) / (2 * tau) + vals
    return float(obj.min())


def gradient(vf, k):
    """Spatial gradient of the value at time index k, upwinded by feedback.

    Where the stored feedback is positive the scheme looked to the right,
    so a forward difference follows the characteristic; negative feedback
    takes the backward difference; near-zero feedback uses the central one.
    Boundary nodes take the available one-sided difference.
    """
    g = vf.grid
    u = vf.values[k]
    kf = min(k, vf.feedback.shape[0] - 1)
    if g.dim == 1:
        v = vf.feedback[kf]
        dx = g.dx[0]
        dv = g.v_axis[1] - g.v_axis[0]
        fwd = np.empty_like(u)
        bwd = np.empty_like(u)
        fwd[:-1] = (u[1:] - u[:-1]) / dx
        fwd[-1] = (u[-1] - u[-2]) / dx
        bwd[1:] = (u[1:] - u[:-1]) / dx
        bwd[0] = (u[1] - u[0]) / dx
        ctr = 0.5 * (fwd + bwd)
        out = np.where(v > 0.5 * dv, fwd, np.where(v < -0.5 * dv, bwd, ctr))
        return out
    v = vf.feedback[kf]
    n1, n2 = g.nodes
    um = u.reshape(n1, n2)
    out = np.empty((g.n_points, 2))
    for d, dx in enumerate(g.dx):
        dv = g.v_axis[1] - g.v_axis[0]
        fwd = np.empty_like(um)
        bwd = np.empty_like(um)
        if d == 0:
            fwd[:-1, :] = (um[1:, :] - um[:-1, :]) / dx
            fwd[-1, :] = fwd[-2, :]
            bwd[1:, :] = (um[1:, :] - um[:-1, :]) / dx
            bwd[0, :] = bwd[1, :]
        else:
            fwd[:, :-1] = (um[:, 1:] - um[:, :-1]) / dx
            fwd[:, -1] = fwd[:, -2]
            bwd[:, 1:] = (um[:, 1:] - um[:, :-1]) / dx
            bwd[:, 0] = bwd[:, 1]
        ctr = 0.5 * (fwd + bwd)
        vd = v[:, d].reshape(n1, n2)
        sel = np.where(vd > 0.5 * dv, fwd, np.where(vd < -0.5 * dv, bwd, ctr))
        out[:, d] = sel.ravel()
    return out


def lipschitz_estimate(vf, R=None):
    """Largest grid-edge slope of u over all times, restricted to B_R."""
    g = vf.grid
    mask = None if R is None else g.ball_mask(R)
    best = 0.0
    for k in range(vf.values.shape[0]):
        best = max(best, _grid_lipschitz(g, vf.values[k], mask))
    return best


def time_lipschitz_estimate(vf):
    """Max |u(t+dt) - u(t)| / dt over the table; reported, never asserted."""
    du = np.abs(np.diff(vf.values, axis=0)).max()
    return float(du / vf.grid.dt)


def hj_residual(vf, L, F_path, sample_ks=None, kink_tol=None):
    """Sup of |-du/dt + H(x, Du) - F| over smooth interior nodes.

    H is evaluated by brute-force Legendre max over the velocity grid.
    Nodes where forward and backward differences disagree by more than
    kink_tol (default 10 dx) are treated as kinks and skipped, as are box
    boundary nodes.
    """
    g = vf.grid
    K = vf.values.shape[0] - 1
    F = _as_path_values(F_path, g, K)
    if sample_ks is None:
        sample_ks = range(K)
    if g.dim != 1:
        raise NotImplementedError("residual diagnostic is 1-D")
    dx = g.dx[0]
    if kink_tol is None:
        kink_tol = 10.0 * dx
    V = g.v_axis
    Lmat = np.asarray(L.eval(g.points[None, :], V[:, None]), dtype=float)
    worst = 0.0
    for k in sample_ks:
        u = vf.values[k]
        dudt = (vf.values[k + 1] - u) / g.dt
        fwd = (u[2:] - u[1:-1]) / dx
        bwd = (u[1:-1] - u[:-2]) / dx
        smooth = np.abs(fwd - bwd) <= kink_tol
        p = 0.5 * (fwd + bwd)
        H = (p[None, :] * V[:, None] - Lmat[:, 1:-1]).max(axis=0)
        res = np.abs(-dudt[1:-1] + H - F[k][1:-1])
        if smooth.any():
            worst = max(worst, float(res[smooth].max()))
    return worst
