"""Lagrangian side: trace the optimal flow and push the initial measure.

Curves follow the stored feedback by forward Euler with the same time step
as the backward solve, so the pair (value field, measure path) discretizes
the coupled system consistently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EscapedBox
from .measure import MeasurePath, deposit


@dataclass
class TrajectoryBundle:
    """One traced curve per support node of the initial measure."""

    grid: object
    times: np.ndarray
    start_nodes: np.ndarray
    positions: np.ndarray  # (C, K+1) or (C, K+1, 2)
    velocities: np.ndarray  # (C, K) or (C, K, 2)
    masses: np.ndarray  # (C,)

    def speeds(self):
        if self.grid.dim == 1:
            return np.abs(self.velocities)
        return np.sqrt((self.velocities**2).sum(axis=-1))

    def max_speed(self):
        return float(self.speeds().max())

    def radii(self):
        if self.grid.dim == 1:
            return np.abs(self.positions)
        return np.sqrt((self.positions**2).sum(axis=-1))

    def to_csv(self, path):
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if g.dim == 1:
                w.writerow(["curve", "t", "x", "v"])
            else:
                w.writerow(["curve", "t", "x", "y", "vx", "vy"])
            K = len(self.times) - 1
            for c in range(self.positions.shape[0]):
                for k, t in enumerate(self.times):
                    vel = self.velocities[c, min(k, K - 1)]
                    if g.dim == 1:
                        w.writerow([c, repr(float(t)), repr(float(self.positions[c, k])),
                                    repr(float(vel))])
                    else:
                        w.writerow([c, repr(float(t)),
                                    repr(float(self.positions[c, k, 0])),
                                    repr(float(self.positions[c, k, 1])),
                                    repr(float(vel[0])), repr(float(vel[1]))])


def trace_optimal_flow(vf, m0, start_nodes=None):
    """Forward-Euler curves through the stored optimal feedback.

    One curve starts at each support node of m0 (or at the given flat node
    indices).  Raises EscapedBox if a curve leaves the box, which the
    clamped scheme should prevent for admissible data.
    """
    g = vf.grid
    K = vf.feedback.shape[0]
    starts = m0.support() if start_nodes is None else np.asarray(start_nodes)
    C = len(starts)
    if g.dim == 1:
        pos = np.empty((C, K + 1))
        vel = np.empty((C, K))
        pos[:, 0] = g.points[starts]
        for k in range(K):
            v = vf.velocity_at(k, pos[:, k])
            vel[:, k] = v
            nxt = pos[:, k] + g.dt * v
            out = (nxt < g.lo[0] - 1e-12) | (nxt > g.hi[0] + 1e-12)
            if out.any():
                c = int(np.flatnonzero(out)[0])
                raise EscapedBox(int(starts[c]), float(vf.times[k + 1]), float(nxt[c]))
            pos[:, k + 1] = nxt
    else:
        pos = np.empty((C, K + 1, 2))
        vel = np.empty((C, K, 2))
        pos[:, 0] = g.points[starts]
        for k in range(K):
            v = vf.velocity_at(k, pos[:, k])
            vel[:, k] = v
            nxt = pos[:, k] + g.dt * v
            inside = g.contains_points(nxt)
            if not inside.all():
                c = int(np.flatnonzero(~inside)[0])
                raise EscapedBox(int(starts[c]), float(vf.times[k + 1]), nxt[c])
            pos[:, k + 1] = nxt
    masses = m0.weights[starts]
    return TrajectoryBundle(g, vf.times.copy(), starts, pos, vel, masses)


def measure_path(bundle):
    """Deposit the bundle onto the grid at every time to get m(t)."""
    g = bundle.grid
    Kp1 = len(bundle.times)
    rows = np.empty((Kp1, g.n_points))
    total = bundle.masses.sum()
    for k in range(Kp1):
        w = deposit(g, bundle.positions[:, k], bundle.masses)
        s = w.sum()
        if abs(s - total) > 1e-12:
            raise ValueError(f"deposition lost mass at step {k}: {abs(s-total):.3e}")
        rows[k] = w / s
    return MeasurePath(g, bundle.times, rows, validate=False)


def occupation_time_outside(bundle, R):
    """Lebesgue time each curve spends outside the closed ball B_R.

    Left-endpoint rule: dt times the number of sample times t_k < T with
    |xi(t_k)| > R.  Returns (per_curve, max).
    """
    r = bundle.radii()[:, :-1]
    dt = float(bundle.times[1] - bundle.times[0])
    per = (r > R).sum(axis=1) * dt
    return per, float(per.max())


def energy_on_window(bundle, t, window):
    """Max over curves of int |xi'|^2 ds over [t, t + window] (left rule)."""
    dt = float(bundle.times[1] - bundle.times[0])
    ks = np.flatnonzero(
        (bundle.times[:-1] >= t - 1e-12) & (bundle.times[:-1] < t + window - 1e-12)
    )
    if len(ks) == 0:
        return 0.0
    sq = bundle.speeds()[:, ks] ** 2
    return float(sq.sum(axis=1).max() * dt)


def action_defect(bundle, vf, L, F_path, uf_values):
    """Per-curve gap between the Riemann action along the curve and u(0, .).

    The discrete domination inequality makes this nonnegative up to
    interpolation error; it shrinks at first order under refinement.
    """
    g = bundle.grid
    dt = g.dt
    K = bundle.velocities.shape[1]
    from .hjb import _as_path_values

    F = _as_path_values(F_path, g, K)
    C = bundle.positions.shape[0]
    action = np.zeros(C)
    for k in range(K):
        x = bundle.positions[:, k]
        v = bundle.velocities[:, k]
        Fk = np.interp(x, g.axes[0], F[k]) if g.dim == 1 else _interp2(g, F[k], x)
        action += dt * (np.asarray(L.eval(x, v), dtype=float) + Fk)
    end = bundle.positions[:, K]
    from .model import interp_grid

    action += interp_grid(g, uf_values, end)
    u0 = interp_grid(g, vf.values[0], bundle.positions[:, 0])
    return action - u0


def _interp2(g, vals, pts):
    from .model import interp_grid

    return interp_grid(g, vals, pts)
