"""Finite-horizon mean field game solver.

Fictitious play on the measure path: solve the backward HJ equation against
the frozen path, push the initial measure through the optimal flow, average,
repeat.  Stopping is on the sup-over-time d_1 distance between successive
paths.  Failure to converge is a flag, not an exception; broken standing
assumptions raise before any iteration runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionFailure
from .hjb import TerminalDatum, solve_backward, lipschitz_estimate, time_lipschitz_estimate
from .measure import GridMeasure, MeasurePath
from .model import check_F4_gap, check_strict_tonelli
from .transport import measure_path, trace_optimal_flow


@dataclass
class MFGParams:
    tol: float = 1e-4
    max_iters: int = 60
    averaging: object = "fictitious"  # or a fixed theta in (0, 1]
    check_assumptions: bool = True

    def theta(self, k):
        if self.averaging == "fictitious":
            return 1.0 / (k + 1.0)
        th = float(self.averaging)
        if not 0 < th <= 1:
            raise ValueError("fixed averaging weight must lie in (0, 1]")
        return th if k > 0 else 1.0


@dataclass
class MFGSolution:
    u: object  # ValueField
    m_path: MeasurePath
    bundle: object
    converged: bool
    iterations: int
    residuals: list
    diagnostics: dict = field(default_factory=dict)


def default_probes(coupling, grid, count=3, seed=0):
    """Probe measures living on K0: corner/center diracs plus a uniform."""
    probes = []
    mask = coupling.K0_mask(grid)
    idx = np.flatnonzero(mask)
    for i in (idx[0], idx[len(idx) // 2], idx[-1]):
        w = np.zeros(grid.n_points)
        w[i] = 1.0
        probes.append(GridMeasure(grid, w))
    probes.append(GridMeasure.uniform_on(grid, coupling.K0_lo, coupling.K0_hi))
    rng = np.random.default_rng(seed)
    for _ in range(max(count - 4, 0)):
        w = np.zeros(grid.n_points)
        w[idx] = rng.random(len(idx))
        probes.append(GridMeasure(grid, w / w.sum()))
    return probes


def _check_standing_assumptions(L, coupling, grid, m0, uf):
    rep = check_strict_tonelli(L, grid)
    if not rep.passed:
        raise AssumptionFailure(f"Tonelli bounds failed: {rep.violations[:3]}")
    coupling.validate_geometry(grid)
    check_F4_gap(coupling, L, grid, default_probes(coupling, grid))
    if not coupling.K0_mask(grid)[m0.support()].all():
        raise AssumptionFailure("initial measure charges nodes outside K0")
    uf.validate(grid)


def solve_finite_horizon(L, coupling, m0, uf, grid, T, params=None):
    """Fixed point of the best-response map by damped fictitious play.

    Returns the last (value field, measure path) pair with the convergence
    flag and residual history.  m_path(0) equals m0 exactly and the value
    table ends at the terminal datum exactly.
    """
    params = params or MFGParams()
    if isinstance(uf, TerminalDatum):
        uf_datum = uf
    else:
        raise TypeError("uf must be a TerminalDatum")
    if params.check_assumptions:
        _check_standing_assumptions(L, coupling, grid, m0, uf_datum)

    K = grid.time_steps(T)
    f_nodes = None
    if coupling.separable is not None:
        f_nodes = coupling.separable[0](grid.points)

    W = np.tile(m0.weights, (K + 1, 1))
    residuals = []
    converged = False
    vf = None
    bundle = None
    it = 0
    for it in range(params.max_iters):
        F = coupling.path_values(grid, W, f_nodes)
        vf = solve_backward(L, F, uf_datum, grid, T)
        bundle = trace_optimal_flow(vf, m0)
        new_path = measure_path(bundle)
        theta = params.theta(it)
        W_next = (1.0 - theta) * W + theta * new_path.weights
        if grid.dim == 1:
            c = np.cumsum(W_next - W, axis=1)[:, :-1]
            res = float(np.abs(c).sum(axis=1).max() * grid.dx[0])
        else:
            res = max(
                _w1_rowpair(grid, W_next[k], W[k]) for k in range(K + 1)
            )
        residuals.append(res)
        W = W_next
        if res <= params.tol:
            converged = True
            break

    path = MeasurePath(grid, vf.times, W, validate=False)
    radii = grid.radii()
    sup_mask = W > 1e-15
    measured_R1 = float(max(radii[sup_mask.any(axis=0)].max(), 0.0))
    diagnostics = {
        "measured_R1": measured_R1,
        "max_speed": bundle.max_speed(),
        "lipschitz_B2": lipschitz_estimate(vf, 2.0),
        "time_lipschitz": time_lipschitz_estimate(vf),
        "mass_drift": float(np.abs(W.sum(axis=1) - 1.0).max()),
    }
    return MFGSolution(vf, path, bundle, converged, it + 1, residuals, diagnostics)


def _w1_rowpair(grid, w1, w2):
    from .measure import wasserstein1

    return wasserstein1(GridMeasure(grid, w1, validate=False),
                        GridMeasure(grid, w2, validate=False))


# ---------------------------------------------------------------------------
# weak-form residual of the continuity equation


class SpaceTimeBump:
    """C-infinity bump psi(t, x) = chi(t) * phi(x), compactly supported."""

    def __init__(self, t_center, t_radius, x_center, x_radius, dim=1):
        self.tc, self.tr = float(t_center), float(t_radius)
        self.xc = np.atleast_1d(np.asarray(x_center, dtype=float))
        self.xr = float(x_radius)
        self.dim = dim

    @staticmethod
    def _bump(s):
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out

    @staticmethod
    def _bump_prime(s):
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2)
        return out

    def _xi(self, x):
        if self.dim == 1:
            return (np.asarray(x, dtype=float) - self.xc[0]) / self.xr
        return (np.asarray(x, dtype=float) - self.xc[None, :]) / self.xr

    def eval(self, t, x):
        st = np.asarray((t - self.tc) / self.tr, dtype=float)
        if self.dim == 1:
            return self._bump(st) * self._bump(self._xi(x))
        xi = self._xi(x)
        return self._bump(st) * self._bump(xi[:, 0]) * self._bump(xi[:, 1])

    def dt(self, t, x):
        st = np.asarray((t - self.tc) / self.tr, dtype=float)
        if self.dim == 1:
            return self._bump_prime(st) / self.tr * self._bump(self._xi(x))
        xi = self._xi(x)
        return self._bump_prime(st) / self.tr * self._bump(xi[:, 0]) * self._bump(xi[:, 1])

    def dx(self, t, x):
        st = np.asarray((t - self.tc) / self.tr, dtype=float)
        if self.dim == 1:
            return self._bump(st) * self._bump_prime(self._xi(x)) / self.xr
        xi = self._xi(x)
        gx = self._bump_prime(xi[:, 0]) / self.xr * self._bump(xi[:, 1])
        gy = self._bump(xi[:, 0]) * self._bump_prime(xi[:, 1]) / self.xr
        return self._bump(st) * np.stack([gx, gy], axis=-1)


def default_test_functions(grid, T, count=5):
    """Bumps staggered over (0, T) x interior of the box."""
    out = []
    mid = [(a + b) / 2 for a, b in zip(grid.lo, grid.hi)]
    halfwidth = min(b - a for a, b in zip(grid.lo, grid.hi)) / 2
    for j in range(count):
        tc = T * (j + 1.0) / (count + 1.0)
        tr = T * 0.9 / (count + 1.0) + 0.25 * T / count
        tr = min(tr, 0.49 * T)
        xc = mid if grid.dim == 2 else mid[0]
        xr = halfwidth * (0.55 + 0.08 * (j % 3))
        out.append(SpaceTimeBump(tc, min(tr, tc * 0.999, (T - tc) * 0.999),
                                 xc, xr, grid.dim))
    return out


def kfp_residual(solution, test_functions=None):
    """Weak residual of the continuity equation along the solved pair.

    For each test function psi the discrete transport identity

        sum_k dt sum_nodes m_k [d_t psi + <D psi, v*>] + boundary terms

    should vanish; the boundary terms use m(0) and m(T) and cancel exactly
    for psi compactly supported in (0, T).  v* is the stored feedback.
    Returns the max absolute residual over the dictionary.
    """
    path = solution.m_path
    vf = solution.u
    g = path.grid
    dt = g.dt
    T = float(path.times[-1])
    fns = test_functions or default_test_functions(g, T)
    K = len(path.times) - 1
    worst = 0.0
    for psi in fns:
        acc = 0.0
        for k in range(K):
            t = float(path.times[k])
            w = path.weights[k]
            sup = w > 1e-15
            if not sup.any():
                continue
            pts = g.points[sup]
            vstar = vf.velocity_at(k, pts)
            dpsi_t = psi.dt(t, pts)
            dpsi_x = psi.dx(t, pts)
            if g.dim == 1:
                integrand = dpsi_t + dpsi_x * vstar
            else:
                integrand = dpsi_t + (dpsi_x * vstar).sum(axis=-1)
            acc += dt * float(np.dot(w[sup], integrand))
        bdry = float(np.dot(path.weights[0], psi.eval(0.0, g.points))) - float(
            np.dot(path.weights[K], psi.eval(T, g.points))
        )
        worst = max(worst, abs(acc + bdry))
    return worst


# ---------------------------------------------------------------------------
# space-time energy pairing


def energy_estimate(solution, coupling, m_bar, R):
    """Space-time pairing of the coupling against the stationary measure.

        int_0^T int_{B_R} (F(x, m(t)) - F(x, m_bar)) d(m(t) - m_bar) dt

    Returns (total, per-time integrand array).  For monotone couplings the
    integrand is nonnegative up to float error.
    """
    path = solution.m_path
    g = path.grid
    mask = g.ball_mask(R)
    Fbar = coupling.values_on(g, m_bar)
    F = coupling.path_values(g, path.weights)
    dW = path.weights - m_bar.weights[None, :]
    dF = F - Fbar[None, :]
    integrand = (dF[:, mask] * dW[:, mask]).sum(axis=1)
    dt = g.dt
    total = float(integrand[:-1].sum() * dt)
    return total, integrand
