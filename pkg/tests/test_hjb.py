"""Backward value solver against the closed-form Hopf-Lax solution.

With L = v^2/2, no coupling term, and terminal datum x^2/2 the exact value is
u(t, x) = x^2 / (2 (1 + T - t)), with optimal feedback v(t, x) = -x / (1 + T - t).
"""

import numpy as np
import pytest

import mfglab as M
from mfglab import errors, hjb


def grid1d(dx, lo=-4.0, hi=4.0, v_max=4.0):
    n = int(round((hi - lo) / dx)) + 1
    vn = int(round(2 * v_max / dx)) + 1
    return M.GridSpec((lo,), (hi,), (n,), dx, v_max, vn)


def quadratic_terminal():
    return M.TerminalDatum(lambda x: 0.5 * np.asarray(x, dtype=float) ** 2,
                           lip=4.0, c0=0.0)


def solve_hl(dx, T=1.0):
    g = grid1d(dx)
    vf = M.solve_backward(M.quadratic_kinetic(), None, quadratic_terminal(), g, T)
    return g, vf


def hl_error(g, vf, T=1.0, R=2.0):
    mask = g.ball_mask(R)
    worst = 0.0
    for k, t in enumerate(vf.times):
        exact = g.points ** 2 / (2.0 * (1.0 + T - t))
        worst = max(worst, float(np.abs(vf.values[k] - exact)[mask].max()))
    return worst


def test_hopf_lax_error_bound_and_order():
    errs = {}
    for dx in (0.04, 0.02):
        g, vf = solve_hl(dx)
        errs[dx] = hl_error(g, vf)
        assert errs[dx] <= 2.0 * (dx + dx)
    order = np.log2(errs[0.04] / errs[0.02])
    assert order >= 0.8


def test_hopf_lax_oracle_point_value():
    # min_y { (1 - y)^2/2 + y^2/2 } = 1/4 at y = 1/2
    g = grid1d(0.02)
    val = M.hopf_lax_oracle(quadratic_terminal(), 0.0, 1.0, 1.0, g)
    assert val == pytest.approx(0.25, abs=1e-10)


def test_solver_agrees_with_oracle():
    g, vf = solve_hl(0.02)
    for x in (-1.5, 0.3, 1.0):
        want = M.hopf_lax_oracle(quadratic_terminal(), 0.0, x, 1.0, g)
        got = float(np.interp(x, g.axes[0], vf.values[0]))
        assert got == pytest.approx(want, abs=2.0 * (0.02 + 0.02))


def test_terminal_slice_is_exact():
    g, vf = solve_hl(0.04)
    np.testing.assert_allclose(vf.values[-1], g.points ** 2 / 2, atol=1e-14)


def test_gradient_upwind():
    g, vf = solve_hl(0.02)
    gr = M.gradient(vf, 0)
    i = g.nearest_node(1.0)
    assert gr[i] == pytest.approx(0.5, abs=g.dx[0])  # exact Du(0, 1) = 1/(1+T)


def test_feedback_velocity():
    g, vf = solve_hl(0.02)
    v = vf.velocity_at(0, np.asarray([1.0]))
    assert v[0] == pytest.approx(-0.5, abs=0.05)  # exact -x/(1+T)


def test_comparison_principle():
    # raising the terminal datum raises the value everywhere
    g = grid1d(0.04)
    L = M.quadratic_kinetic()
    lo = quadratic_terminal()
    hi = M.TerminalDatum(lambda x: 0.5 * np.asarray(x, dtype=float) ** 2 + 0.3,
                         lip=4.0, c0=0.0)
    u_lo = M.solve_backward(L, None, lo, g, 1.0)
    u_hi = M.solve_backward(L, None, hi, g, 1.0)
    assert (u_hi.values >= u_lo.values - 1e-12).all()
    np.testing.assert_allclose(u_hi.values - u_lo.values, 0.3, atol=1e-12)


def test_lipschitz_estimates_stable_in_horizon(ri1, ergodic_sol):
    # frozen stationary coupling term, growing horizons: interior slopes settle
    erg, _ = ergodic_sol
    g = ri1.grid
    F = ri1.coupling.values_on(g, erg.m_bar)
    uf = M.TerminalDatum(lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0, 0.0)
    lips = []
    for T in (2.0, 4.0, 8.0):
        vf = M.solve_backward(ri1.L, F, uf, g, T)
        lips.append(M.lipschitz_estimate(vf, 2.0))
    spread = (max(lips) - min(lips)) / max(lips)
    assert spread <= 0.05
    assert all(np.isfinite(tl) and tl > 0 for tl in lips)


def test_time_lipschitz_bounded():
    g, vf = solve_hl(0.02)
    tl = M.time_lipschitz_estimate(vf)
    assert 0.0 < tl < 10.0


def test_minimizer_on_boundary_detected():
    g = grid1d(0.04, v_max=0.5)
    steep = M.TerminalDatum(lambda x: 5.0 * np.asarray(x, dtype=float), lip=5.0, c0=20.0)
    with pytest.raises(errors.MinimizerOnBoundary):
        M.solve_backward(M.quadratic_kinetic(), None, steep, g, 1.0)
    # the check can be disabled for diagnostic runs
    vf = M.solve_backward(M.quadratic_kinetic(), None, steep, g, 1.0,
                          check_boundary=False)
    assert np.isfinite(vf.values).all()


def test_terminal_datum_validation():
    g = grid1d(0.04)
    bad_lip = M.TerminalDatum(lambda x: 2.0 * np.asarray(x, dtype=float), lip=0.5, c0=10.0)
    with pytest.raises(errors.NotLipschitz):
        bad_lip.validate(g)
    bad_floor = M.TerminalDatum(lambda x: -np.ones_like(np.asarray(x, dtype=float)),
                                lip=0.0, c0=0.1)
    with pytest.raises(ValueError):
        bad_floor.validate(g)


def test_hj_residual_small_and_stable():
    vals = {}
    for dx in (0.04, 0.02):
        g, vf = solve_hl(dx)
        ks = [0, len(vf.times) // 2]
        vals[dx] = hjb.hj_residual(vf, M.quadratic_kinetic(), None, sample_ks=ks)
        assert vals[dx] <= 2.0 * (dx + dx)
    assert vals[0.02] <= vals[0.04] * 1.2 + 1e-12
