"""Stationary state of the reference instance.

The coupling is separable with profile f(x) = -exp(-x^2) and shape
G(s) = 2 + tanh(s), and the Lagrangian is purely kinetic.  The stationary
measure is then the point mass at the bottom of the well, the multiplier is
lambda = 2 - tanh(1), and the corrected value solves the one-dimensional
eikonal equation, integrable in closed form.  The demo solves the system
numerically and compares against all three.
"""

import numpy as np
from scipy.integrate import quad

import mfglab as M
from mfglab.instances import load_instance

LAMBDA_EXACT = 2.0 - np.tanh(1.0)


def u_exact(x):
    val, _ = quad(lambda s: np.sqrt(2 * LAMBDA_EXACT * (1 - np.exp(-s * s))),
                  0.0, abs(x))
    return val


def main():
    inst = load_instance("RI-1")
    g = inst.grid
    sol = M.solve_ergodic(inst.L, inst.coupling, g)

    print(f"lambda = {sol.lam!r}   exact 2 - tanh(1) = {float(LAMBDA_EXACT)!r}")
    print(f"stationary measure support: {len(sol.m_bar.support())} node(s) "
          f"at x = {g.points[sol.mather_node]}")
    for x in (0.5, 1.0, 2.0, 3.0):
        num = sol.u_bar[g.nearest_node(x)]
        print(f"u_bar({x}) = {num:.6f}   quadrature {u_exact(x):.6f}")

    print("residuals:", {k: f"{v:.2e}" for k, v in sol.residuals.items()})

    lhs, rhs = M.lambda_lipschitz_check(inst.L, inst.coupling, g,
                                        M.GridMeasure.dirac(g, 0.0),
                                        M.GridMeasure.uniform_on(g, -1.0, 1.0))
    print(f"multiplier stability bound: |d lambda| <= {lhs:.4f} <= lip2 * d1 = {rhs:.4f}")


if __name__ == "__main__":
    main()
