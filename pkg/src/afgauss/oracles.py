"""Independent reference solutions used to check the 2-D solver."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_bvp


def _coth_minus_inv(r):
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = r < 1e-3
    rs = r[small]
    out[small] = rs / 3 - rs**3 / 45
    rb = r[~small]
    out[~small] = 1 / np.tanh(rb) - 1 / rb
    return out


def radial_oracle(c: float, rho_max: float = 8.0, n_points: int = 4096, tol: float = 1e-10):
    """Collocation solution of the radial Gauss equation for phi = c dz^2.

        u'' + coth(rho) u' = -1 + e^{2u} + e^{-2u} c^2 sech^8(rho/2) / 16,

    u'(0) = 0 and u(rho_max) equal to the algebraic rim value. Returns a
    callable ``u(rho)``.
    """
    def source(r):
        return c**2 * np.cosh(r / 2) ** -8 / 16

    f_rim = source(rho_max)
    u_rim = 0.5 * np.log((1 + np.sqrt(1 - 4 * f_rim)) / 2)

    # coth(rho) = 1/rho + (coth(rho) - 1/rho); the 1/rho part goes in the singular term
    S = np.array([[0.0, 0.0], [0.0, -1.0]])

    def rhs(r, y):
        u, v = y
        G = -1 + np.exp(2 * u) + np.exp(-2 * u) * source(r)
        return np.vstack([v, G - _coth_minus_inv(r) * v])

    def bc(ya, yb):
        return np.array([ya[1], yb[0] - u_rim])

    r = np.linspace(0.0, rho_max, n_points)
    y0 = np.zeros((2, r.size))
    sol = solve_bvp(rhs, bc, r, y0, S=S, tol=tol, max_nodes=200_000)
    if not sol.success:
        raise RuntimeError(f"radial oracle failed: {sol.message}")
    return lambda rho: sol.sol(np.asarray(rho, dtype=float))[0]
