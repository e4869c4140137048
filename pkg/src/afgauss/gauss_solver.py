"""Solvers for the minimal-surface Gauss equation

    Delta^h u = -1 + e^{2u} + e^{-2u} |phi|_h^2

on the truncated disk, with algebraic-balance Dirichlet data on the rim.

Everything that takes ``phi`` also accepts a precomputed source field
``f`` (a ScalarField standing in for |phi|_h^2), which is how comparison
data that is not the norm of a holomorphic differential gets in.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    AFGaussError,
    ContinuationStalled,
    LineSearchStalled,
    MaxItersExceeded,
    MonotonicityViolated,
    NonCoercive,
    RimNormTooLarge,
)
from .hyperbolic_disk import DiskGrid, HelmholtzOperator, ScalarField, sup_norm
from .quad_diff import QuadDiff, hnorm_sq_field

log = logging.getLogger(__name__)


class Method(str, enum.Enum):
    MONOTONE = "monotone"
    NEWTON = "newton"
    CONTINUATION = "continuation"
    AUTO = "auto"


@dataclass(frozen=True)
class SolveParams:
    tolerance: float = 1e-9
    max_iters: int = 200
    method: Method = Method.AUTO
    continuation_steps: int = 10
    max_halvings: int = 30
    max_bisections: int = 6
    # pointwise increase tolerated between monotone iterates
    monotone_slack: float = 1e-9

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1 or self.continuation_steps < 1:
            raise ValueError("max_iters and continuation_steps must be >= 1")
        object.__setattr__(self, "method", Method(self.method))


@dataclass
class SolveResult:
    u: ScalarField
    residual_norm: float
    iterations: int
    shape_sup: float
    converged: bool
    method: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def grid(self) -> DiskGrid:
        return self.u.grid

    def summary(self) -> dict:
        return {
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "shape_sup": self.shape_sup,
            "converged": self.converged,
        }


def source_values(phi, grid: DiskGrid) -> np.ndarray:
    """Node values of |phi|_h^2 (or of a precomputed source field)."""
    if isinstance(phi, ScalarField):
        if phi.grid != grid:
            raise ValueError("source field lives on a different grid")
        return phi.values
    return hnorm_sq_field(phi, grid).values


def residual(u: ScalarField, phi) -> ScalarField:
    """F(u, phi) = Delta^h u + 1 - e^{2u} - e^{-2u}|phi|_h^2 at interior nodes, 0 on the rim."""
    g = u.grid
    f = source_values(phi, g)
    r = g.laplacian_matrix @ u.values + 1.0 - np.exp(2 * u.values) - np.exp(-2 * u.values) * f
    r[g.rim] = 0.0
    return ScalarField(g, r)


def linearize(u: ScalarField, phi) -> ScalarField:
    """Zeroth-order coefficient c = 2 e^{2u} (1 - e^{-4u} |phi|_h^2) of D_u F = Delta^h - c."""
    f = source_values(phi, u.grid)
    return ScalarField(u.grid, 2 * np.exp(2 * u.values) * (1 - np.exp(-4 * u.values) * f))


def algebraic_balance(f) -> np.ndarray:
    """Root u of 1 - e^{2u} - e^{-2u} f = 0 on the branch through u = 0 (needs f < 1/4)."""
    f = np.asarray(f, dtype=float)
    return 0.5 * np.log((1 + np.sqrt(1 - 4 * f)) / 2)


def boundary_value(phi, grid: DiskGrid) -> ScalarField:
    """Dirichlet data on the rim ring; interior entries are zero."""
    f = source_values(phi, grid)[grid.rim]
    if np.max(f) >= 0.25:
        raise RimNormTooLarge(f"|phi|_h reaches {np.sqrt(np.max(f)):.4g} >= 1/2 on the rim")
    v = np.zeros(grid.n_nodes)
    v[grid.rim] = algebraic_balance(f)
    return ScalarField(grid, v)


def shape_sup(u: ScalarField, phi) -> float:
    """Discrete sup of e^{-2u} |phi|_h."""
    f = source_values(phi, u.grid)
    return float(np.sqrt(np.max(np.exp(-4 * u.values) * f)))


def lambda_for_norm(c0: float) -> float:
    """Smallest lambda in (0, 1] with lambda / (1 + lambda^2) = c0; clamps to 1 for c0 >= 1/2."""
    if c0 <= 0:
        return 0.0
    if c0 >= 0.5:
        return 1.0
    return (1 - np.sqrt(1 - 4 * c0**2)) / (2 * c0)


def _result(u, phi, iterations, converged, method, history=None) -> SolveResult:
    return SolveResult(
        u=u,
        residual_norm=sup_norm(residual(u, phi)),
        iterations=iterations,
        shape_sup=shape_sup(u, phi),
        converged=converged,
        method=method,
        history=history or [],
    )


def monotone_solve(phi, grid: DiskGrid, params: SolveParams = SolveParams()) -> SolveResult:
    """Monotone iteration down from the supersolution u = 0.

    Each sweep solves (Delta^h - M) u_new = G(u) - M u with
    G(u) = -1 + e^{2u} + e^{-2u} f and M bounding |G'| on the order interval
    [-ln(1 + lam^2)/2, 0], so the iterates decrease pointwise.
    """
    f = source_values(phi, grid)
    c0 = float(np.sqrt(np.max(f)))
    lam = lambda_for_norm(c0)
    M = 2 + 2 * (1 + lam**2) * c0**2
    bc = boundary_value(phi, grid)
    op = HelmholtzOperator(grid, M)

    u = ScalarField.constant(grid, 0.0)
    history = [sup_norm(residual(u, phi))]
    for k in range(params.max_iters + 1):
        if history[-1] <= params.tolerance:
            return _result(u, phi, k, True, Method.MONOTONE.value, history)
        if k == params.max_iters:
            break
        G = -1 + np.exp(2 * u.values) + np.exp(-2 * u.values) * f
        u_new = op.solve(G - M * u.values, bc)
        rise = float(np.max(u_new.values - u.values))
        if rise > params.monotone_slack:
            raise MonotonicityViolated(f"iterate {k + 1} rose by {rise:.3e}")
        u = u_new
        history.append(sup_norm(residual(u, phi)))
    res = _result(u, phi, params.max_iters, False, Method.MONOTONE.value, history)
    raise MaxItersExceeded(
        f"monotone iteration stopped at residual {history[-1]:.3e} after {params.max_iters} sweeps",
        res,
    )


def default_initial_guess(phi, grid: DiskGrid) -> ScalarField:
    """Algebraic balance applied at every node (source clipped at 1/4)."""
    f = np.minimum(source_values(phi, grid), 0.25)
    return ScalarField(grid, algebraic_balance(f))


def newton_solve(phi, grid: DiskGrid, params: SolveParams = SolveParams(),
                 u_init: ScalarField | None = None) -> SolveResult:
    """Damped Newton iteration on F(., phi) with step halving."""
    bc = boundary_value(phi, grid)
    u0 = default_initial_guess(phi, grid) if u_init is None else u_init
    u = u0.with_rim(bc.rim_values)
    r = residual(u, phi)
    rn = sup_norm(r)
    history = [rn]
    for k in range(params.max_iters + 1):
        if rn <= params.tolerance:
            return _result(u, phi, k, True, Method.NEWTON.value, history)
        if k == params.max_iters:
            break
        c = linearize(u, phi)
        delta = HelmholtzOperator(grid, c).solve(-r.values, 0.0)  # raises NonCoercive
        step = 1.0
        for _ in range(params.max_halvings + 1):
            trial = ScalarField(grid, u.values + step * delta.values)
            rt = residual(trial, phi)
            rtn = sup_norm(rt)
            if rtn < rn:
                break
            step *= 0.5
        else:
            res = _result(u, phi, k, False, Method.NEWTON.value, history)
            raise LineSearchStalled(f"no decrease after {params.max_halvings} halvings at residual {rn:.3e}", res)
        u, r, rn = trial, rt, rtn
        history.append(rn)
    res = _result(u, phi, params.max_iters, False, Method.NEWTON.value, history)
    raise MaxItersExceeded(f"Newton stopped at residual {rn:.3e}", res)


def _scaled_source(phi, s: float):
    if isinstance(phi, ScalarField):
        return ScalarField(phi.grid, s * s * phi.values)
    return phi.scaled(s)


def continuation_solve(phi, grid: DiskGrid, params: SolveParams = SolveParams()) -> SolveResult:
    """Follow s -> s*phi from s = 0 to 1 with secant-predicted Newton corrections.

    A step counts as reached only if Newton converges with shape_sup < 1 (the
    discrete Omega_1). On failure the step is bisected ``max_bisections``
    times before giving up with ContinuationStalled.
    """
    n = params.continuation_steps
    s_prev, u_prev = 0.0, ScalarField.constant(grid, 0.0)
    s_old, u_old = None, None
    last = None
    total_iters = 0
    reached = [0.0]

    def attempt(s):
        if s_old is not None and s_prev > s_old:
            w = (s - s_prev) / (s_prev - s_old)
            guess = ScalarField(grid, u_prev.values + w * (u_prev.values - u_old.values))
        else:
            guess = u_prev
        res = newton_solve(_scaled_source(phi, s), grid, params, guess)
        if not res.shape_sup < 1.0:
            raise NonCoercive(f"solution at s={s:.6g} left Omega_1 (shape_sup {res.shape_sup:.4g})")
        return res

    targets = [k / n for k in range(1, n + 1)]
    for s in targets:
        try:
            res = attempt(s)
        except (AFGaussError, ValueError) as exc:
            lo, hi = s_prev, s
            for _ in range(params.max_bisections):
                mid = 0.5 * (lo + hi)
                try:
                    res = attempt(mid)
                except (AFGaussError, ValueError):
                    hi = mid
                    continue
                total_iters += res.iterations
                s_old, u_old = s_prev, u_prev
                s_prev, u_prev, last = mid, res.u, res
                reached.append(mid)
                lo = mid
            msg = f"continuation stalled at s*={s_prev:.6g} ({type(exc).__name__}: {exc})"
            log.info(msg)
            if last is not None:
                last = replace(last, iterations=total_iters, method=Method.CONTINUATION.value)
            raise ContinuationStalled(msg, s_prev, last, reached) from exc
        total_iters += res.iterations
        s_old, u_old = s_prev, u_prev
        s_prev, u_prev, last = s, res.u, res
        reached.append(s)
    return replace(last, iterations=total_iters, method=Method.CONTINUATION.value, history=reached)


def solve(phi, grid: DiskGrid, params: SolveParams = SolveParams(),
          u_init: ScalarField | None = None) -> SolveResult:
    """Dispatch on ``params.method``; AUTO uses Newton inside the ball of radius 1/2 and
    continuation outside it (or when Newton fails)."""
    m = params.method
    if m is Method.MONOTONE:
        return monotone_solve(phi, grid, params)
    if m is Method.NEWTON:
        return newton_solve(phi, grid, params, u_init)
    if m is Method.CONTINUATION:
        return continuation_solve(phi, grid, params)
    c0 = float(np.sqrt(np.max(source_values(phi, grid))))
    if c0 < 0.5 or u_init is not None:
        try:
            return newton_solve(phi, grid, params, u_init)
        except (NonCoercive, LineSearchStalled, MaxItersExceeded):
            pass
    return continuation_solve(phi, grid, params)


def refinement_error(phi: QuadDiff, grid: DiskGrid, params: SolveParams = SolveParams(),
                     coarse: SolveResult | None = None):
    """Estimate the discretization error of a solve by one grid refinement.

    Returns ``(eps, coarse_result, fine_result)`` with ``eps`` the sup over shared
    nodes of |u_h - u_{h/2}|.
    """
    if isinstance(phi, ScalarField):
        raise TypeError("refinement needs a QuadDiff, not a sampled source")
    coarse = coarse if coarse is not None else solve(phi, grid, params)
    fine_grid = grid.refined()
    fine = solve(phi, fine_grid, params)
    idx = grid.coarse_nodes_in(fine_grid)
    eps = float(np.max(np.abs(coarse.u.values - fine.u.values[idx])))
    return eps, coarse, fine
