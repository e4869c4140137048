"""Geodesic-polar discretization of the Poincare disk.

The disk carries the curvature -1 metric ``h = drho^2 + sinh(rho)^2 dtheta^2``
(equivalently ``4 |dz|^2 / (1 - |z|^2)^2`` with ``z = tanh(rho/2) e^{i theta}``).
Nodes are a center node followed by ``n_rho`` rings of ``n_theta`` nodes, the
last ring being the truncation rim ``rho = rho_max``. Flat node index of
ring ``i`` (1-based), angle ``j`` is ``1 + (i - 1) * n_theta + j``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._io import atomic_open
from .errors import LinearSolveFailure, NonCoercive

LINEAR_RTOL = 1e-10


@dataclass(frozen=True)
class DiskGrid:
    n_rho: int
    n_theta: int
    rho_max: float = 8.0

    def __post_init__(self):
        if int(self.n_rho) != self.n_rho or int(self.n_theta) != self.n_theta:
            raise ValueError("grid sizes must be integers")
        if self.n_rho < 8 or self.n_theta < 8:
            raise ValueError(f"need n_rho >= 8 and n_theta >= 8, got {self.n_rho}, {self.n_theta}")
        if self.n_theta % 2:
            raise ValueError(f"n_theta must be even, got {self.n_theta}")
        if not (self.rho_max > 0 and np.isfinite(self.rho_max)):
            raise ValueError(f"rho_max must be positive, got {self.rho_max}")

    # ---- sizes -------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return 1 + self.n_rho * self.n_theta

    @property
    def n_interior(self) -> int:
        """Center plus rings 1..n_rho-1; the rim ring is stored last."""
        return self.n_nodes - self.n_theta

    @property
    def d_rho(self) -> float:
        return self.rho_max / self.n_rho

    @property
    def d_theta(self) -> float:
        return 2 * np.pi / self.n_theta

    # ---- coordinate tables ------------------------------------------
    @cached_property
    def radii(self) -> np.ndarray:
        """Ring radii rho_i, i = 1..n_rho."""
        return self.d_rho * np.arange(1, self.n_rho + 1)

    @cached_property
    def angles(self) -> np.ndarray:
        return self.d_theta * np.arange(self.n_theta)

    @cached_property
    def rho(self) -> np.ndarray:
        return np.concatenate([[0.0], np.repeat(self.radii, self.n_theta)])

    @cached_property
    def theta(self) -> np.ndarray:
        return np.concatenate([[0.0], np.tile(self.angles, self.n_rho)])

    @cached_property
    def z(self) -> np.ndarray:
        """Euclidean disk coordinate of every node."""
        return np.tanh(self.rho / 2) * np.exp(1j * self.theta)

    @cached_property
    def sinh_rho(self) -> np.ndarray:
        return np.sinh(self.radii)

    @cached_property
    def coth_rho(self) -> np.ndarray:
        return 1.0 / np.tanh(self.radii)

    @cached_property
    def rim(self) -> slice:
        return slice(self.n_interior, self.n_nodes)

    @cached_property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.rim] = False
        return mask

    def index(self, i: int, j: int) -> int:
        """Flat index of ring i (1..n_rho), angle j (taken mod n_theta)."""
        if i == 0:
            return 0
        return 1 + (i - 1) * self.n_theta + (j % self.n_theta)

    def rings(self, values: np.ndarray) -> np.ndarray:
        """View of node values as an (n_rho, n_theta) array (center dropped)."""
        return np.asarray(values)[1:].reshape(self.n_rho, self.n_theta)

    def refined(self) -> "DiskGrid":
        return DiskGrid(2 * self.n_rho, 2 * self.n_theta, self.rho_max)

    def coarse_nodes_in(self, fine: "DiskGrid") -> np.ndarray:
        """Indices into ``fine`` of the nodes coinciding with this grid's nodes."""
        ri, rj = fine.n_rho // self.n_rho, fine.n_theta // self.n_theta
        if (fine.rho_max != self.rho_max or ri * self.n_rho != fine.n_rho
                or rj * self.n_theta != fine.n_theta):
            raise ValueError("grids are not nested")
        i = np.repeat(np.arange(1, self.n_rho + 1) * ri, self.n_theta)
        j = np.tile(np.arange(self.n_theta) * rj, self.n_rho)
        return np.concatenate([[0], 1 + (i - 1) * fine.n_theta + j])

    # ---- operators ---------------------------------------------------
    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse Delta^h on all nodes; rim rows are empty."""
        nr, nt, h, dt = self.n_rho, self.n_theta, self.d_rho, self.d_theta
        rows, cols, vals = [], [], []

        # center: 4 (ring-1 average - u0) / h^2
        rows.append(np.zeros(nt + 1, dtype=int))
        cols.append(np.arange(nt + 1))
        vals.append(np.concatenate([[-4.0 / h**2], np.full(nt, 4.0 / (h**2 * nt))]))

        i = np.repeat(np.arange(1, nr), nt)
        j = np.tile(np.arange(nt), nr - 1)
        me = 1 + (i - 1) * nt + j
        rho = i * h
        coth = 1.0 / np.tanh(rho)
        ang = 1.0 / (np.sinh(rho) ** 2 * dt**2)
        outer = 1 + i * nt + j
        inner = np.where(i == 1, 0, 1 + (i - 2) * nt + j)
        plus = 1 + (i - 1) * nt + (j + 1) % nt
        minus = 1 + (i - 1) * nt + (j - 1) % nt
        rows += [me] * 5
        cols += [me, outer, inner, plus, minus]
        vals += [
            -2.0 / h**2 - 2.0 * ang,
            1.0 / h**2 + coth / (2 * h),
            1.0 / h**2 - coth / (2 * h),
            ang,
            ang,
        ]
        L = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_nodes, self.n_nodes),
        )
        return L.tocsr()

    @cached_property
    def _interior_blocks(self):
        L = self.laplacian_matrix
        n = self.n_interior
        return L[:n, :n].tocsc(), L[:n, n:].tocsr()


def build_grid(n_rho: int, n_theta: int, rho_max: float) -> DiskGrid:
    return DiskGrid(n_rho, n_theta, rho_max)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: DiskGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: DiskGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    @classmethod
    def from_function(cls, grid: DiskGrid, fn) -> "ScalarField":
        """Sample ``fn(rho, theta)`` (vectorized) at every node."""
        return cls(grid, np.broadcast_to(fn(grid.rho, grid.theta), (grid.n_nodes,)))

    @property
    def center(self) -> float:
        return float(self.values[0])

    @property
    def rim_values(self) -> np.ndarray:
        return self.values[self.grid.rim]

    def rings(self) -> np.ndarray:
        return self.grid.rings(self.values)

    def with_rim(self, rim_values) -> "ScalarField":
        v = self.values.copy()
        v[self.grid.rim] = rim_values
        return ScalarField(self.grid, v)


def _values(x, grid: DiskGrid) -> np.ndarray:
    if isinstance(x, ScalarField):
        if x.grid != grid:
            raise ValueError("fields live on different grids")
        return x.values
    return np.broadcast_to(np.asarray(x, dtype=float), (grid.n_nodes,))


def laplacian_h(u: ScalarField) -> ScalarField:
    """Second-order Delta^h at interior nodes; rim entries are left at zero."""
    return ScalarField(u.grid, u.grid.laplacian_matrix @ u.values)


class HelmholtzOperator:
    """Factorized Dirichlet problem ``(Delta^h - c) v = rhs`` for a fixed ``c``.

    Factorizing once lets the monotone iteration reuse the LU factors.
    """

    def __init__(self, grid: DiskGrid, c):
        self.grid = grid
        n = grid.n_interior
        cv = np.array(_values(c, grid), dtype=float)
        cmin = cv[:n].min()
        if not cmin > 0:
            raise NonCoercive(f"screening coefficient has min {cmin:.3e} <= 0")
        self.c = cv
        A_II, A_IB = grid._interior_blocks
        self._A = (A_II - sp.diags(cv[:n])).tocsc()
        self._A_IB = A_IB
        try:
            self._lu = spla.splu(self._A)
        except RuntimeError as exc:  # singular factor
            raise LinearSolveFailure(str(exc)) from exc

    def solve(self, rhs, boundary) -> ScalarField:
        g = self.grid
        n = g.n_interior
        bvals = _values(boundary, g)[g.rim]
        b = _values(rhs, g)[:n] - self._A_IB @ bvals
        x = self._lu.solve(b)
        bnorm = np.linalg.norm(b)
        for _ in range(3):
            r = b - self._A @ x
            if np.linalg.norm(r) <= LINEAR_RTOL * bnorm:
                break
            x = x + self._lu.solve(r)
        else:
            raise LinearSolveFailure(
                f"relative residual {np.linalg.norm(r) / bnorm:.2e} above {LINEAR_RTOL:g}"
            )
        return ScalarField(g, np.concatenate([x, bvals]))

    def apply(self, v: ScalarField) -> ScalarField:
        """(Delta^h - c) v at interior nodes, zero on the rim."""
        out = self.grid.laplacian_matrix @ v.values - self.c * v.values
        out[self.grid.rim] = 0.0
        return ScalarField(self.grid, out)


def helmholtz_solve(c, rhs, boundary, grid: DiskGrid | None = None) -> ScalarField:
    """Solve ``(Delta^h - c) v = rhs`` with Dirichlet data ``boundary`` on the rim.

    Arguments may be ScalarFields, arrays or scalars; ``grid`` is needed only
    when none of them is a ScalarField. Raises NonCoercive when ``min c <= 0``
    at an interior node and LinearSolveFailure when the relative residual
    stays above 1e-10.
    """
    if grid is None:
        grid = next((x.grid for x in (c, rhs, boundary) if isinstance(x, ScalarField)), None)
    if grid is None:
        raise TypeError("pass grid= when no argument is a ScalarField")
    return HelmholtzOperator(grid, c).solve(rhs, boundary)


def sup_norm(u: ScalarField) -> float:
    return float(np.max(np.abs(u.values)))


# ---- serialization ---------------------------------------------------

def field_rows(u: ScalarField):
    g = u.grid
    return zip(g.rho, g.theta, u.values)


def write_field_csv(u: ScalarField, path) -> None:
    with atomic_open(path, newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rho", "theta", "value"])
        for r, t, v in field_rows(u):
            w.writerow([f"{r:.17g}", f"{t:.17g}", f"{v:.17g}"])


def read_field_csv(path) -> ScalarField:
    """Read a field written by :func:`write_field_csv`, rebuilding its grid."""
    data = np.genfromtxt(Path(path), delimiter=",", names=True)
    rho, values = np.atleast_1d(data["rho"]), np.atleast_1d(data["value"])
    n_theta = int(np.count_nonzero(rho == rho[1]))
    n_rho = (len(rho) - 1) // n_theta
    grid = DiskGrid(n_rho, n_theta, float(rho.max()))
    if not np.allclose(rho, grid.rho, rtol=1e-12, atol=1e-12):
        raise ValueError(f"{path}: node layout does not match a DiskGrid")
    return ScalarField(grid, values)
