"""Polynomial holomorphic quadratic differentials ``phi = p(z) dz^2`` on the disk."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hyperbolic_disk import DiskGrid, ScalarField


@dataclass(frozen=True, eq=False)
class QuadDiff:
    """``phi = (sum_k coeffs[k] z^k) dz^2``, lowest degree first."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(a) for a in np.atleast_1d(np.asarray(self.coeffs, dtype=complex)))
        if not c:
            c = (0j,)
        if not all(np.isfinite(a) for a in c):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls) -> "QuadDiff":
        return cls((0j,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def p(self, z):
        """Evaluate the polynomial coefficient p(z)."""
        return np.polynomial.polynomial.polyval(np.asarray(z), np.asarray(self.coeffs))

    def scaled(self, s: complex) -> "QuadDiff":
        return QuadDiff(tuple(s * a for a in self.coeffs))

    def __add__(self, other: "QuadDiff") -> "QuadDiff":
        return combine(1.0, self, 1.0, other)

    def __sub__(self, other: "QuadDiff") -> "QuadDiff":
        return combine(1.0, self, -1.0, other)

    def __eq__(self, other):
        if not isinstance(other, QuadDiff):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return np.array_equal(_padded(self, n), _padded(other, n))

    def __hash__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        return hash(tuple(c))

    # JSON: array of [re, im] pairs
    def to_json(self) -> str:
        return json.dumps([[a.real, a.imag] for a in self.coeffs])

    @classmethod
    def from_json(cls, text) -> "QuadDiff":
        data = json.loads(text) if isinstance(text, str) else text
        if not isinstance(data, list) or not all(
            isinstance(pair, (list, tuple)) and len(pair) == 2 for pair in data
        ):
            raise ValueError("QuadDiff JSON must be an array of [re, im] pairs")
        return cls(tuple(complex(float(re), float(im)) for re, im in data))


def _padded(phi: QuadDiff, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    out[: len(phi.coeffs)] = phi.coeffs
    return out


def _z(node) -> np.ndarray:
    return np.asarray(node, dtype=complex)


def _weight(z):
    # (1 - |z|^2)^2 / 4 converts |p| into |phi|_h
    return (1.0 - np.abs(z) ** 2) ** 2 / 4.0


def eval_hnorm(phi: QuadDiff, node):
    """|phi|_h = |p(z)| (1 - |z|^2)^2 / 4 at euclidean disk point(s) ``node``."""
    z = _z(node)
    return np.abs(phi.p(z)) * _weight(z)


def c0_norm(phi: QuadDiff, grid: DiskGrid) -> float:
    return float(np.max(eval_hnorm(phi, grid.z)))


def combine(alpha: float, phi0: QuadDiff, beta: float, phi1: QuadDiff) -> QuadDiff:
    n = max(len(phi0.coeffs), len(phi1.coeffs))
    return QuadDiff(tuple(alpha * _padded(phi0, n) + beta * _padded(phi1, n)))


def pairing(phi: QuadDiff, psi: QuadDiff, node):
    """Real h-inner product Re(p conj(q)) (1 - |z|^2)^4 / 16.

    Satisfies d/dt |phi_t|_h^2 = 2 pairing(phi_t, phi1 - phi0) on a segment.
    """
    z = _z(node)
    return np.real(phi.p(z) * np.conj(psi.p(z))) * _weight(z) ** 2


def hnorm_sq_field(phi: QuadDiff, grid: DiskGrid) -> ScalarField:
    return ScalarField(grid, eval_hnorm(phi, grid.z) ** 2)


def pairing_field(phi: QuadDiff, psi: QuadDiff, grid: DiskGrid) -> ScalarField:
    return ScalarField(grid, pairing(phi, psi, grid.z))


def random_quad_diff(rng: np.random.Generator, max_degree: int = 6) -> QuadDiff:
    """Degree uniform in 0..max_degree, coefficients uniform in the unit ball of C^(d+1)."""
    d = int(rng.integers(0, max_degree + 1))
    dim = 2 * (d + 1)
    x = rng.standard_normal(dim)
    x *= rng.random() ** (1.0 / dim) / np.linalg.norm(x)
    return QuadDiff(tuple(x[0::2] + 1j * x[1::2]))


def rescaled(phi: QuadDiff, grid: DiskGrid, target: float) -> QuadDiff:
    """phi scaled by a positive real so that its grid C0 norm equals ``target``
    (to rounding, never below it)."""
    n = c0_norm(phi, grid)
    if n == 0:
        raise ValueError("cannot rescale the zero differential")
    s = target / n
    out = phi.scaled(s)
    # round up so the computed norm is never an ulp short of the target
    while c0_norm(out, grid) < target:
        s = np.nextafter(s, np.inf)
        out = phi.scaled(s)
    return out


def random_at_norm(rng: np.random.Generator, grid: DiskGrid, target: float,
                   max_degree: int = 6) -> QuadDiff:
    while True:
        phi = random_quad_diff(rng, max_degree)
        if c0_norm(phi, grid) > 1e-8:
            return rescaled(phi, grid, target)
