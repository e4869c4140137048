"""Reconstruction of the minimal immersion from (u, phi) by frame integration.

H^3 is the hyperboloid <X, X> = -1 in Minkowski space with signature
(+, +, +, -). Four-vectors are stored as (x1, x2, x3, x0) with the timelike
coordinate last, so the center of the disk maps to (0, 0, 0, 1).

Conventions: the second fundamental form is II = Re(p(z) dz^2), i.e. in the
euclidean basis (dx, dy)

    II = [[Re p, -Im p], [-Im p, -Re p]],

which makes det(g^{-1} II) = -(e^{-2u}|phi|_h)^2 consistent with the
Gauss equation solved for u. The unit normal N is chosen so that for
phi = dz^2 the x-direction at the origin has positive principal curvature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ._io import atomic_open
from .errors import DriftExceeded
from .hyperbolic_disk import DiskGrid, ScalarField
from .quad_diff import QuadDiff

ETA = np.array([1.0, 1.0, 1.0, -1.0])
FRAME_SIGNATURE = np.diag(ETA)
DRIFT_TOL = 1e-6
RENORM_TOL = 1e-8


def minkowski(a, b):
    return np.sum(a * b * ETA, axis=-1)


def _conformal(z):
    # lambda^2 in h = lambda^2 |dz|^2
    return 4.0 / (1.0 - np.abs(z) ** 2) ** 2


def second_fundamental_form(u, phi: QuadDiff, z):
    """II in the euclidean coordinate basis at disk point(s) z; independent of u."""
    p = phi.p(np.asarray(z, dtype=complex))
    out = np.empty(np.shape(p) + (2, 2))
    out[..., 0, 0] = p.real
    out[..., 0, 1] = out[..., 1, 0] = -p.imag
    out[..., 1, 1] = -p.real
    return out


def shape_operator(u, phi: QuadDiff, z):
    """A = g^{-1} II with g = e^{2u} 4/(1-|z|^2)^2 Id."""
    z = np.asarray(z, dtype=complex)
    g = np.exp(2 * np.asarray(u, dtype=float)) * _conformal(z)
    return second_fundamental_form(u, phi, z) / np.asarray(g)[..., None, None]


def normal_flow_metric(u: ScalarField, phi: QuadDiff, t: float) -> np.ndarray:
    """Metric g_t = g((cosh t + sinh t A) ., (cosh t + sinh t A) .) on the
    parallel surface at signed distance t, per node in the euclidean basis."""
    z = u.grid.z
    g = np.exp(2 * u.values) * _conformal(z)
    A = shape_operator(u.values, phi, z)
    M = np.cosh(t) * np.eye(2) + np.sinh(t) * A
    return g[:, None, None] * np.einsum("nki,nkj->nij", M, M)


# ---- frame integration -----------------------------------------------

@dataclass
class FrameField:
    """Positions and adapted frames at every node.

    ``E_rho`` and ``E_theta`` are the pushforwards of the coordinate fields
    d/drho, d/dtheta; at the center (where polar coordinates degenerate)
    they hold the pushforwards of d/dx, d/dy in normal coordinates instead.
    """

    grid: DiskGrid
    u: ScalarField
    phi: QuadDiff
    X: np.ndarray
    E_rho: np.ndarray
    E_theta: np.ndarray
    N: np.ndarray
    max_drift: float = 0.0

    def constraint_error(self) -> float:
        """Max violation of <X,X>=-1, <N,N>=1 and the orthogonality relations,
        each divided by the euclidean sizes of the vectors involved (the
        floating-point floor of a Minkowski product)."""
        X, N, E1, E2 = self.X, self.N, self.E_rho, self.E_theta

        def rel(a, b, target=0.0):
            size = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
            return np.abs(minkowski(a, b) - target) / np.maximum(size, 1.0)

        errs = [rel(X, X, -1), rel(N, N, 1), rel(X, N), rel(X, E1), rel(N, E1),
                rel(X, E2), rel(N, E2)]
        return float(max(e.max() for e in errs))


def _lagrange_weights(nodes, x):
    nodes = np.asarray(nodes, dtype=float)
    w = np.ones(len(nodes))
    for k in range(len(nodes)):
        for m in range(len(nodes)):
            if m != k:
                w[k] *= (x - nodes[m]) / (nodes[k] - nodes[m])
    return w


def _center_gradient(grid: DiskGrid, u: np.ndarray) -> np.ndarray:
    """Gradient of u at the center from the first Fourier mode of rings 1 and 2."""
    rings = grid.rings(u)
    c, s = np.cos(grid.angles), np.sin(grid.angles)
    g = []
    for i in (1, 2):
        r = i * grid.d_rho
        g.append(2 / (grid.n_theta * r) * np.array([rings[i - 1] @ c, rings[i - 1] @ s]))
    # the leading error is O(r^2): Richardson-combine the two rings
    return (4 * g[0] - g[1]) / 3


def _line_arrays(grid: DiskGrid, u: np.ndarray):
    """u and omega = u_theta / sinh(rho) along each full diameter.

    Row j holds values at line positions -1, 0, 1, ..., n_rho (in units of
    d_rho) along the ray theta_j, the negative side taken from the opposite ray.
    """
    nt = grid.n_theta
    rings = grid.rings(u)
    opp = (np.arange(nt) + nt // 2) % nt
    u_line = np.empty((nt, grid.n_rho + 2))
    u_line[:, 0] = rings[0, opp]
    u_line[:, 1] = u[0]
    u_line[:, 2:] = rings.T

    u_th = (np.roll(rings, -1, axis=1) - np.roll(rings, 1, axis=1)) / (2 * grid.d_theta)
    omega = u_th / grid.sinh_rho[:, None]
    gx, gy = _center_gradient(grid, u)
    th = grid.angles
    w_line = np.empty_like(u_line)
    w_line[:, 0] = -omega[0, opp]
    w_line[:, 1] = -gx * np.sin(th) + gy * np.cos(th)
    w_line[:, 2:] = omega.T
    return u_line, w_line


def _interp(line: np.ndarray, i: int, frac: float) -> np.ndarray:
    """Cubic interpolation at radial position i + frac (0 <= frac <= 1)."""
    last = line.shape[1] - 2  # position n_rho
    lo = min(i - 1, last - 3)
    pos = np.arange(lo, lo + 4)
    w = _lagrange_weights(pos, i + frac)
    return line[:, pos + 1] @ w


def _generator(phi: QuadDiff, theta: np.ndarray, rho: float, u: np.ndarray, omega: np.ndarray):
    """Structure matrix K with d/drho [T;S;N;X] = K [T;S;N;X] along each ray."""
    sigma = np.exp(u)
    z = np.tanh(rho / 2) * np.exp(1j * theta)
    q = phi.p(z) * np.exp(2j * theta)
    a = 0.5 / np.cosh(rho / 2) ** 2
    k1 = q.real * a**2 / sigma
    k2 = -q.imag * a / (2 * np.cosh(rho / 2) ** 2 * sigma)
    K = np.zeros((len(theta), 4, 4))
    K[:, 0, 1], K[:, 1, 0] = -omega, omega
    K[:, 0, 2], K[:, 2, 0] = k1, -k1
    K[:, 1, 2], K[:, 2, 1] = k2, -k2
    K[:, 0, 3] = K[:, 3, 0] = sigma
    return K


def _renormalize(F: np.ndarray) -> np.ndarray:
    """Minkowski Gram-Schmidt of the rows (T, S, N, X), X first."""
    T, S, N, X = (F[:, k].copy() for k in range(4))
    X /= np.sqrt(-minkowski(X, X))[:, None]
    out = [X]
    for v in (T, S, N):
        v = v + minkowski(v, X)[:, None] * X
        for e in out[1:]:
            v = v - minkowski(v, e)[:, None] * e
        v /= np.sqrt(minkowski(v, v))[:, None]
        out.append(v)
    X, T, S, N = out
    return np.stack([T, S, N, X], axis=1)


_GL = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)


def integrate_frame(u: ScalarField, phi: QuadDiff, renormalize: bool = True) -> FrameField:
    """Integrate the frame system outward along every ray from the center.

    Uses the fourth-order Magnus step
    exp(h/2 (K1 + K2) + sqrt(3)/12 h^2 [K2, K1]) at the Gauss points. The
    relative Minkowski drift is checked after every step; rays whose drift
    exceeds RENORM_TOL are Gram-Schmidt renormalized (unconditional
    renormalization only injects cancellation error, since the Magnus step
    stays in SO(3,1) to rounding), and drift above DRIFT_TOL is fatal.
    """
    grid = u.grid
    nt, nr, h = grid.n_theta, grid.n_rho, grid.d_rho
    th = grid.angles
    u_line, w_line = _line_arrays(grid, u.values)

    F = np.zeros((nt, 4, 4))
    F[:, 0, 0], F[:, 0, 1] = np.cos(th), np.sin(th)
    F[:, 1, 0], F[:, 1, 1] = -np.sin(th), np.cos(th)
    F[:, 2, 2] = 1.0
    F[:, 3, 3] = 1.0

    frames = np.empty((nr, nt, 4, 4))
    drift = 0.0
    for i in range(nr):
        Ks = []
        for c in _GL:
            Ks.append(_generator(phi, th, (i + c) * h, _interp(u_line, i, c), _interp(w_line, i, c)))
        K1, K2 = Ks
        Om = 0.5 * h * (K1 + K2) + (np.sqrt(3) / 12) * h**2 * (K2 @ K1 - K1 @ K2)
        F = expm(Om) @ F
        gram = np.einsum("nak,k,nbk->nab", F, ETA, F) - FRAME_SIGNATURE
        scale = 1 + np.abs(F).max(axis=(1, 2)) ** 2
        ray_drift = np.max(np.abs(gram) / scale[:, None, None], axis=(1, 2))
        step_drift = float(ray_drift.max())
        if step_drift > DRIFT_TOL:
            raise DriftExceeded(f"frame drift {step_drift:.2e} at ring {i + 1}")
        drift = max(drift, step_drift)
        bad = ray_drift > RENORM_TOL
        if renormalize and bad.any():
            F[bad] = _renormalize(F[bad])
        frames[i] = F

    sigma = np.exp(u.values)
    sig_r = grid.rings(sigma)
    n = grid.n_nodes
    X = np.empty((n, 4)); N = np.empty((n, 4)); E1 = np.empty((n, 4)); E2 = np.empty((n, 4))
    X[0] = (0, 0, 0, 1)
    N[0] = (0, 0, 1, 0)
    E1[0] = sigma[0] * np.array([1.0, 0, 0, 0])
    E2[0] = sigma[0] * np.array([0, 1.0, 0, 0])
    X[1:] = frames[:, :, 3].reshape(-1, 4)
    N[1:] = frames[:, :, 2].reshape(-1, 4)
    E1[1:] = (sig_r[:, :, None] * frames[:, :, 0]).reshape(-1, 4)
    E2[1:] = ((sig_r * grid.sinh_rho[:, None])[:, :, None] * frames[:, :, 1]).reshape(-1, 4)
    return FrameField(grid, u, phi, X, E1, E2, N, drift)


# ---- discrete diagnostics ----------------------------------------------

def _ring_array(grid: DiskGrid, V: np.ndarray) -> np.ndarray:
    """(n_rho + 1, n_theta, ...) with the center broadcast into row 0."""
    rings = V[1:].reshape((grid.n_rho, grid.n_theta) + V.shape[1:])
    center = np.broadcast_to(V[0], (1, grid.n_theta) + V.shape[1:])
    return np.concatenate([center, rings], axis=0)


def _d_rho(A, h):
    return (A[2:] - A[:-2]) / (2 * h)


def _d_theta(A, dt):
    return (np.roll(A, -1, axis=1) - np.roll(A, 1, axis=1)) / (2 * dt)


def induced_metric_error(frame: FrameField) -> float:
    """Relative sup error between the Gram matrix of centered differences of X
    and e^{2u} h, over rings 1..n_rho-1."""
    g = frame.grid
    X = _ring_array(g, frame.X)
    Xr = _d_rho(X, g.d_rho)
    Xt = _d_theta(X, g.d_theta)[1:-1]
    u = g.rings(frame.u.values)[:-1]
    s = g.sinh_rho[:-1, None]
    e2u = np.exp(2 * u)
    err_rr = np.abs(minkowski(Xr, Xr) / e2u - 1)
    err_tt = np.abs(minkowski(Xt, Xt) / (e2u * s**2) - 1)
    err_rt = np.abs(minkowski(Xr, Xt)) / (e2u * s)
    return float(max(err_rr.max(), err_tt.max(), err_rt.max()))


def recovered_hopf(frame: FrameField) -> np.ndarray:
    """p(z) recovered from second differences of X projected on N, rings 1..n_rho-1.

    Inverts II_rr = Re(q) a^2, II_rt = -Im(q) a b, II_tt = -Re(q) b^2 with
    q = p e^{2 i theta}, a = sech^2(rho/2)/2, b = tanh(rho/2).
    """
    g = frame.grid
    h, dt = g.d_rho, g.d_theta
    X = _ring_array(g, frame.X)
    N = frame.N[1:].reshape(g.n_rho, g.n_theta, 4)[:-1]
    Xrr = (X[2:] - 2 * X[1:-1] + X[:-2]) / h**2
    Xtt = (np.roll(X, -1, 1) - 2 * X + np.roll(X, 1, 1))[1:-1] / dt**2
    Xrt = _d_theta(_d_rho(X, h), dt)
    II_rr, II_rt, II_tt = minkowski(Xrr, N), minkowski(Xrt, N), minkowski(Xtt, N)
    rho = g.radii[:-1, None]
    a = 0.5 / np.cosh(rho / 2) ** 2
    b = np.tanh(rho / 2)
    q = 0.5 * (II_rr / a**2 - II_tt / b**2) - 1j * II_rt / (a * b)
    return q * np.exp(-2j * g.angles)[None, :]


def hopf_roundtrip_error(frame: FrameField, rho_min: float = 0.5) -> float:
    """sup |phi_hat - phi|_h over interior rings with rho >= rho_min.

    Near the center the polar mixed difference is divided by ab ~ rho/2 and
    loses an order, so the sup is taken away from a fixed neighbourhood.
    """
    g = frame.grid
    p_hat = recovered_hopf(frame)
    z = g.rings(g.z)[:-1]
    err = np.abs(p_hat - frame.phi.p(z)) * (1 - np.abs(z) ** 2) ** 2 / 4
    return float(np.max(err[g.radii[:-1] >= rho_min - 1e-12]))


def holonomy_defect(frame: FrameField) -> float:
    """Discrete mixed-partial closure error D_theta E_rho - D_rho E_theta.

    Measured in the local orthonormal frame and scaled by e^u cosh(rho), the
    size of d_rho d_theta X for a nearly flat disk.
    """
    g = frame.grid
    E1 = _ring_array(g, frame.E_rho)
    E2 = _ring_array(g, frame.E_theta)
    # E_theta vanishes at the center as a polar pushforward
    E2[0] = 0.0
    D = _d_theta(E1, g.d_theta)[1:-1] - _d_rho(E2, g.d_rho)
    sl = slice(1, g.n_nodes - g.n_theta)
    shape = (g.n_rho - 1, g.n_theta, 4)
    X = frame.X[sl].reshape(shape)
    N = frame.N[sl].reshape(shape)
    sig = np.exp(g.rings(frame.u.values)[:-1])
    s = g.sinh_rho[:-1, None]
    T = frame.E_rho[sl].reshape(shape) / sig[..., None]
    S = frame.E_theta[sl].reshape(shape) / (sig * s)[..., None]
    comps = np.stack([minkowski(D, T), minkowski(D, S), minkowski(D, N), minkowski(D, X)], axis=-1)
    scale = sig * np.cosh(g.radii[:-1, None])
    return float(np.max(np.linalg.norm(comps, axis=-1) / scale))


# ---- export ------------------------------------------------------------

@dataclass
class MeshOutput:
    vertices: np.ndarray
    faces: np.ndarray


def to_ball(X: np.ndarray) -> np.ndarray:
    """Hyperboloid to Poincare ball: (x1, x2, x3) / (1 + x0)."""
    return X[:, :3] / (1 + X[:, 3:4])


def mesh_faces(grid: DiskGrid) -> np.ndarray:
    nt = grid.n_theta
    j = np.arange(nt)
    jn = (j + 1) % nt
    faces = [np.stack([np.zeros(nt, dtype=int), 1 + j, 1 + jn], axis=1)]
    for i in range(1, grid.n_rho):
        a = 1 + (i - 1) * nt + j
        b = 1 + (i - 1) * nt + jn
        c = 1 + i * nt + jn
        d = 1 + i * nt + j
        faces.append(np.stack([a, d, c], axis=1))
        faces.append(np.stack([a, c, b], axis=1))
    return np.concatenate(faces)


def export_mesh(frame: FrameField, path, header: str | None = None) -> MeshOutput:
    """Write an OBJ mesh of the surface in the Poincare ball model."""
    mesh = MeshOutput(to_ball(frame.X), mesh_faces(frame.grid))
    with atomic_open(path) as fh:
        if header:
            fh.write(f"# {header}\n")
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.faces + 1:
            fh.write(f"f {f[0]} {f[1]} {f[2]}\n")
    return mesh


def write_frame_csv(frame: FrameField, path) -> None:
    g = frame.grid
    with atomic_open(path, newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rho", "theta", "x0", "x1", "x2", "x3"])
        for r, t, x in zip(g.rho, g.theta, frame.X):
            w.writerow([f"{v:.17g}" for v in (r, t, x[3], x[0], x[1], x[2])])
