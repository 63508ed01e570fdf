"""Pointwise geometry of a cooriented hypersurface in (R^{2n}, J0).

Everything here is computed from the 2-jet of a chart.  The unit normal N is
fixed by det[N | oriented tangent basis] > 0, the Gauss map is G = N, and the
shape operator is A = dG expressed in a tangent basis (so the unit circle
has A = +1).  The almost contact structure induced by J0 is

    P(X) = J0 X - <J0 X, N> N,    zeta = -J0 N,    eta(X) = <J0 X, N>.

Batched helpers work on stacks of jets; the single-point operations below
them take (surface, p, s) with s = (chart_id, u).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .ambient import ROTATION, AmbientSpace, complete_unitary_frame
from .surface import ImmersedHypersurface, ImmersionError

IMMERSION_TOL = 1e-12
SKEW_WARN = 1e-6


@dataclass
class LocalGeometry:
    """Batched first- and second-order data at a stack of surface points."""

    q: np.ndarray       # (..., 2n)
    D: np.ndarray       # (..., 2n, 2n-1) chart derivative
    N: np.ndarray       # (..., 2n) cooriented unit normal
    dN: np.ndarray      # (..., 2n, 2n-1) chart derivative of N
    E: np.ndarray       # (..., 2n, 2n-1) orthonormalised D, same orientation
    R: np.ndarray       # (..., 2n-1, 2n-1) D = E R, positive diagonal
    A: np.ndarray       # (..., 2n-1, 2n-1) shape operator in the E basis
    P: np.ndarray       # (..., 2n-1, 2n-1) contact tensor in the E basis
    skew_residual: np.ndarray


def cofactor_normal(D: np.ndarray) -> np.ndarray:
    """Vector v with <v, w> = det[w | D]; orthogonal to the columns of D."""
    dim = D.shape[-2]
    return np.stack([(-1) ** i * np.linalg.det(np.delete(D, i, axis=-2)) for i in range(dim)],
                    axis=-1)


def unit_normal(D: np.ndarray, orientation, strict: bool = True) -> np.ndarray:
    v = cofactor_normal(D)
    norm = np.linalg.norm(v, axis=-1)
    bad = norm < IMMERSION_TOL
    if np.any(bad):
        if strict:
            raise ImmersionError("rank-deficient first derivative (not an immersion here)")
        norm = np.where(bad, np.nan, norm)
    return np.asarray(orientation)[..., None] * v / norm[..., None]


def oriented_qr(D: np.ndarray):
    E, R = np.linalg.qr(D)
    s = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    s = np.where(s == 0, 1.0, s)
    return E * s[..., None, :], R * s[..., :, None]


def local_geometry(space: AmbientSpace, q, D, H, orientation, strict: bool = True) -> LocalGeometry:
    N = unit_normal(D, orientation, strict)
    E, R = oriented_qr(D)
    Rinv = np.linalg.inv(R)
    # second fundamental form in chart coordinates; Weingarten: dN = -D (D^T D)^{-1} II
    II = np.einsum("...i,...ijk->...jk", N, H)
    RinvT = np.swapaxes(Rinv, -1, -2)
    A = -RinvT @ II @ Rinv
    skew = np.linalg.norm(A - np.swapaxes(A, -1, -2), axis=(-2, -1))
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    dN = -E @ (RinvT @ II)
    J0E = space.J0 @ E
    P = np.swapaxes(E, -1, -2) @ J0E
    return LocalGeometry(q, D, N, dN, E, R, A, P, skew)


def radial(q, D, p):
    """xi = (q - p)/|q - p|, lambda = 1/|q - p| and the chart derivative of xi."""
    r = q - p
    dist = np.linalg.norm(r, axis=-1)
    xi = r / dist[..., None]
    lam = 1.0 / dist
    proj = D - xi[..., :, None] * np.einsum("...i,...ij->...j", xi, D)[..., None, :]
    return xi, lam, lam[..., None, None] * proj


def geometry_at(surface: ImmersedHypersurface, s) -> LocalGeometry:
    chart_id, u = s
    c = surface.chart(chart_id)
    q, D, H = surface.eval_jet(chart_id, np.asarray(u, dtype=float))
    return local_geometry(surface.space, q, D, H, c.orientation)


@dataclass
class SurfacePointFrame:
    s: tuple
    q: np.ndarray
    tangent_basis: np.ndarray
    N: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    lam: float
    geometry: LocalGeometry

    @property
    def zeta_coords(self) -> np.ndarray:
        return self.tangent_basis.T @ self.zeta


def frame_at(surface: ImmersedHypersurface, p, s) -> SurfacePointFrame:
    g = geometry_at(surface, s)
    xi, lam, _ = radial(g.q, g.D, np.asarray(p, dtype=float))
    zeta = -surface.space.apply_J0(g.N)
    return SurfacePointFrame((s[0], np.asarray(s[1], dtype=float)), g.q, g.E, g.N, zeta, xi,
                             float(lam), g)


def shape_operator(surface, p, s) -> np.ndarray:
    return frame_at(surface, p, s).geometry.A


def contact_tensor(surface, p, s) -> np.ndarray:
    return frame_at(surface, p, s).geometry.P


def contact_form(surface, p, s, X) -> float:
    f = frame_at(surface, p, s)
    v = f.tangent_basis @ np.asarray(X, dtype=float)
    return float(np.dot(surface.space.apply_J0(v), f.N))


def K_poly(surface, p, s, t) -> float:
    g = frame_at(surface, p, s).geometry
    return float(np.linalg.det(g.A + t * g.P))


def branch_determinant(A, P, lam, branch):
    """det(A + branch * lambda * P); batched."""
    lam = np.asarray(lam, dtype=float)[..., None, None]
    br = np.asarray(branch, dtype=float)[..., None, None]
    return np.linalg.det(A + br * lam * P)


@dataclass
class AdaptedFrame:
    """Frames of the tangency computation at a point where xi = branch * J0 N.

    sphere_basis spans T_xi S^{2n-1} as (J0 xi, e1, J0 e1, ...); tangent_basis
    spans T_q Sigma as (branch * xi, e1, J0 e1, ...), positively oriented.
    """

    branch: int
    xi: np.ndarray
    sphere_basis: np.ndarray
    tangent_basis: np.ndarray
    A: np.ndarray
    P: np.ndarray
    C: np.ndarray          # matrix of branch * J0 : T_q Sigma -> T_xi S^{2n-1}


def adapted_frame_matrices(surface, p, s, branch: int) -> AdaptedFrame:
    """Shape operator and contact tensor in the unitary frame built on
    xi = branch * J0 N(q).  In this frame P = 0 (+) rotation blocks, for
    either branch; the branch sign sits in front of lambda * P instead."""
    space = surface.space
    f = frame_at(surface, p, s)
    g = f.geometry
    xi = branch * space.apply_J0(f.N)
    F = complete_unitary_frame(space, xi / np.linalg.norm(xi), tol=1e-10).columns
    T = np.column_stack([branch * F[:, 0], F[:, 2:]])
    TD = T.T @ g.D
    A = T.T @ g.dN @ np.linalg.inv(TD)
    A = 0.5 * (A + A.T)
    P = T.T @ space.J0 @ T
    C = F[:, 1:].T @ (branch * space.J0) @ T
    return AdaptedFrame(int(branch), xi, F[:, 1:], T, A, P, C)


def literal_C(n: int, branch: int) -> np.ndarray:
    """1 (+) branch * (rotation blocks), the matrix of +-J0 restricted to T Sigma."""
    return block_diag(np.eye(1), *([branch * ROTATION] * (n - 1)))


def literal_P(n: int) -> np.ndarray:
    return block_diag(np.zeros((1, 1)), *([ROTATION] * (n - 1)))
