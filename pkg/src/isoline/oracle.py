"""Brute-force cross-check for the isotropic line finder.

No Newton steps and no analytic shape operator: the misalignment
|xi - branch * J0 N|^2 is sampled on a dense grid with a QR null-space normal,
discrete local minima are refined by Levenberg-Marquardt with a
finite-difference Jacobian, and signs come from a finite-difference Gauss map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, optimize

from .surface import ImmersedHypersurface


@dataclass(frozen=True)
class OracleLine:
    chart_id: int
    u: np.ndarray
    q: np.ndarray
    branch: int
    epsilon: int
    det_value: float
    misalignment: float


def _null_normal(D, orientation):
    Q, _ = np.linalg.qr(D, mode="complete")
    N = Q[..., :, -1]
    d = np.linalg.det(np.concatenate([N[..., :, None], D], axis=-1))
    return N * (np.sign(d) * orientation)[..., None]


def _misfit(space, chart, u, p):
    """xi and J0 N at chart points; the branch-b misalignment is xi - b J0 N."""
    q, D, _ = chart.jets(u)
    N = _null_normal(D, chart.orientation)
    xi = q - p
    xi /= np.linalg.norm(xi, axis=-1, keepdims=True)
    return xi, space.apply_J0(N)


def _grid_field(space, chart, per_axis, p, chunk=60000):
    nodes, _ = chart.grid(per_axis, "seeds")
    out = np.empty((2, len(nodes)))
    for k in range(0, len(nodes), chunk):
        sl = slice(k, k + chunk)
        xi, jn = _misfit(space, chart, nodes[sl], p)
        for j, b in enumerate((1, -1)):
            out[j, sl] = np.sum((xi - b * jn) ** 2, axis=-1)
    return nodes, out.reshape((2,) + (per_axis,) * chart.dim)


def _refine(space, chart, u0, p, branch):
    """Levenberg-Marquardt on the unprojected 2n-vector xi - branch J0 N,
    Jacobian by finite differences."""
    def fun(u):
        xi, jn = _misfit(space, chart, u[None], p)
        return (xi - branch * jn)[0]

    res = optimize.least_squares(fun, u0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                 max_nfev=2000)
    return chart.wrap(res.x), float(np.linalg.norm(res.fun))


def _fd_sign(space, chart, u, p, branch, h=1e-5):
    q, D, _ = chart.jets(u[None])
    q, D = q[0], D[0]
    cols = []
    for k in range(chart.dim):
        e = np.zeros(chart.dim)
        e[k] = h
        Np = _null_normal(chart.jets((u + e)[None])[1], chart.orientation)[0]
        Nm = _null_normal(chart.jets((u - e)[None])[1], chart.orientation)[0]
        cols.append((Np - Nm) / (2 * h))
    dN = np.column_stack(cols)
    U, _, _ = np.linalg.svd(D, full_matrices=False)
    A = U.T @ dN @ np.linalg.inv(U.T @ D)
    P = U.T @ space.J0 @ U
    lam = 1.0 / np.linalg.norm(q - p)
    det = float(np.linalg.det(A + branch * lam * P))
    return q, det


def brute_force_lines(surface: ImmersedHypersurface, p, seeds_per_axis: int,
                      factor: int = 4, accept: float = 1e-7,
                      candidate_cap: float = 0.25) -> list[OracleLine]:
    space = surface.space
    p = np.asarray(p, dtype=float)
    per_axis = factor * seeds_per_axis
    found = []
    for chart in surface.charts:
        nodes, field = _grid_field(space, chart, per_axis, p)
        modes = ["wrap" if per else "nearest" for per in chart.periodic]
        for j, branch in enumerate((1, -1)):
            f = field[j]
            mins = (ndimage.minimum_filter(f, size=3, mode=modes) == f) & (f < candidate_cap)
            for flat in np.flatnonzero(mins.ravel()):
                u, val = _refine(space, chart, nodes[flat], p, branch)
                if val > accept or not chart.contains(u, 1e-9):
                    continue
                q, det = _fd_sign(space, chart, u, p, branch)
                found.append(OracleLine(chart.id, u, q, branch, 1 if det > 0 else -1, det, val))
    radius = 1e-5 * surface.diameter
    out = []
    for line in sorted(found, key=lambda x: x.misalignment):
        if not any(o.branch == line.branch and np.linalg.norm(o.q - line.q) < radius for o in out):
            out.append(line)
    out.sort(key=lambda x: (x.branch, tuple(np.round(x.q, 9))))
    return out


def match_records(oracle_lines, records, p, diameter, tol: float = 1e-5):
    """Pair oracle lines with Newton records; returns (matched, unmatched_oracle, unmatched_records)."""
    p = np.asarray(p, dtype=float)
    remaining = list(records)
    matched, lonely = [], []
    for line in oracle_lines:
        hit = None
        for r in remaining:
            if r.branch == line.branch and np.linalg.norm(np.asarray(r.q) - line.q) < tol * diameter:
                hit = r
                break
        if hit is None:
            lonely.append(line)
        else:
            remaining.remove(hit)
            matched.append((line, hit))
    return matched, lonely, remaining
