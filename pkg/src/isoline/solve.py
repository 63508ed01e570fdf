"""Seeded Newton search for points where two sphere-valued maps are parallel.

Both the isotropic-line finder (xi parallel to J0 N) and signed preimage
counting (G or xi parallel to a fixed v) reduce to the same problem: find
all s in S with b(s) = +-a(s) for unit-vector maps a, b.  The residual
b - <a, b> a lies in the tangent space of the sphere at a(s); projected onto
an orthonormal basis of that space it is a square (2n-1)-dimensional system.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ambient import AmbientSpace, householder_complement
from .contact import LocalGeometry, local_geometry, radial
from .surface import Chart, ImmersedHypersurface


@dataclass(frozen=True)
class SphereMap:
    """A map S -> S^{2n-1} evaluated on batched local geometry.

    fn(geometry, p) -> (value (..., 2n), chart derivative (..., 2n, 2n-1)).
    """

    name: str
    fn: Callable[[LocalGeometry, Optional[np.ndarray]], tuple[np.ndarray, np.ndarray]]
    p: Optional[np.ndarray] = None

    def __call__(self, g: LocalGeometry):
        return self.fn(g, self.p)


def gauss_map() -> SphereMap:
    return SphereMap("G", lambda g, p: (g.N, g.dN))


def radial_map(p) -> SphereMap:
    def fn(g, p):
        xi, _, dxi = radial(g.q, g.D, p)
        return xi, dxi
    return SphereMap("xi", fn, np.asarray(p, dtype=float))


def rotated_gauss_map(space: AmbientSpace, sign: int = 1) -> SphereMap:
    """s -> sign * J0 N(s)."""
    J = sign * space.J0
    return SphereMap("+J0G" if sign > 0 else "-J0G",
                     lambda g, p: (g.N @ J.T, J @ g.dN))


def constant_map(v) -> SphereMap:
    v = np.asarray(v, dtype=float)

    def fn(g, p):
        shape = g.q.shape[:-1]
        return (np.broadcast_to(v, shape + v.shape).copy(),
                np.zeros(shape + g.D.shape[-2:]))
    return SphereMap("const", fn)


@dataclass(frozen=True)
class NewtonConfig:
    seeds_per_axis: int
    tol: float = 1e-12
    max_iters: int = 50
    max_step: float = 0.3
    max_stalls: int = 4
    dedupe_radius: float = 1e-6


@dataclass
class Alignment:
    """A converged point with b(s) = sign * a(s)."""

    chart_id: int
    u: np.ndarray
    q: np.ndarray
    N: np.ndarray
    sign: int
    residual: float


def _pair_residual(a, da, b, db):
    ab = np.sum(a * b, axis=-1)
    r = b - ab[..., None] * a
    aTdb = np.einsum("...i,...ij->...j", a, db)
    bTda = np.einsum("...i,...ij->...j", b, da)
    dr = db - a[..., :, None] * (aTdb + bTda)[..., None, :] - ab[..., None, None] * da
    return r, dr, ab


def _newton_chart(space, chart: Chart, amap: SphereMap, bmap: SphereMap, seeds, cfg: NewtonConfig):
    u = chart.wrap(seeds)
    m = len(u)
    active = np.ones(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)
    best = np.full(m, np.inf)
    stalls = np.zeros(m, dtype=int)
    margin = 1e-9
    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        q, D, H = chart.jets(u[idx])
        with np.errstate(invalid="ignore", divide="ignore"):
            g = local_geometry(space, q, D, H, np.full(idx.size, chart.orientation), strict=False)
            a, da = amap(g)
            b, db = bmap(g)
            r, dr, _ = _pair_residual(a, da, b, db)
        res = np.linalg.norm(r, axis=-1)
        done = res < cfg.tol
        converged[idx[done]] = True
        active[idx[done]] = False
        improved = res < 0.9 * best[idx]
        stalls[idx] = np.where(improved, 0, stalls[idx] + 1)
        best[idx] = np.minimum(best[idx], res)
        # wandering seeds: several Newton steps without progress
        dead = ~done & (~np.isfinite(res) | (stalls[idx] >= cfg.max_stalls))
        active[idx[dead]] = False
        work = ~done & ~dead
        if not work.any():
            continue
        widx = idx[work]
        B = householder_complement(a[work])
        F = np.einsum("...ij,...i->...j", B, r[work])
        J = np.swapaxes(B, -1, -2) @ dr[work]
        ok = np.isfinite(J).all(axis=(-2, -1)) & (np.abs(np.linalg.det(J)) > 1e-300)
        step = np.zeros_like(F)
        if ok.any():
            step[ok] = -np.linalg.solve(J[ok], F[ok][..., None])[..., 0]
        norm = np.max(np.abs(step), axis=-1)
        scale = np.where(norm > cfg.max_step, cfg.max_step / np.maximum(norm, 1e-300), 1.0)
        unew = chart.wrap(u[widx] + step * scale[:, None])
        inside = chart.contains(unew, margin)
        keep = ok & inside
        u[widx[keep]] = unew[keep]
        active[widx[~keep]] = False
    return u[converged]


def find_alignments(surface: ImmersedHypersurface, amap: SphereMap, bmap: SphereMap,
                    cfg: NewtonConfig) -> list[Alignment]:
    space = surface.space
    found = []
    for chart in surface.charts:
        seeds, _ = chart.grid(cfg.seeds_per_axis, "seeds")
        roots = _newton_chart(space, chart, amap, bmap, seeds, cfg)
        if len(roots) == 0:
            continue
        q, D, H = chart.jets(roots)
        g = local_geometry(space, q, D, H, np.full(len(roots), chart.orientation))
        a, _ = amap(g)
        b, _ = bmap(g)
        sign = np.where(np.sum(a * b, axis=-1) >= 0, 1, -1)
        resid = np.linalg.norm(b - sign[:, None] * a, axis=-1)
        for k in range(len(roots)):
            found.append(Alignment(chart.id, roots[k], q[k], g.N[k], int(sign[k]), float(resid[k])))
    return dedupe(found, cfg.dedupe_radius * surface.diameter)


def dedupe(items: list[Alignment], radius: float) -> list[Alignment]:
    """Greedy clustering by (sign, ambient point, normal); keeps the smallest residual."""
    if not items:
        return []
    q = np.array([a.q for a in items])
    N = np.array([a.N for a in items])
    sign = np.array([a.sign for a in items])
    res = np.array([a.residual for a in items])
    order = np.lexsort((np.arange(len(items)), res))
    taken = np.zeros(len(items), dtype=bool)
    out = []
    for k in order:
        if taken[k]:
            continue
        same = (~taken & (sign == sign[k])
                & (np.linalg.norm(q - q[k], axis=-1) < radius)
                & (np.linalg.norm(N - N[k], axis=-1) < 1e-6))
        taken |= same
        out.append(items[k])
    return out
