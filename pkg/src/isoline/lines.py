"""Signed enumeration of isotropic lines through a point.

A line through p is isotropic for Sigma when it touches Sigma at q = i(s)
in the characteristic direction, i.e. xi(s) = (q - p)/|q - p| equals
branch * J0 N(q) with branch = +-1.  Its sign is

    epsilon = sgn det(A_s + branch * lambda_s * P_s),   lambda_s = 1/|q - p|.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contact import branch_determinant, local_geometry, radial
from .solve import NewtonConfig, find_alignments, radial_map, rotated_gauss_map
from .surface import ImmersedHypersurface


class GeneralPositionError(RuntimeError):
    """The pair (p, Sigma) is not in general position; carries the report."""

    def __init__(self, message, report=None, records=None):
        super().__init__(message)
        self.report = report
        self.records = records


@dataclass(frozen=True)
class LineSearchConfig:
    seeds_per_axis: Optional[int] = None     # default 48 for n=1, 24 for n=2
    tol_newton: float = 1e-12
    max_newton_iters: int = 50
    dedupe_radius: float = 1e-6
    tol_gp: float = 1e-8

    def __post_init__(self):
        for name in ("tol_newton", "max_newton_iters", "dedupe_radius", "tol_gp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.seeds_per_axis is not None and self.seeds_per_axis < 1:
            raise ValueError("seeds_per_axis must be positive")

    def seeds_for(self, n: int) -> int:
        if self.seeds_per_axis is not None:
            return self.seeds_per_axis
        return 48 if n == 1 else 24

    def newton(self, n: int) -> NewtonConfig:
        return NewtonConfig(self.seeds_for(n), self.tol_newton, self.max_newton_iters,
                            dedupe_radius=self.dedupe_radius)


@dataclass(frozen=True)
class TangencyRecord:
    chart_id: int
    u: tuple
    q: tuple
    branch: int
    epsilon: int
    det_value: float
    residual: float
    N: tuple = field(repr=False, compare=False, default=())

    @property
    def s(self):
        return (self.chart_id, np.array(self.u))

    def direction(self, p) -> np.ndarray:
        d = np.asarray(self.q) - np.asarray(p)
        return d / np.linalg.norm(d)


@dataclass
class GeneralPositionReport:
    condition1: Optional[bool]        # None: skipped (embedding)
    condition2: bool
    condition3: bool
    min_abs_det: float
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.condition1 is not False and self.condition2 and self.condition3


def _records_from_alignments(surface, p, alignments) -> list[TangencyRecord]:
    out = []
    by_chart = {}
    for al in alignments:
        by_chart.setdefault(al.chart_id, []).append(al)
    for chart_id, group in by_chart.items():
        chart = surface.chart(chart_id)
        q, D, H = chart.jets(np.array([al.u for al in group]))
        g = local_geometry(surface.space, q, D, H, np.full(len(group), chart.orientation))
        _, lam, _ = radial(g.q, g.D, p)
        dets = branch_determinant(g.A, g.P, lam, np.array([al.sign for al in group]))
        for k, al in enumerate(group):
            det = float(dets[k])
            out.append(TangencyRecord(chart_id, tuple(float(x) for x in al.u),
                                      tuple(float(x) for x in q[k]), al.sign,
                                      1 if det > 0 else -1, det, al.residual,
                                      tuple(float(x) for x in g.N[k])))
    out.sort(key=lambda r: (r.branch, r.chart_id, r.u))
    return out


def find_isotropic_lines(surface: ImmersedHypersurface, p, config: LineSearchConfig = LineSearchConfig(),
                         strict: bool = True) -> list[TangencyRecord]:
    """All isotropic lines through p, signed and sorted by (branch, chart, u).

    With strict=True a general-position failure (|det| <= tol_gp, or two
    tangencies on one line) raises GeneralPositionError.
    """
    p = surface.space.check(p)
    surface.check_offsurface(p)
    cfg = config.newton(surface.n)
    # one solve yields both branches: xi = +J0N and xi = -J0N
    alignments = find_alignments(surface, radial_map(p), rotated_gauss_map(surface.space), cfg)
    records = _records_from_alignments(surface, p, alignments)
    if strict:
        report = check_general_position(surface, p, records, config)
        if not (report.condition2 and report.condition3):
            raise GeneralPositionError("general position violated: " + "; ".join(report.details),
                                       report, records)
    return records


def count_N(records) -> int:
    return int(sum(r.epsilon for r in records))


def self_intersections(surface: ImmersedHypersurface, samples: int = 2048):
    """Sampled self-crossings of a plane curve: [(u1, u2, point, |sin angle|)]."""
    if surface.n != 1 or len(surface.charts) != 1:
        return []
    c = surface.charts[0]
    # half-step offset keeps crossings at 'round' parameters off the vertices
    u = c.lo[0] + (c.hi[0] - c.lo[0]) * (np.arange(samples) + 0.5) / samples
    q, D, _ = c.jets(u[:, None])
    seg_a, seg_b = q, np.roll(q, -1, axis=0)
    out = []
    for i in range(samples):
        j = np.arange(i + 2, samples)
        if i == 0:
            j = j[:-1]
        if j.size == 0:
            continue
        p0, p1 = seg_a[i], seg_b[i]
        q0, q1 = seg_a[j], seg_b[j]
        d1 = p1 - p0
        d2 = q1 - q0
        den = d1[0] * d2[:, 1] - d1[1] * d2[:, 0]
        w = q0 - p0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[:, 0] * d2[:, 1] - w[:, 1] * d2[:, 0]) / den
            s = (w[:, 0] * d1[1] - w[:, 1] * d1[0]) / den
        hit = (den != 0) & (t >= 0) & (t < 1) & (s >= 0) & (s < 1)
        for k in np.flatnonzero(hit):
            jj = j[k]
            t1 = D[i, :, 0] / np.linalg.norm(D[i, :, 0])
            t2 = D[jj, :, 0] / np.linalg.norm(D[jj, :, 0])
            sin = abs(t1[0] * t2[1] - t1[1] * t2[0])
            out.append((u[i], u[jj], p0 + t[k] * d1, sin))
    return out


def check_general_position(surface: ImmersedHypersurface, p, records,
                           config: LineSearchConfig = LineSearchConfig()) -> GeneralPositionReport:
    details = []
    cond1 = None
    crossings = []
    if not surface.embedded:
        crossings = self_intersections(surface)
        cond1 = all(c[3] > 1e-3 for c in crossings)
        if not cond1:
            details.append("non-transversal self-intersection")

    p = np.asarray(p, dtype=float)
    cond2 = True
    if records:
        dirs = np.array([r.direction(p) for r in records])
        pairs = []
        for k in range(0, len(dirs), 1024):
            c = np.abs(np.abs(dirs[k:k + 1024] @ dirs.T) - 1.0) < 1e-12
            i, j = np.nonzero(c)
            i = i + k
            pairs += [(a, b) for a, b in zip(i.tolist(), j.tolist()) if a < b]
        if pairs:
            cond2 = False
            shown = ", ".join(f"({a}, {b})" for a, b in pairs[:5])
            more = f" and {len(pairs) - 5} more" if len(pairs) > 5 else ""
            details.append(f"records on a common line: {shown}{more}")
    scale = config.dedupe_radius * surface.diameter
    for r in records:
        for c in crossings:
            if np.linalg.norm(np.asarray(r.q) - c[2]) < max(scale, 1e-3 * surface.diameter):
                cond2 = False
                details.append(f"tangency at self-intersection {c[2].tolist()}")

    min_det = min((abs(r.det_value) for r in records), default=float("inf"))
    cond3 = min_det > config.tol_gp
    if not cond3:
        details.append(f"min |det(A +- lambda P)| = {min_det:.3e} <= tol_gp = {config.tol_gp:.1e}")
    return GeneralPositionReport(cond1, cond2, cond3, min_det, details)
