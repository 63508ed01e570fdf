"""Immersed closed hypersurfaces as chart atlases with 2-jet evaluation.

A chart maps a box u in R^{2n-1} (some axes periodic) into R^{2n} and
returns the 2-jet (q, D, H): the point, the 2n x (2n-1) first-derivative
matrix and the 2n x (2n-1) x (2n-1) array of second derivatives.  Shipped
scenarios get exact jets by symbolic differentiation; user charts can fall
back to central differences.

Overlapping charts carry a smooth partition of unity so that integrals over
S are sums of per-chart tensor-product quadratures.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp
from scipy import optimize

from .ambient import AmbientSpace

Jet = tuple[np.ndarray, np.ndarray, np.ndarray]


class SurfaceError(ValueError):
    pass


class ImmersionError(SurfaceError):
    """The first-derivative matrix is rank deficient at an evaluated point."""


class OffSurfaceError(SurfaceError):
    """The base point p lies on (or too close to) the hypersurface."""


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    periodic: bool = False

    @property
    def length(self) -> float:
        return self.hi - self.lo


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class Chart:
    id: int
    axes: tuple[Axis, ...]
    jet_fn: Callable[[np.ndarray], Jet] = field(repr=False)
    orientation: int = 1
    weight_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    # ambient point -> chart coordinates (nan where the chart does not reach)
    locate_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def periodic(self) -> np.ndarray:
        return np.array([a.periodic for a in self.axes])

    @property
    def lo(self) -> np.ndarray:
        return np.array([a.lo for a in self.axes])

    @property
    def hi(self) -> np.ndarray:
        return np.array([a.hi for a in self.axes])

    def wrap(self, u) -> np.ndarray:
        u = np.array(u, dtype=float)
        per = self.periodic
        if per.any():
            lo, span = self.lo[per], (self.hi - self.lo)[per]
            u[..., per] = lo + np.mod(u[..., per] - lo, span)
        return u

    def contains(self, u, margin: float = 0.0) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        per = self.periodic
        inside = (u >= self.lo - margin) & (u <= self.hi + margin)
        inside[..., per] = True
        return np.all(inside, axis=-1) & np.all(np.isfinite(u), axis=-1)

    def jets(self, u) -> Jet:
        return self.jet_fn(self.wrap(u))

    def weight(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.weight_fn is None:
            return np.ones(u.shape[:-1])
        return self.weight_fn(self.wrap(u))

    def locate(self, q) -> np.ndarray:
        if self.locate_fn is None:
            raise SurfaceError(f"chart {self.id} has no inverse map")
        return self.locate_fn(np.asarray(q, dtype=float))

    def grid(self, per_axis: int, kind: str = "quadrature"):
        """Tensor grid: trapezoid on periodic axes, Gauss-Legendre (or cell
        centres for kind='seeds') on bounded ones.  Returns (nodes, weights)."""
        pts, wts = [], []
        for ax in self.axes:
            if ax.periodic:
                x = ax.lo + ax.length * np.arange(per_axis) / per_axis
                w = np.full(per_axis, ax.length / per_axis)
            elif kind == "quadrature":
                x, w = np.polynomial.legendre.leggauss(per_axis)
                x = ax.lo + 0.5 * ax.length * (x + 1.0)
                w = 0.5 * ax.length * w
            else:
                x = ax.lo + ax.length * (np.arange(per_axis) + 0.5) / per_axis
                w = np.full(per_axis, ax.length / per_axis)
            pts.append(x)
            wts.append(w)
        mesh = np.meshgrid(*pts, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*wts, indexing="ij")
        weights = functools.reduce(np.multiply, [w.ravel() for w in wmesh])
        return nodes, weights

    def transformed(self, M: np.ndarray, b: np.ndarray) -> "Chart":
        Minv = np.linalg.inv(M)
        jet_fn = self.jet_fn

        def jets(u):
            q, D, H = jet_fn(u)
            return (q @ M.T + b, np.einsum("ij,...jk->...ik", M, D),
                    np.einsum("ij,...jkl->...ikl", M, H))

        locate = None
        if self.locate_fn is not None:
            inner = self.locate_fn
            locate = lambda q: inner((np.asarray(q) - b) @ Minv.T)  # noqa: E731
        return Chart(self.id, self.axes, jets, self.orientation, self.weight_fn, locate)

    @classmethod
    def from_point_map(cls, id: int, axes: Sequence[Axis], point_fn, orientation: int = 1,
                       weight_fn=None, locate_fn=None, rel_step: float = 1e-5) -> "Chart":
        """Chart whose jets come from central differences of a point map."""
        axes = tuple(axes)
        scale = np.array([a.length for a in axes])
        h1 = rel_step * scale
        h2 = 10.0 * rel_step * scale

        def jets(u):
            u = np.atleast_2d(np.asarray(u, dtype=float))
            q = point_fn(u)
            d = len(axes)
            cols, hess = [], np.empty(q.shape + (d, d))
            for i in range(d):
                e = np.zeros(d)
                e[i] = h1[i]
                cols.append((point_fn(u + e) - point_fn(u - e)) / (2 * h1[i]))
            for i in range(d):
                for j in range(i, d):
                    ei = np.zeros(d)
                    ej = np.zeros(d)
                    ei[i] = h2[i]
                    ej[j] = h2[j]
                    val = (point_fn(u + ei + ej) - point_fn(u + ei - ej)
                           - point_fn(u - ei + ej) + point_fn(u - ei - ej)) / (4 * h2[i] * h2[j])
                    hess[..., i, j] = val
                    hess[..., j, i] = val
            return q, np.stack(cols, axis=-1), hess

        return cls(id, axes, jets, orientation, weight_fn, locate_fn)


def symbolic_jets(u_syms: Sequence[sp.Symbol], exprs: Sequence[sp.Expr]):
    """Numeric 2-jet evaluator for the map u -> exprs(u), differentiated exactly."""
    d, m = len(u_syms), len(exprs)
    D = [[sp.diff(e, s) for s in u_syms] for e in exprs]
    upper = [(j, k) for j in range(d) for k in range(j, d)]
    H = [[sp.diff(D[i][j], u_syms[k]) for (j, k) in upper] for i in range(m)]
    flat = list(exprs) + [x for row in D for x in row] + [x for row in H for x in row]
    fn = sp.lambdify(list(u_syms), flat, modules="numpy", cse=True)
    iu = np.array(upper)

    def jets(u):
        u = np.asarray(u, dtype=float)
        shape = u.shape[:-1]
        vals = fn(*[u[..., i] for i in range(d)])
        arr = np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals], axis=-1)
        q = arr[..., :m]
        Dm = arr[..., m:m + m * d].reshape(shape + (m, d))
        hu = arr[..., m + m * d:].reshape(shape + (m, len(upper)))
        Hm = np.empty(shape + (m, d, d))
        Hm[..., iu[:, 0], iu[:, 1]] = hu
        Hm[..., iu[:, 1], iu[:, 0]] = hu
        return q, Dm, Hm

    return jets


@dataclass(frozen=True)
class ImmersedHypersurface:
    space: AmbientSpace
    charts: tuple[Chart, ...]
    name: str = "custom"
    embedded: bool = True
    center: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for c in self.charts:
            if c.dim != self.space.dim - 1:
                raise SurfaceError(f"chart {c.id} has dimension {c.dim}, expected {self.space.dim - 1}")

    @property
    def n(self) -> int:
        return self.space.n

    def chart(self, chart_id: int) -> Chart:
        for c in self.charts:
            if c.id == chart_id:
                return c
        raise SurfaceError(f"unknown chart id {chart_id!r}")

    def eval_jet(self, chart_id: int, u) -> Jet:
        c = self.chart(chart_id)
        u = np.asarray(u, dtype=float)
        if not np.all(c.contains(u)):
            raise SurfaceError(f"u={u} outside the domain of chart {chart_id}")
        single = u.ndim == 1
        q, D, H = c.jets(np.atleast_2d(u))
        if single:
            return q[0], D[0], H[0]
        return q, D, H

    def quadrature(self, per_axis: int):
        """[(chart, nodes, quad_weights, partition_weights)] per chart."""
        out = []
        for c in self.charts:
            nodes, w = c.grid(per_axis, "quadrature")
            out.append((c, nodes, w, c.weight(nodes)))
        return out

    def sample_points(self, per_axis: int = 24) -> np.ndarray:
        pts = []
        for c in self.charts:
            nodes, _ = c.grid(per_axis, "seeds")
            pts.append(c.jets(nodes)[0])
        return np.concatenate(pts)

    @functools.cached_property
    def diameter(self) -> float:
        pts = self.sample_points(16 if self.n > 1 else 256)
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))

    def distance_to(self, p) -> float:
        """Minimum distance from p to the surface: sampled, then polished."""
        p = self.space.check(p)
        best = np.inf
        per_axis = 256 if self.n == 1 else 20
        for c in self.charts:
            nodes, _ = c.grid(per_axis, "seeds")
            q = c.jets(nodes)[0]
            dist = np.linalg.norm(q - p, axis=-1)
            for k in np.argsort(dist)[:3]:
                def fun(u, c=c):
                    q, D, _ = c.jets(u[None])
                    r = q[0] - p
                    return r @ r, 2.0 * D[0].T @ r
                res = optimize.minimize(fun, nodes[k], jac=True, method="BFGS",
                                        options={"gtol": 1e-14, "maxiter": 200})
                best = min(best, dist[k], float(np.sqrt(max(res.fun, 0.0))))
        return best

    def check_offsurface(self, p, rel_tol: float = 1e-6) -> float:
        d = self.distance_to(p)
        if d <= rel_tol * self.diameter:
            raise OffSurfaceError(f"base point {np.asarray(p).tolist()} lies on the surface "
                                  f"(distance {d:.3g})")
        return d

    def transformed(self, M, b) -> "ImmersedHypersurface":
        """Image under the affine map x -> M x + b (det M > 0)."""
        M = np.asarray(M, dtype=float)
        b = np.asarray(b, dtype=float)
        if np.linalg.det(M) <= 0:
            raise SurfaceError("only orientation-preserving affine maps are supported")
        center = None if self.center is None else M @ self.center + b
        return ImmersedHypersurface(self.space, tuple(c.transformed(M, b) for c in self.charts),
                                    self.name, self.embedded, center)

    def scaled_about(self, point, factor: float) -> "ImmersedHypersurface":
        point = np.asarray(point, dtype=float)
        return self.transformed(factor * np.eye(self.space.dim), point - factor * point)


# ---------------------------------------------------------------------------
# scenario library

def _orientation_flag(chart_jets, u0, outward) -> int:
    _, D, _ = chart_jets(np.asarray(u0, dtype=float)[None])
    return 1 if np.linalg.det(np.column_stack([outward, D[0]])) > 0 else -1


@functools.lru_cache(maxsize=None)
def _unit_circle_jets():
    u = sp.Symbol("u")
    return symbolic_jets([u], [sp.cos(u), sp.sin(u)])


@functools.lru_cache(maxsize=None)
def _figure_eight_jets():
    u = sp.Symbol("u")
    return symbolic_jets([u], [sp.sin(u), sp.sin(u) * sp.cos(u)])


def _curve(name, jets, M, center, embedded=True, locate=None):
    c = Chart(0, (Axis(0.0, 2 * np.pi, True),), jets, 1, None, locate)
    surf = ImmersedHypersurface(AmbientSpace(1), (c,), name, embedded, np.zeros(2))
    return surf.transformed(M, center)


def _circle_locate(q):
    return np.mod(np.arctan2(q[..., 1], q[..., 0]), 2 * np.pi)[..., None]


S3_BAND = 0.1     # half-width of the overlap band in the last model coordinate
S3_BOX = 1.11     # stereographic box half-width; covers |x|^2 <= (1+band)/(1-band)


@functools.lru_cache(maxsize=None)
def _stereo_s3_jets(sign: int):
    # sign=-1: projection from the north pole (chart centred at the south pole)
    x = sp.symbols("x0:3")
    r2 = sum(xi**2 for xi in x)
    exprs = [2 * xi / (1 + r2) for xi in x] + [sign * (1 - r2) / (1 + r2)]
    return symbolic_jets(x, exprs)


def _unit_s3_charts() -> tuple[Chart, ...]:
    charts = []
    for cid, sign in ((0, -1), (1, 1)):
        jets = _stereo_s3_jets(sign)

        def weight(u, sign=sign):
            r2 = np.sum(u * u, axis=-1)
            w4 = sign * (1 - r2) / (1 + r2)
            return smooth_step((w4 * sign + S3_BAND) / (2 * S3_BAND))

        def locate(y, sign=sign):
            return y[..., :3] / (1.0 + sign * y[..., 3:4])

        flag = _orientation_flag(jets, np.zeros(3), np.array([0, 0, 0, sign], float))
        charts.append(Chart(cid, (Axis(-S3_BOX, S3_BOX),) * 3, jets, flag, weight, locate))
    return tuple(charts)


TUBE_POLAR = 0.3                 # main chart covers polar angle [0.3, pi - 0.3]
TUBE_BAND = (np.cos(0.9), np.cos(0.5))   # cap weight ramps up over this range of |y3|
TUBE_CAP_BOX = 0.5               # tan(0.45) < 0.5


@functools.lru_cache(maxsize=None)
def _tube_jets(R: float, r: float, kind: str):
    th = sp.Symbol("theta")
    if kind == "main":
        a, b = sp.symbols("phi psi")
        y = [sp.sin(a) * sp.cos(b), sp.sin(a) * sp.sin(b), sp.cos(a)]
    else:
        a, b = sp.symbols("a b")
        rho2 = a**2 + b**2
        s = 1 if kind == "north" else -1
        y = [2 * a / (1 + rho2), 2 * b / (1 + rho2), s * (1 - rho2) / (1 + rho2)]
    # core circle in the (x1, x2) plane, normal directions y1 and y2
    radial = R + r * y[0]
    exprs = [radial * sp.cos(th), r * y[1], radial * sp.sin(th), r * y[2]]
    return symbolic_jets([th, a, b], exprs)


def _tube_charts(R: float, r: float) -> tuple[Chart, ...]:
    def sphere_dir(q):
        th = np.arctan2(q[..., 2], q[..., 0])
        rad = np.hypot(q[..., 0], q[..., 2])
        y = np.stack([(rad - R) / r, q[..., 1] / r, q[..., 3] / r], axis=-1)
        return np.mod(th, 2 * np.pi), y

    def cap_weight(y3):
        return smooth_step((np.abs(y3) - TUBE_BAND[0]) / (TUBE_BAND[1] - TUBE_BAND[0]))

    def main_weight(u):
        return 1.0 - cap_weight(np.cos(u[..., 1]))

    def main_locate(q):
        th, y = sphere_dir(q)
        phi = np.arccos(np.clip(y[..., 2], -1, 1))
        psi = np.mod(np.arctan2(y[..., 1], y[..., 0]), 2 * np.pi)
        return np.stack([th, phi, psi], axis=-1)

    def cap(kind, s):
        def weight(u):
            rho2 = u[..., 1] ** 2 + u[..., 2] ** 2
            y3 = s * (1 - rho2) / (1 + rho2)
            return np.where(s * y3 > 0, cap_weight(y3), 0.0)

        def locate(q):
            th, y = sphere_dir(q)
            ab = y[..., :2] / (1.0 + s * y[..., 2:3])
            return np.concatenate([th[..., None], ab], axis=-1)

        return weight, locate

    def outward(u, kind):
        q, _, _ = _tube_jets(R, r, kind)(np.asarray(u, float)[None])
        th, y = sphere_dir(q[0])
        return np.array([y[0] * np.cos(th), y[1], y[0] * np.sin(th), y[2]])

    charts = []
    mj = _tube_jets(R, r, "main")
    u0 = np.array([0.0, np.pi / 2, 0.0])
    charts.append(Chart(0, (Axis(0, 2 * np.pi, True), Axis(TUBE_POLAR, np.pi - TUBE_POLAR),
                            Axis(0, 2 * np.pi, True)), mj,
                        _orientation_flag(mj, u0, outward(u0, "main")), main_weight, main_locate))
    for cid, kind, s in ((1, "north", 1), (2, "south", -1)):
        jets = _tube_jets(R, r, kind)
        weight, locate = cap(kind, s)
        u0 = np.zeros(3)
        charts.append(Chart(cid, (Axis(0, 2 * np.pi, True), Axis(-TUBE_CAP_BOX, TUBE_CAP_BOX),
                                  Axis(-TUBE_CAP_BOX, TUBE_CAP_BOX)), jets,
                            _orientation_flag(jets, u0, outward(u0, kind)), weight, locate))
    return tuple(charts)


SCENARIOS = ("circle", "ellipse", "figure_eight", "sphere3", "ellipsoid3", "tube_s1xs2")


def _positive(name, values):
    values = tuple(float(v) for v in values)
    if any(not np.isfinite(v) or v <= 0 for v in values):
        raise SurfaceError(f"{name} must be positive, got {values}")
    return values


@functools.lru_cache(maxsize=64)
def _make_scenario(name, radius, semi_axes, center, major_radius, minor_radius):
    if name in ("circle", "ellipse", "figure_eight"):
        c = np.zeros(2) if center is None else np.array(center, float)
        if c.shape != (2,):
            raise SurfaceError("center must have 2 coordinates")
        if name == "circle":
            (R,) = _positive("radius", [radius if radius is not None else 1.0])
            return _curve(name, _unit_circle_jets(), R * np.eye(2), c, locate=_circle_locate)
        axes = _positive("semi_axes", semi_axes if semi_axes is not None else
                         ((2.0, 1.0) if name == "ellipse" else (1.0, 1.0)))
        if len(axes) != 2:
            raise SurfaceError("semi_axes needs 2 values for a plane curve")
        M = np.diag(axes)
        if name == "ellipse":
            return _curve(name, _unit_circle_jets(), M, c, locate=_circle_locate)
        return _curve(name, _figure_eight_jets(), M, c, embedded=False)

    if name in ("sphere3", "ellipsoid3"):
        c = np.zeros(4) if center is None else np.array(center, float)
        if c.shape != (4,):
            raise SurfaceError("center must have 4 coordinates")
        if name == "sphere3":
            (R,) = _positive("radius", [radius if radius is not None else 1.0])
            M = R * np.eye(4)
        else:
            axes = _positive("semi_axes", semi_axes if semi_axes is not None else (1.0, 1.2, 0.8, 1.5))
            if len(axes) != 4:
                raise SurfaceError("semi_axes needs 4 values for ellipsoid3")
            M = np.diag(axes)
        base = ImmersedHypersurface(AmbientSpace(2), _unit_s3_charts(), name, True, np.zeros(4))
        return base.transformed(M, c)

    if name == "tube_s1xs2":
        R, r = _positive("tube radii", [major_radius if major_radius is not None else 2.0,
                                        minor_radius if minor_radius is not None else 0.5])
        if r >= R:
            raise SurfaceError(f"tube radius {r} must be smaller than the core radius {R}")
        c = np.zeros(4) if center is None else np.array(center, float)
        if c.shape != (4,):
            raise SurfaceError("center must have 4 coordinates")
        base = ImmersedHypersurface(AmbientSpace(2), _tube_charts(R, r), name, True, np.zeros(4))
        return base.transformed(np.eye(4), c)

    raise SurfaceError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


def make_scenario(name: str, radius=None, semi_axes=None, center=None,
                  major_radius=None, minor_radius=None) -> ImmersedHypersurface:
    """Build one of the shipped test geometries.

    circle/ellipse/figure_eight are counterclockwise curves in R^2; sphere3 and
    ellipsoid3 are affine images of the unit S^3 (two stereographic charts);
    tube_s1xs2 is the boundary of a tubular neighbourhood of a circle of
    radius major_radius in the (x1, x2)-plane of R^4.
    """
    tup = lambda v: None if v is None else tuple(float(x) for x in np.atleast_1d(v))  # noqa: E731
    return _make_scenario(name, radius, tup(semi_axes), tup(center), major_radius, minor_radius)


def partition_sum(surface: ImmersedHypersurface, q) -> np.ndarray:
    """Sum of chart weights at ambient points q (embedded scenarios)."""
    total = np.zeros(np.asarray(q).shape[:-1])
    for c in surface.charts:
        u = c.locate(q)
        ok = c.contains(u)
        w = np.zeros_like(total)
        if ok.any():
            w[ok] = c.weight(u[ok])
        total += w
    return total


# ---------------------------------------------------------------------------
# tabulated jets (records used as seeds / diagnostics only)

def write_jet_table(path, records) -> None:
    """records: iterable of (chart_id, u, q, D, H)."""
    lines = []
    for cid, u, q, D, H in records:
        d = len(u)
        iu = np.triu_indices(d)
        fields = [str(int(cid))]
        fields += [repr(float(x)) for x in np.ravel(u)]
        fields += [repr(float(x)) for x in np.ravel(q)]
        fields += [repr(float(x)) for x in np.ravel(D)]
        fields += [repr(float(x)) for x in np.asarray(H)[:, iu[0], iu[1]].ravel()]
        lines.append(" ".join(fields))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def read_jet_table(path, n: int):
    dim, d = 2 * n, 2 * n - 1
    iu = np.triu_indices(d)
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            vals = line.split()
            expected = 1 + d + dim + dim * d + dim * len(iu[0])
            if len(vals) != expected:
                raise SurfaceError(f"{path}:{lineno}: expected {expected} fields, got {len(vals)}")
            cid = int(vals[0])
            x = np.array([float(v) for v in vals[1:]])
            u, x = x[:d], x[d:]
            q, x = x[:dim], x[dim:]
            D, x = x[:dim * d].reshape(dim, d), x[dim * d:]
            H = np.empty((dim, d, d))
            up = x.reshape(dim, len(iu[0]))
            H[:, iu[0], iu[1]] = up
            H[:, iu[1], iu[0]] = up
            out.append((cid, u, q, D, H))
    return out
