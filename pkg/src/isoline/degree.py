"""Degrees of sphere-valued maps on S, three ways, and the intersection identities.

ind(Sigma) = deg G and ind_p(Sigma) = deg xi are computed by

* signed preimage counting of a regular value v,
* quadrature of the pulled-back normalised volume form of S^{2n-1},
* Morse counting for a height function (G only).

The block-determinant check and the integral identity for the signed line
count live here as well since they are statements about the same maps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm as normal_dist, qmc

from .contact import adapted_frame_matrices, branch_determinant, frame_at, literal_C, local_geometry
from .lines import LineSearchConfig, TangencyRecord
from .solve import (SphereMap, constant_map, find_alignments, gauss_map, radial_map,
                    rotated_gauss_map)
from .surface import ImmersedHypersurface

METHODS = ("preimage", "quadrature", "morse")


class DegreeError(RuntimeError):
    pass


class RegularValueNotFound(DegreeError):
    pass


class QuadratureResolutionError(DegreeError):
    def __init__(self, message, raw):
        super().__init__(message)
        self.raw = raw


class MethodDisagreement(DegreeError):
    def __init__(self, message, estimates):
        super().__init__(message)
        self.estimates = estimates


@dataclass(frozen=True)
class DegreeConfig:
    seeds_per_axis: Optional[int] = None
    grid: Optional[int] = None             # default 256 nodes (n=1), 32 per axis (n=2)
    tol_reg: float = 1e-6
    max_retries: int = 20
    tol_newton: float = 1e-12

    def grid_for(self, n: int) -> int:
        if self.grid is not None:
            return self.grid
        return 256 if n == 1 else 32

    def newton(self, n: int):
        return LineSearchConfig(self.seeds_per_axis, self.tol_newton).newton(n)


@dataclass
class DegreeEstimate:
    value: int
    method: str
    raw: float
    residual: float
    regular_value: Optional[np.ndarray] = None
    map_name: str = ""
    preimages: list = field(default_factory=list, repr=False)


def direction_sequence(dim: int, count: int) -> np.ndarray:
    """Deterministic, well spread unit vectors (unscrambled Halton through the normal CDF)."""
    pts = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    v = normal_dist.ppf(pts)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _local_signs(surface, smap: SphereMap, v, alignments):
    """Sign of det[v | d map] (chart orientation corrected) and its intrinsic size."""
    signs, sizes = [], []
    for al in alignments:
        chart = surface.chart(al.chart_id)
        q, D, H = chart.jets(al.u[None])
        g = local_geometry(surface.space, q, D, H, np.array([chart.orientation]))
        _, df = smap(g)
        target = al.sign * v
        M = np.column_stack([target, df[0]])
        intrinsic = np.column_stack([target, df[0] @ np.linalg.inv(g.R[0])])
        signs.append(int(np.sign(np.linalg.det(M))) * chart.orientation)
        sizes.append(abs(np.linalg.det(intrinsic)))
    return np.array(signs, dtype=int), np.array(sizes)


def _preimages(surface, smap, v, config):
    """Preimages of +v and -v under smap with local signs; (alignments, signs, sizes)."""
    als = find_alignments(surface, constant_map(v), smap, config.newton(surface.n))
    signs, sizes = _local_signs(surface, smap, v, als)
    return als, signs, sizes


def degree_by_preimages(surface: ImmersedHypersurface, smap: SphereMap, v=None,
                        config: DegreeConfig = DegreeConfig()) -> DegreeEstimate:
    """Signed count of preimages of a regular value.

    Preimages of -v come out of the same solve; their signed count must agree
    with that of v, otherwise v is treated as suspect and perturbed.
    """
    candidates = list(direction_sequence(surface.space.dim, config.max_retries))
    if v is not None:
        candidates.insert(0, np.asarray(v, dtype=float) / np.linalg.norm(v))
    for w in candidates:
        als, signs, sizes = _preimages(surface, smap, w, config)
        if len(sizes) and sizes.min() <= config.tol_reg:
            continue
        plus = np.array([a.sign > 0 for a in als], dtype=bool)
        deg_plus = int(signs[plus].sum()) if plus.any() else 0
        deg_minus = int(signs[~plus].sum()) if (~plus).any() else 0
        if deg_plus != deg_minus:
            continue
        pre = [(a.chart_id, a.u, int(s)) for a, s, pl in zip(als, signs, plus) if pl]
        return DegreeEstimate(deg_plus, "preimage", float(deg_plus), 0.0, w, smap.name, pre)
    raise RegularValueNotFound(f"no regular value found for {smap.name} after "
                               f"{len(candidates)} attempts")


def pullback_density(surface, smap: SphereMap, chart, nodes) -> np.ndarray:
    """det[f | df] * orientation / Vol(S^{2n-1}) at chart nodes."""
    q, D, H = chart.jets(nodes)
    g = local_geometry(surface.space, q, D, H, np.full(len(nodes), chart.orientation))
    f, df = smap(g)
    dets = np.linalg.det(np.concatenate([f[..., :, None], df], axis=-1))
    return chart.orientation * dets / surface.space.sphere_volume()


def quadrature_raw(surface, smap: SphereMap, per_axis: int) -> float:
    total = 0.0
    for chart, nodes, w, pu in surface.quadrature(per_axis):
        total += float(np.sum(pullback_density(surface, smap, chart, nodes) * w * pu))
    return total


def degree_by_quadrature(surface: ImmersedHypersurface, smap: SphereMap,
                         config: DegreeConfig = DegreeConfig()) -> DegreeEstimate:
    raw = quadrature_raw(surface, smap, config.grid_for(surface.n))
    value = int(np.rint(raw))
    residual = abs(raw - value)
    if residual >= 0.5 - 1e-12:
        raise QuadratureResolutionError(f"quadrature of {smap.name} is unresolved: raw {raw!r}", raw)
    return DegreeEstimate(value, "quadrature", raw, residual, None, smap.name)


@dataclass
class MorseResult:
    ind_estimate: DegreeEstimate
    chi_check: int
    ind_from_plus: int
    direction: np.ndarray
    critical_points: list          # (chart_id, u, +1 for Crit^+ / -1 for Crit^-, morse index)


def _morse_once(surface, v, config):
    als = find_alignments(surface, constant_map(v), gauss_map(), config.newton(surface.n))
    crit = []
    for al in als:
        chart = surface.chart(al.chart_id)
        q, D, H = chart.jets(al.u[None])
        g = local_geometry(surface.space, q, D, H, np.array([chart.orientation]))
        hess = np.einsum("i,ijk->jk", v, H[0])
        Rinv = np.linalg.inv(g.R[0])
        eig = np.linalg.eigvalsh(Rinv.T @ hess @ Rinv)
        if np.abs(eig).min() <= config.tol_reg:
            return None
        crit.append((al.chart_id, al.u, al.sign, int(np.sum(eig < 0))))
    return crit


def morse_count(surface: ImmersedHypersurface, v=None,
                config: DegreeConfig = DegreeConfig()) -> MorseResult:
    """Index via critical points of the height h(x) = <x, v>.

    Critical points are the G-preimages of +-v; with mu the Morse index,
    ind = sum over Crit^- of (-1)^mu = sum over Crit^+ of (-1)^(dim S - mu),
    and the sum of (-1)^mu over all critical points is chi(S) = 0.
    """
    dim_s = surface.space.dim - 1
    candidates = list(direction_sequence(surface.space.dim, config.max_retries))
    if v is not None:
        candidates.insert(0, np.asarray(v, dtype=float) / np.linalg.norm(v))
    for w in candidates:
        crit = _morse_once(surface, w, config)
        if crit is None:
            continue
        minus = sum((-1) ** mu for (_, _, side, mu) in crit if side < 0)
        plus = sum((-1) ** (dim_s - mu) for (_, _, side, mu) in crit if side > 0)
        chi = sum((-1) ** mu for (_, _, _, mu) in crit)
        est = DegreeEstimate(int(minus), "morse", float(minus), 0.0, w, "G")
        return MorseResult(est, int(chi), int(plus), w, crit)
    raise RegularValueNotFound("no Morse direction found")


def _estimate(surface, smap, method, config, v=None):
    if method == "preimage":
        return degree_by_preimages(surface, smap, v, config)
    if method == "quadrature":
        return degree_by_quadrature(surface, smap, config)
    if method == "morse":
        if smap.name != "G":
            raise DegreeError("the Morse method applies to the Gauss map only")
        return morse_count(surface, v, config).ind_estimate
    raise DegreeError(f"unknown method {method!r}")


def _run_methods(surface, smap, methods, config):
    estimates = {m: _estimate(surface, smap, m, config) for m in methods}
    values = {e.value for e in estimates.values()}
    if len(values) > 1:
        summary = ", ".join(f"{m}={e.value} (raw {e.raw:.6g})" for m, e in estimates.items())
        raise MethodDisagreement(f"degree of {smap.name} disagrees across methods: {summary}",
                                 estimates)
    return estimates


def ind(surface: ImmersedHypersurface, method: str = "all",
        config: DegreeConfig = DegreeConfig()) -> dict:
    """Whitney index deg(G); returns {method: DegreeEstimate}."""
    methods = METHODS if method == "all" else (method,)
    return _run_methods(surface, gauss_map(), methods, config)


def ind_p(surface: ImmersedHypersurface, p, method: str = "all",
          config: DegreeConfig = DegreeConfig()) -> dict:
    """Index of p, deg(xi).  Morse counting does not apply; 'morse' falls back to preimages."""
    if method == "all":
        methods = ("preimage", "quadrature")
    elif method == "morse":
        methods = ("preimage",)
    else:
        methods = (method,)
    return _run_methods(surface, radial_map(surface.space.check(p)), methods, config)


# ---------------------------------------------------------------------------
# intersection identities

@dataclass
class BlockCheck:
    det_block: float
    det_branch: float
    residual: float            # |det_block - det_branch| / max(1, |det_branch|)
    sign_agrees: bool
    C_residual: float          # numeric vs literal matrix of +-J0 on T Sigma
    top_right_residual: float  # numeric d xi vs lambda * Diag(0, 1, ..., 1)

    def passed(self, tol: float = 1e-8) -> bool:
        return self.residual < tol and self.sign_agrees


def block_det_check(surface: ImmersedHypersurface, p, record: TangencyRecord) -> BlockCheck:
    """Local intersection number of the diagonal with the graph of (xi, +-J0 G).

    Builds [[I, d xi], [I, B]] in the adapted frames, where d xi and
    B = d(+-J0 G) are measured numerically from the jets, and compares its
    determinant with det(A + branch * lambda * P).
    """
    p = np.asarray(p, dtype=float)
    s = record.s
    af = adapted_frame_matrices(surface, p, s, record.branch)
    f = frame_at(surface, p, s)
    g = f.geometry
    TD_inv = np.linalg.inv(af.tangent_basis.T @ g.D)
    # d xi evaluated at the tangency, with xi replaced by its exact value branch * J0 N
    r = g.q - p
    dist = np.linalg.norm(r)
    xi = af.xi
    dxi = (np.eye(len(xi)) - np.outer(xi, xi)) @ g.D / dist
    top_right = af.sphere_basis.T @ dxi @ TD_inv
    B = af.sphere_basis.T @ (record.branch * surface.space.J0) @ g.dN @ TD_inv
    k = B.shape[0]
    block = np.block([[np.eye(k), top_right], [np.eye(k), B]])
    det_block = float(np.linalg.det(block))
    det_branch = float(branch_determinant(g.A, g.P, f.lam, record.branch))
    diag = f.lam * np.diag([0.0] + [1.0] * (k - 1))
    return BlockCheck(det_block, det_branch,
                      abs(det_block - det_branch) / max(1.0, abs(det_branch)),
                      (det_block > 0) == (record.epsilon > 0),
                      float(np.abs(af.C - literal_C(surface.n, record.branch)).max()),
                      float(np.abs(top_right - diag).max()))


@dataclass
class CorollaryIntegral:
    literal_value: float
    theorem_value: float
    degrees: dict


def corollary_integral(surface: ImmersedHypersurface, p,
                       config: DegreeConfig = DegreeConfig()) -> CorollaryIntegral:
    """Both readings of the integral formula for the signed line count.

    literal: -(integral of phi_+^* delta + phi_-^* delta) with
    delta = pr_1^* mu + pr_2^* mu, i.e. -(2 deg xi + deg J0G + deg(-J0G)).
    theorem: 2 deg G - 2 deg xi.
    """
    grid = config.grid_for(surface.n)
    space = surface.space
    raw = {
        "xi": quadrature_raw(surface, radial_map(space.check(p)), grid),
        "G": quadrature_raw(surface, gauss_map(), grid),
        "+J0G": quadrature_raw(surface, rotated_gauss_map(space, 1), grid),
        "-J0G": quadrature_raw(surface, rotated_gauss_map(space, -1), grid),
    }
    literal = -(2 * raw["xi"] + raw["+J0G"] + raw["-J0G"])
    theorem = 2 * raw["G"] - 2 * raw["xi"]
    return CorollaryIntegral(literal, theorem, raw)

