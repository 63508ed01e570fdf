"""Command-line front end.

    isoline lines  <config>
    isoline verify <config>
    isoline sweep  <config> --from x1 .. x2n --to x1 .. x2n --steps K
    isoline plot   <config> --out file.svg

Config files are `key = value` lines with `#` comments.  Machine-readable
output is a block between `#BEGIN-REPORT` and `#END-REPORT` holding
`key = value` lines, floats with 17 significant digits.

Exit codes: 0 ok, 1 usage/config/off-surface, 2 general position violated,
3 theorem or cross-method mismatch.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .degree import (METHODS, DegreeConfig, DegreeError, block_det_check, corollary_integral, ind,
                     ind_p)
from .lines import (GeneralPositionError, LineSearchConfig, check_general_position, count_N,
                    find_isotropic_lines)
from .surface import SCENARIOS, OffSurfaceError, SurfaceError, make_scenario

EXIT_OK, EXIT_USAGE, EXIT_GP, EXIT_MISMATCH = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

def _reals(text):
    try:
        return tuple(float(x) for x in text.split())
    except ValueError as exc:
        raise ConfigError(f"expected space-separated reals, got {text!r}") from exc


def _real(text):
    vals = _reals(text)
    if len(vals) != 1:
        raise ConfigError(f"expected one real, got {text!r}")
    return vals[0]


def _int(text):
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    p: tuple
    radius: Optional[float] = None
    semi_axes: Optional[tuple] = None
    center: Optional[tuple] = None
    major_radius: Optional[float] = None
    minor_radius: Optional[float] = None
    method: str = "all"
    seeds_per_axis: Optional[int] = None
    grid: Optional[int] = None
    tol_newton: float = 1e-12
    tol_gp: float = 1e-8
    max_newton_iters: int = 50
    dedupe_radius: float = 1e-6
    format: str = "table"
    plot: Optional[str] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.method not in METHODS + ("all",):
            raise ConfigError(f"method must be one of preimage, quadrature, morse, all")
        if self.format not in ("table", "records"):
            raise ConfigError("format must be table or records")
        for name in ("seeds_per_axis", "grid"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be positive")

    def surface(self):
        return make_scenario(self.scenario, self.radius, self.semi_axes, self.center,
                             self.major_radius, self.minor_radius)

    def line_config(self) -> LineSearchConfig:
        return LineSearchConfig(self.seeds_per_axis, self.tol_newton, self.max_newton_iters,
                                self.dedupe_radius, self.tol_gp)

    def degree_config(self) -> DegreeConfig:
        return DegreeConfig(self.seeds_per_axis, self.grid, tol_newton=self.tol_newton)

    def with_p(self, p) -> "RunConfig":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw["p"] = tuple(float(x) for x in p)
        return RunConfig(**kw)


_PARSERS = {
    "scenario": str, "radius": _real, "semi_axes": _reals, "center": _reals, "p": _reals,
    "major_radius": _real, "minor_radius": _real, "method": str, "seeds_per_axis": _int,
    "grid": _int, "tol_newton": _real, "tol_gp": _real, "max_newton_iters": _int,
    "dedupe_radius": _real, "format": str, "plot": str,
}


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _PARSERS[key](value)
    for key in ("scenario", "p"):
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# report block

def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return "none"
    if isinstance(value, (tuple, list, np.ndarray)):
        return " ".join(fmt(v) for v in value)
    return str(value)


def render_block(items) -> str:
    lines = ["#BEGIN-REPORT"]
    lines += [f"{k} = {fmt(v)}" for k, v in items]
    lines.append("#END-REPORT")
    return "\n".join(lines) + "\n"


def parse_block(text: str) -> dict:
    """Inverse of render_block; values are left as strings."""
    start = text.index("#BEGIN-REPORT")
    end = text.index("#END-REPORT", start)
    out = {}
    for line in text[start:end].splitlines()[1:]:
        key, value = line.split(" = ", 1)
        out[key] = value
    return out


def _record_items(records, prefix="record"):
    items = [("n_records", len(records))]
    for i, r in enumerate(records):
        items += [(f"{prefix}.{i}.branch", r.branch), (f"{prefix}.{i}.chart", r.chart_id),
                  (f"{prefix}.{i}.u", r.u), (f"{prefix}.{i}.q", r.q),
                  (f"{prefix}.{i}.epsilon", r.epsilon), (f"{prefix}.{i}.det_value", r.det_value),
                  (f"{prefix}.{i}.residual", r.residual)]
    return items


def _gp_items(report):
    return [("gp.condition1", "skipped" if report.condition1 is None else report.condition1),
            ("gp.condition2", report.condition2), ("gp.condition3", report.condition3),
            ("gp.min_abs_det", report.min_abs_det), ("gp.pass", report.passed)]


def _record_table(records) -> str:
    head = f"{'branch':>6} {'chart':>5}  {'u':<30} {'q':<40} {'eps':>3} {'det_value':>12} {'residual':>9}"
    rows = [head]
    for r in records:
        u = " ".join(f"{x:.6f}" for x in r.u)
        q = " ".join(f"{x:.6f}" for x in r.q)
        rows.append(f"{r.branch:>+6d} {r.chart_id:>5d}  {u:<30} {q:<40} {r.epsilon:>+3d} "
                    f"{r.det_value:>12.5e} {r.residual:>9.2e}")
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# verification

@dataclass
class VerificationReport:
    records: list
    N_lines: int
    ind: dict
    ind_p: dict
    theorem_lhs: int
    theorem_rhs: Optional[int]
    methods_agree: bool
    corollary_literal: float
    corollary_theorem: float
    gp: object
    block_checks: list = field(default_factory=list)
    error: str = ""

    @property
    def passed(self) -> bool:
        return (self.theorem_rhs is not None and self.theorem_lhs == self.theorem_rhs
                and self.gp.passed and self.methods_agree)

    def items(self, cfg: RunConfig):
        out = [("scenario", cfg.scenario), ("n", len(cfg.p) // 2), ("p", cfg.p),
               ("method", cfg.method)]
        out += _record_items(self.records)
        out.append(("N_lines", self.N_lines))
        for label, ests in (("ind", self.ind), ("ind_p", self.ind_p)):
            for m in sorted(ests):
                e = ests[m]
                out += [(f"{label}.{m}", e.value), (f"{label}.{m}.raw", e.raw),
                        (f"{label}.{m}.residual", e.residual)]
        out += [("methods_agree", self.methods_agree), ("theorem_lhs", self.theorem_lhs),
                ("theorem_rhs", self.theorem_rhs), ("corollary_literal", self.corollary_literal),
                ("corollary_theorem", self.corollary_theorem)]
        out += _gp_items(self.gp)
        out.append(("block_check.max_residual",
                    max((b.residual for b in self.block_checks), default=0.0)))
        out.append(("block_check.signs_agree", all(b.sign_agrees for b in self.block_checks)))
        out.append(("pass", self.passed))
        return out


def _common_value(ests: dict):
    values = {e.value for e in ests.values()}
    return values.pop() if len(values) == 1 else None


def verify(cfg: RunConfig) -> VerificationReport:
    """Both sides of N = 2 ind - 2 ind_p.  Raises OffSurfaceError / SurfaceError."""
    surface = cfg.surface()
    p = np.asarray(cfg.p, dtype=float)
    lcfg = cfg.line_config()
    records = find_isotropic_lines(surface, p, lcfg, strict=False)
    gp = check_general_position(surface, p, records, lcfg)
    dcfg = cfg.degree_config()
    error = ""
    try:
        ind_est = ind(surface, cfg.method, dcfg)
        indp_est = ind_p(surface, p, cfg.method, dcfg)
        agree = True
    except DegreeError as exc:
        ind_est = indp_est = getattr(exc, "estimates", {}) or {}
        agree = False
        error = str(exc)
        # keep both sides printable: rerun each side separately
        try:
            ind_est = ind(surface, "preimage", dcfg)
            indp_est = ind_p(surface, p, "preimage", dcfg)
        except DegreeError:
            pass
    a, b = _common_value(ind_est), _common_value(indp_est)
    rhs = None if a is None or b is None else 2 * a - 2 * b
    cor = corollary_integral(surface, p, dcfg)
    checks = [block_det_check(surface, p, r) for r in records]
    if not all(c.passed() for c in checks):
        agree = False
        error = error or "block determinant identity violated"
    return VerificationReport(records, count_N(records), ind_est, indp_est, count_N(records), rhs,
                              agree, cor.literal_value, cor.theorem_value, gp, checks, error)


# ---------------------------------------------------------------------------
# commands

def _write_plot(cfg, surface, records, out):
    Path(out).write_text(render_svg(surface, cfg.p, records), encoding="utf-8")


def cmd_lines(cfg: RunConfig, out=sys.stdout) -> int:
    surface = cfg.surface()
    try:
        records = find_isotropic_lines(surface, cfg.p, cfg.line_config())
    except GeneralPositionError as exc:
        print(f"general position violated: {exc}", file=out)
        if exc.records is not None:
            print(_record_table(exc.records), file=out)
        print(render_block(_record_items(exc.records or []) + _gp_items(exc.report)), end="", file=out)
        return EXIT_GP
    if cfg.format == "table":
        print(_record_table(records), file=out)
        print(f"N = {count_N(records)}", file=out)
    print(render_block(_record_items(records) + [("N_lines", count_N(records))]), end="", file=out)
    if cfg.plot and surface.n == 1:
        _write_plot(cfg, surface, records, cfg.plot)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out=sys.stdout) -> int:
    rep = verify(cfg)
    if cfg.format == "table":
        print(f"scenario {cfg.scenario}, p = {fmt(cfg.p)}", file=out)
        print(_record_table(rep.records), file=out)
        ind_v = {m: e.value for m, e in sorted(rep.ind.items())}
        indp_v = {m: e.value for m, e in sorted(rep.ind_p.items())}
        print(f"ind   = {ind_v}", file=out)
        print(f"ind_p = {indp_v}", file=out)
        print(f"N = {rep.theorem_lhs}   2 ind - 2 ind_p = {rep.theorem_rhs}", file=out)
        print(f"integral formula: theorem reading {rep.corollary_theorem:.6f}, "
              f"literal reading {rep.corollary_literal:.6f}", file=out)
        if rep.gp.details:
            print("general position: " + "; ".join(rep.gp.details), file=out)
        if rep.error:
            print(f"error: {rep.error}", file=out)
        print("PASS" if rep.passed else "FAIL", file=out)
    print(render_block(rep.items(cfg)), end="", file=out)
    if cfg.plot and len(cfg.p) == 2:
        _write_plot(cfg, cfg.surface(), rep.records, cfg.plot)
    if not rep.gp.passed:
        return EXIT_GP
    return EXIT_OK if rep.passed else EXIT_MISMATCH


@dataclass
class SweepRow:
    step: int
    p: tuple
    status: str                 # ok | on-surface | gp-fail | degree-fail
    N: Optional[int] = None
    ind_p: Optional[int] = None
    min_abs_det: Optional[float] = None


def sweep(cfg: RunConfig, start, stop, steps: int) -> list[SweepRow]:
    surface = cfg.surface()
    start, stop = np.asarray(start, float), np.asarray(stop, float)
    lcfg, dcfg = cfg.line_config(), cfg.degree_config()
    rows = []
    for k in range(steps):
        p = start + (stop - start) * k / (steps - 1)
        pt = tuple(float(x) for x in p)
        try:
            records = find_isotropic_lines(surface, p, lcfg)
        except OffSurfaceError:
            rows.append(SweepRow(k, pt, "on-surface"))
            continue
        except GeneralPositionError as exc:
            rows.append(SweepRow(k, pt, "gp-fail", min_abs_det=exc.report.min_abs_det))
            continue
        try:
            d = ind_p(surface, p, "preimage", dcfg)["preimage"].value
        except DegreeError:
            rows.append(SweepRow(k, pt, "degree-fail", count_N(records)))
            continue
        mdet = min((abs(r.det_value) for r in records), default=float("inf"))
        rows.append(SweepRow(k, pt, "ok", count_N(records), d, mdet))
    return rows


def jump_law_holds(rows) -> bool:
    """Every change of N between adjacent valid rows is +-2 with a unit change of ind_p."""
    valid = [r for r in rows if r.status == "ok"]
    for a, b in zip(valid, valid[1:]):
        dN, di = b.N - a.N, b.ind_p - a.ind_p
        if dN == 0 and di == 0:
            continue
        if not (abs(dN) == 2 and abs(di) == 1 and dN == -2 * di):
            return False
    return True


def cmd_sweep(cfg: RunConfig, start, stop, steps: int, out=sys.stdout) -> int:
    surface = cfg.surface()
    dim = surface.space.dim
    if len(start) != dim or len(stop) != dim:
        raise ConfigError(f"--from and --to need {dim} coordinates")
    if steps < 2:
        raise ConfigError("--steps must be at least 2")
    for end in (start, stop):
        surface.check_offsurface(np.asarray(end, float))
    rows = sweep(cfg, start, stop, steps)
    law = jump_law_holds(rows)
    if cfg.format == "table":
        print(f"{'step':>4}  {'p':<44} {'status':<11} {'N':>3} {'ind_p':>5} {'min|det|':>10}", file=out)
        for r in rows:
            p = " ".join(f"{x:.4f}" for x in r.p)
            N = "-" if r.N is None else f"{r.N:d}"
            d = "-" if r.ind_p is None else f"{r.ind_p:d}"
            m = "-" if r.min_abs_det is None or not np.isfinite(r.min_abs_det) else f"{r.min_abs_det:.3e}"
            print(f"{r.step:>4}  {p:<44} {r.status:<11} {N:>3} {d:>5} {m:>10}", file=out)
        print(f"jump law {'holds' if law else 'VIOLATED'}", file=out)
    items = [("scenario", cfg.scenario), ("from", tuple(start)), ("to", tuple(stop)), ("steps", steps)]
    for r in rows:
        items += [(f"row.{r.step}.p", r.p), (f"row.{r.step}.status", r.status),
                  (f"row.{r.step}.N", r.N), (f"row.{r.step}.ind_p", r.ind_p)]
    items.append(("jump_law", law))
    print(render_block(items), end="", file=out)
    return EXIT_OK if law else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# plotting

def render_svg(surface, p, records, samples: int = 400) -> str:
    """SVG 1.1 picture of a plane curve, p and the signed tangent lines through p."""
    if surface.n != 1:
        raise ConfigError("plotting needs a plane-curve scenario (n = 1)")
    p = np.asarray(p, dtype=float)
    chart = surface.charts[0]
    u = chart.lo[0] + (chart.hi[0] - chart.lo[0]) * np.arange(samples + 1) / samples
    q, D, _ = chart.jets(u[:, None])
    segs = []
    for r in records:
        t = np.asarray(r.q) - p
        segs.append((p - 0.25 * t, p + 1.6 * t, r))
    pts = np.vstack([q, p[None]] + [np.vstack([a, b]) for a, b, _ in segs])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    lo, hi = lo - 0.1 * span, hi + 0.1 * span
    w, h = hi - lo
    unit = max(w, h) / 200.0

    def xy(v):
        # flip y so the picture has the usual orientation
        return f"{v[0]:.6f}", f"{-v[1]:.6f}"

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'viewBox="{lo[0]:.6f} {-hi[1]:.6f} {w:.6f} {h:.6f}">',
           f'<title>{surface.name}: isotropic lines through p</title>']
    path = " ".join(("M" if i == 0 else "L") + " {} {}".format(*xy(v)) for i, v in enumerate(q))
    out.append(f'<path class="curve" d="{path} Z" fill="none" stroke="black" '
               f'stroke-width="{1.5 * unit:.6f}"/>')
    # orientation arrow at the start of the parametrisation
    tip = q[0] + 12 * unit * D[0, :, 0] / np.linalg.norm(D[0, :, 0])
    nrm = np.array([-D[0, 1, 0], D[0, 0, 0]]) / np.linalg.norm(D[0, :, 0])
    back = tip - 5 * unit * D[0, :, 0] / np.linalg.norm(D[0, :, 0])
    tri = [tip, back + 3 * unit * nrm, back - 3 * unit * nrm]
    out.append('<polygon class="orientation" points="' + " ".join(",".join(xy(v)) for v in tri)
               + '" fill="black"/>')
    for a, b, r in segs:
        color = "#1f5fbf" if r.epsilon > 0 else "#bf1f1f"
        tag = f"{r.epsilon:+d}"
        (x1, y1), (x2, y2) = xy(a), xy(b)
        out.append(f'<line class="tangent" data-epsilon="{tag}" data-branch="{r.branch:+d}" '
                   f'x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" '
                   f'stroke-width="{unit:.6f}"/>')
        tx, ty = xy(np.asarray(r.q) + 4 * unit * (np.asarray(r.q) - p) / np.linalg.norm(np.asarray(r.q) - p))
        out.append(f'<text x="{tx}" y="{ty}" font-size="{8 * unit:.6f}" fill="{color}">{tag}</text>')
    px, py = xy(p)
    out.append(f'<circle class="p" cx="{px}" cy="{py}" r="{2.5 * unit:.6f}" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(cfg: RunConfig, out_path, out=sys.stdout) -> int:
    surface = cfg.surface()
    if surface.n != 1:
        print("error: plot needs a plane-curve scenario (n = 1)", file=sys.stderr)
        return EXIT_USAGE
    try:
        records = find_isotropic_lines(surface, cfg.p, cfg.line_config())
        status = EXIT_OK
    except GeneralPositionError as exc:
        records, status = exc.records or [], EXIT_GP
    _write_plot(cfg, surface, records, out_path)
    print(f"wrote {out_path} ({len(records)} lines)", file=out)
    return status


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isoline", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("lines", "verify"):
        sub.add_parser(name).add_argument("config")
    sw = sub.add_parser("sweep")
    sw.add_argument("config")
    sw.add_argument("--from", dest="start", nargs="+", type=float, required=True)
    sw.add_argument("--to", dest="stop", nargs="+", type=float, required=True)
    sw.add_argument("--steps", type=int, required=True)
    pl = sub.add_parser("plot")
    pl.add_argument("config")
    pl.add_argument("--out")
    return ap


def main(argv=None, out=sys.stdout) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.command == "lines":
            return cmd_lines(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.start, args.stop, args.steps, out)
        target = args.out or cfg.plot
        if not target:
            raise ConfigError("plot needs --out or a plot key in the config")
        return cmd_plot(cfg, target, out)
    except OffSurfaceError as exc:
        print(f"error: off-surface violation: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, SurfaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
