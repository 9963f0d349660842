"""
Command-line entry point (``gtdkit``).

Exit codes: 0 success, 1 usage error, 2 domain/parse/catalog error,
3 tolerance failure. Tables go out as CSV, everything else as JSON with
sorted keys so that identical invocations give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import analysis
from .errors import GtdError
from .expr import catalog_names, get_system
from .gtd import (
    GtdKind,
    equilibrium_metric,
    legendre_invariance_residual,
    potential_metric_field,
)
from .manifold import grid_points
from .phase import CoordinateMap, LegendreSpec, PhasePoint, contact_form, random_points, transform_form

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_TOLERANCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _emit_json(payload, out):
    out.write(json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n")


def _emit_csv(header, rows, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    out.write(buf.getvalue())


# -- argument helpers -------------------------------------------------------


def _kind(args) -> GtdKind:
    xi = None
    if getattr(args, "xi", None):
        xi = tuple(float(x) for x in args.xi.split(","))
    if args.kind == "III" and args.k is None:
        raise UsageError("kind III requires --k")
    return GtdKind(args.kind, 0 if args.k is None else args.k, xi)


def _point(text, system):
    """``U=1,V=2`` (any order) or bare ``1,2`` in declaration order."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if parts and all("=" in p for p in parts):
        given = {}
        for p in parts:
            name, value = p.split("=", 1)
            given[name.strip()] = float(value)
        missing = [v for v in system.variables if v not in given]
        extra = sorted(set(given) - set(system.variables))
        if missing or extra:
            raise UsageError(f"--at must assign exactly {', '.join(system.variables)}")
        return np.array([given[v] for v in system.variables])
    values = np.array([float(p) for p in parts])
    if values.size != system.n:
        raise UsageError(f"--at needs {system.n} values for {system.name}")
    return values


def _grid_axes(specs, system):
    axes = {}
    for spec in specs:
        try:
            name, rng = spec.split("=", 1)
            lo, hi, count = rng.split(":")
            lo, hi, count = float(lo), float(hi), int(count)
        except ValueError:
            raise UsageError(f"grid spec {spec!r} must look like NAME=min:max:count") from None
        if count < 2:
            raise UsageError("grid counts must be >= 2")
        axes[name.strip()] = np.linspace(lo, hi, count)
    if sorted(axes) != sorted(system.variables):
        raise UsageError(f"--grid must cover exactly {', '.join(system.variables)}")
    return [axes[v] for v in system.variables]


def _positive(value):
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return x


# -- subcommands --------------------------------------------------------------


def cmd_systems_list(args, out):
    rows = []
    for name in catalog_names():
        s = get_system(name)
        rows.append({"name": name, "potential": s.potential, "variables": list(s.variables), "class": s.potential_class})
    if args.format == "csv":
        _emit_csv(["name", "potential", "variables", "class"], [[r["name"], r["potential"], " ".join(r["variables"]), r["class"]] for r in rows], out)
    else:
        _emit_json({"command": "systems list", "ok": True, "systems": rows}, out)
    return EXIT_OK


def cmd_metric_eval(args, out):
    system = get_system(args.system)
    kind = _kind(args)
    E = _point(args.at, system)
    g = equilibrium_metric(kind, system, E)
    _emit_json(
        {
            "command": "metric eval",
            "ok": True,
            "system": system.name,
            "kind": kind.label(),
            "variables": list(system.variables),
            "point": E,
            "metric": g,
        },
        out,
    )
    return EXIT_OK


def cmd_curvature_scan(args, out):
    system = get_system(args.system)
    kind = _kind(args)
    axes = _grid_axes(args.grid, system)
    points = analysis.gtd_singularity_scan(kind, system, axes, args.threshold)
    worst = max((abs(p.scalar) for p in points if p.scalar is not None), default=0.0)
    failed = [p for p in points if p.error is not None]
    over = args.tol is not None and worst > args.tol
    if args.format == "json":
        _emit_json(
            {
                "command": "curvature scan",
                "ok": not over,
                "system": system.name,
                "kind": kind.label(),
                "variables": list(system.variables),
                "threshold": args.threshold,
                "max_abs_R": worst,
                "points": [p.as_dict() for p in points],
            },
            out,
        )
    else:
        header = [*system.variables, "R", "K", "det", "flags", "error"]
        rows = [
            [*(repr(c) for c in p.coords), _fmt(p.scalar), _fmt(p.kretschmann), _fmt(p.det), ";".join(p.flags), p.error or ""]
            for p in points
        ]
        _emit_csv(header, rows, out)
    if failed:
        print(f"warning: {len(failed)} grid points failed, first at {failed[0].coords}: {failed[0].error}", file=sys.stderr)
    if over:
        bad = max((p for p in points if p.scalar is not None), key=lambda p: abs(p.scalar))
        print(f"tolerance failure: |R| = {abs(bad.scalar):.3e} > {args.tol:g} at {dict(zip(system.variables, bad.coords))}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _fmt(x):
    return "" if x is None else repr(float(x))


def _parse_spec(text, n):
    if text in ("total", "all"):
        return LegendreSpec.total(n)
    if text in ("", "none", "identity"):
        return LegendreSpec.identity(n)
    return LegendreSpec(n, frozenset(int(a) for a in text.split(",")))


def cmd_legendre_check(args, out):
    kind = _kind(args)
    n = args.n
    spec = _parse_spec(args.spec, n)
    rng = np.random.default_rng(args.seed)
    points = random_points(n, args.points, rng)
    if kind.variant == "III":
        # positive E, I keep the odd-power weight finite for negative k
        points = [PhasePoint(p.phi, np.abs(p.E) + 0.1, np.abs(p.I) + 0.1) for p in points]
    residuals = [legendre_invariance_residual(kind, spec, p) for p in points]
    cmap = CoordinateMap.legendre(spec)
    theta = [float(np.abs(transform_form(cmap, contact_form, p) - contact_form(p)).max()) for p in points]
    worst = int(np.argmax(residuals))
    asserted = kind.variant == "III" or spec.is_total
    ok = (not asserted or residuals[worst] <= args.tol) and max(theta) <= args.tol
    _emit_json(
        {
            "command": "legendre check",
            "ok": ok,
            "asserted": asserted,
            "kind": kind.label(),
            "spec": spec.label(),
            "n": n,
            "seed": args.seed,
            "points": args.points,
            "tol": args.tol,
            "max_residual": residuals[worst],
            "worst_point": points[worst].as_array(),
            "contact_form_residual": max(theta),
        },
        out,
    )
    if not ok:
        print(f"tolerance failure: residual {residuals[worst]:.3e} > {args.tol:g} at {points[worst]}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_gtd3_check(args, out):
    k, n = args.k, args.n
    rng = np.random.default_rng(args.seed)
    points = [np.concatenate(([rng.uniform(-2, 2)], rng.uniform(0.5, 2.0, 2 * n))) for _ in range(args.points)]
    report = {"command": "gtd3 check", "k": k, "n": n, "seed": args.seed, "variant": args.variant, "tol": args.tol}
    failures = []
    if k == -1:
        report["deformed_contacto"] = {"asserted": False, "max_residual": None, "note": "undefined for k = -1"}
    else:
        dc = analysis.deformed_contacto_residual(k, args.variant, points)
        asserted = args.variant == "corrected"
        report["deformed_contacto"] = {"asserted": asserted, "max_residual": dc.max_residual}
        if asserted and dc.max_residual > args.tol:
            failures.append(("deformed_contacto", dc.max_residual, points[int(np.argmax(np.abs(dc.per_point).max(axis=1)))]))
    c33 = analysis.condition33_residual(k, points)
    report["condition33"] = {"asserted": True, "max_residual": c33}
    if c33 > args.tol:
        failures.append(("condition33", c33, None))
    grid = grid_points([(0.5, 2.0)] * (2 * n), args.grid_count)
    flat = analysis.control_flatness(k, n, grid)
    report["control_flatness"] = {"asserted": True, **flat.as_dict()}
    if not flat.flat:
        failures.append(("control_flatness", flat.max_invariant, flat.worst_point))
    system = get_system(args.system)
    E = _point(args.at, system) if args.at else np.ones(system.n) * 2.0
    report["witness"] = {"asserted": False, "system": system.name, "point": E, "defect": analysis.hessian_witness(k, system, E)}
    report["ok"] = not failures
    _emit_json(report, out)
    for name, value, where in failures:
        print(f"tolerance failure: {name} = {value:.3e} at {where}", file=sys.stderr)
    return EXIT_TOLERANCE if failures else EXIT_OK


def cmd_hessian_obstructions(args, out):
    system = get_system(args.system)
    metric = potential_metric_field(system, args.potential_metric)
    E = _point(args.at, system) if args.at else np.ones(system.n)
    rep = analysis.pontryagin_obstructions(metric, E)
    ok = rep.p1_relative <= args.tol and rep.p2_relative <= args.tol
    _emit_json(
        {"command": "hessian obstructions", "ok": ok, "system": system.name, "metric": args.potential_metric, "point": E, "tol": args.tol, **rep.as_dict()},
        out,
    )
    if not ok:
        print(f"tolerance failure: relative obstruction above {args.tol:g} at {E.tolist()}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_fluctuation_check(args, out):
    system = get_system(args.system)
    E = _point(args.at, system)
    dE = _point(args.dE, system) if args.dE else np.full(system.n, 1e-2)
    rep = analysis.fluctuation_residual(system, E, dE)
    ok = rep.slope >= args.min_slope
    _emit_json({"command": "fluctuation check", "ok": ok, "system": system.name, "point": E, "dE": dE, "min_slope": args.min_slope, **rep.as_dict()}, out)
    if not ok:
        print(f"tolerance failure: slope {rep.slope:.3f} < {args.min_slope} at {E.tolist()}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _add_kind(p, required=True):
    p.add_argument("--kind", choices=["I", "II", "III"], required=required)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--xi", help="comma-separated weights for kinds I/II")


def build_parser():
    parser = _Parser(prog="gtdkit", description="Geometrothermodynamics toolkit")
    sub = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    systems = sub.add_parser("systems").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = systems.add_parser("list")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_systems_list)

    metric = sub.add_parser("metric").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = metric.add_parser("eval")
    p.add_argument("--system", required=True)
    _add_kind(p)
    p.add_argument("--at", required=True)
    p.set_defaults(func=cmd_metric_eval)

    curvature = sub.add_parser("curvature").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = curvature.add_parser("scan")
    p.add_argument("--system", required=True)
    _add_kind(p)
    p.add_argument("--grid", action="append", required=True, help="NAME=min:max:count, once per variable")
    p.add_argument("--threshold", type=_positive, default=1e4)
    p.add_argument("--tol", type=_positive, default=None, help="fail (exit 3) if any |R| exceeds this")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_curvature_scan)

    legendre = sub.add_parser("legendre").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = legendre.add_parser("check")
    _add_kind(p)
    p.add_argument("--spec", default="total", help="comma-separated 1-based indices, or 'total'")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.set_defaults(func=cmd_legendre_check)

    gtd3 = sub.add_parser("gtd3").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = gtd3.add_parser("check")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--variant", choices=list(analysis.DEFORMATION_VARIANTS), default="corrected")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.add_argument("--grid-count", type=int, default=3)
    p.add_argument("--system", default="ideal_gas")
    p.add_argument("--at", default=None)
    p.set_defaults(func=cmd_gtd3_check)

    hessian = sub.add_parser("hessian").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = hessian.add_parser("obstructions")
    p.add_argument("--system", required=True)
    p.add_argument("--potential-metric", choices=["hessian", "weinhold", "ruppeiner"], default="hessian")
    p.add_argument("--at", default=None)
    p.add_argument("--tol", type=_positive, default=1e-6)
    p.set_defaults(func=cmd_hessian_obstructions)

    fluct = sub.add_parser("fluctuation").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = fluct.add_parser("check")
    p.add_argument("--system", required=True)
    p.add_argument("--at", required=True)
    p.add_argument("--dE", default=None, help="direction of the step; defaults to all 1e-2")
    p.add_argument("--min-slope", type=float, default=2.9)
    p.set_defaults(func=cmd_fluctuation_check)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        print("gtdkit: error: --n must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"gtdkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GtdError, ArithmeticError, ValueError) as exc:
        print(f"gtdkit: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
