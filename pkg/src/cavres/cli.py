"""Command-line entry point.

Subcommands: trace, resistance, body, optimize, census, verify, scan.
JSON results go to stdout; tabular data goes to --out as CSV (stdout when
omitted). Angles are accepted in degrees unless --radians is given. Exit
codes: 0 success, 2 usage/configuration errors, 3 verification violations.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from . import analysis, optimize
from .billiard import EntryState, TraceLimits, trace
from .resistance import (
    BodySpec,
    QuadratureSpec,
    body_resistance,
    cavity_resistance,
    perimeter_ratio,
)
from .shapes import (
    Cavity,
    InvalidShapeError,
    QuadraticFamilyParams,
    load_cavity,
    make_double_parabola,
    make_flat,
    make_quadratic,
    make_rectangle,
    make_right_triangle,
)

_SHAPES = ("double-parabola", "flat", "right-triangle", "rectangle", "quadratic")


class UsageError(Exception):
    """Configuration problem that should terminate with exit code 2."""


def _add_shape_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--shape",
        choices=_SHAPES,
        default="double-parabola",
        help="built-in cavity shape (default: double-parabola)",
    )
    parser.add_argument(
        "--shape-file",
        metavar="PATH",
        help="load the cavity from a JSON file instead of --shape",
    )
    parser.add_argument(
        "--depth",
        type=float,
        default=10.0,
        help="rectangle depth (only with --shape rectangle, default 10)",
    )
    parser.add_argument(
        "--height",
        type=float,
        default=math.sqrt(2.0),
        help="quadratic family height h (only with --shape quadratic)",
    )
    parser.add_argument(
        "--beta",
        type=float,
        default=0.0,
        help="quadratic family slope parameter (only with --shape quadratic)",
    )


def _build_shape(args: argparse.Namespace) -> Cavity:
    if args.shape_file:
        try:
            return load_cavity(args.shape_file)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot load shape file: {exc}") from exc
    try:
        if args.shape == "double-parabola":
            return make_double_parabola()
        if args.shape == "flat":
            return make_flat()
        if args.shape == "right-triangle":
            return make_right_triangle()
        if args.shape == "rectangle":
            return make_rectangle(args.depth)
        if args.shape == "quadratic":
            return make_quadratic(QuadraticFamilyParams(h=args.height, beta=args.beta))
    except InvalidShapeError as exc:
        raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown shape {args.shape!r}")


def _add_quad_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--n", type=int, default=None, help="subintervals in both x and phi"
    )
    parser.add_argument("--n-x", type=int, default=1000, help="subintervals in x")
    parser.add_argument("--n-phi", type=int, default=1000, help="subintervals in phi")
    parser.add_argument(
        "--rule",
        choices=("midpoint", "simpson"),
        default="midpoint",
        help="quadrature rule (simpson requires a symmetric shape)",
    )
    parser.add_argument(
        "--max-reflections",
        type=int,
        default=1000,
        help="reflection cap per trajectory (raise for deep cavities)",
    )


def _quad_spec(args: argparse.Namespace) -> QuadratureSpec:
    n_x = args.n if args.n is not None else args.n_x
    n_phi = args.n if args.n is not None else args.n_phi
    rule = "simpson-symmetric" if args.rule == "simpson" else "midpoint"
    try:
        return QuadratureSpec(n_x=n_x, n_phi=n_phi, rule=rule)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _limits(args: argparse.Namespace) -> TraceLimits:
    try:
        return TraceLimits(max_reflections=args.max_reflections)
    except (AttributeError, ValueError):
        return TraceLimits()


def _parse_range(text: str) -> np.ndarray:
    """Parse a lo:hi:step range flag into the inclusive grid of values."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"malformed range {text!r}, expected lo:hi:step")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"malformed range {text!r}: {exc}") from exc
    if step <= 0.0 or hi < lo:
        raise UsageError(f"malformed range {text!r}: need hi >= lo and step > 0")
    count = int(round((hi - lo) / step)) + 1
    values = lo + step * np.arange(count)
    return values[values <= hi + 1e-12 * max(1.0, abs(hi))]


@contextmanager
def _open_out(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path!r}: {exc}") from exc
    try:
        yield fh
    finally:
        fh.close()


def _angle_to_radians(value: float, radians_flag: bool) -> float:
    return value if radians_flag else math.radians(value)


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def _cmd_trace(args: argparse.Namespace) -> int:
    cavity = _build_shape(args)
    phi = _angle_to_radians(args.phi, args.radians)
    try:
        entry = EntryState(x=args.x, phi=phi)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = trace(cavity, entry, _limits(args))
    with _open_out(args.out) as fh:
        fh.write("x,y\n")
        fh.write(f"{entry.x!r},0.0\n")
        for p in result.points:
            fh.write(f"{p.x!r},{p.y!r}\n")
        if result.valid:
            fh.write(f"{result.exit_x!r},0.0\n")
    if not result.valid:
        print(f"trajectory invalid: {result.failure}", file=sys.stderr)
    return 0


def _cmd_resistance(args: argparse.Namespace) -> int:
    cavity = _build_shape(args)
    spec = _quad_spec(args)
    if spec.rule == "simpson-symmetric" and not cavity.symmetric:
        raise UsageError("--rule simpson requires a symmetric shape")
    estimate = cavity_resistance(cavity, spec, limits=_limits(args))
    _print_json(
        {
            "shape": cavity.name,
            "value": estimate.value,
            "n_x": spec.n_x,
            "n_phi": spec.n_phi,
            "rule": spec.rule,
            "invalid_samples": estimate.invalid_samples,
            "refinement_delta": estimate.refinement_delta,
        }
    )
    return 0


def _cmd_body(args: argparse.Namespace) -> int:
    try:
        body = BodySpec(n_cavities=args.cavities)
        value = body_resistance(body, args.cavity_r)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _print_json(
        {
            "n_cavities": body.n_cavities,
            "eps_over_r": body.eps_over_r,
            "perimeter_ratio": perimeter_ratio(body.eps_over_r),
            "cavity_resistance": args.cavity_r,
            "value": value,
        }
    )
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    try:
        spec = optimize.default_objective_spec(args.family, n=args.search_n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = QuadratureSpec(args.report_n, args.report_n, spec.quadrature.rule)
    try:
        result = optimize.optimize_family(
            spec,
            method=args.method,
            seed=args.seed,
            n_starts=args.starts,
            budget=args.budget,
            report_quad=report,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.trace_out:
        with _open_out(args.trace_out) as fh:
            names = ",".join(f"p{i}" for i in range(len(result.best_params)))
            fh.write(f"{names},value\n")
            for params, value in result.trace:
                fh.write(",".join(repr(p) for p in params) + f",{value!r}\n")
    _print_json(
        {
            "family": args.family,
            "method": args.method,
            "seed": args.seed,
            "best_params": list(result.best_params),
            "best_value": result.best_value,
            "evaluations": result.evaluations,
            "converged": result.converged,
        }
    )
    return 0


def _cmd_census(args: argparse.Namespace) -> int:
    cavity = _build_shape(args)
    records = analysis.census(cavity, args.samples, args.seed, _limits(args))
    with _open_out(args.out) as fh:
        analysis.write_census_csv(records, fh)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    cavity = _build_shape(args)
    reports = []
    if args.suite in ("theorems", "all"):
        records = analysis.census(cavity, args.samples, args.seed, _limits(args))
        if args.grid:
            phi0 = analysis.APPENDIX.phi0
            phis_pos = np.linspace(phi0 + 1e-3, math.pi / 2 - 1e-3, args.grid // 2)
            phis = np.concatenate([-phis_pos, phis_pos])
            xs = np.linspace(-0.5 + 1e-3, 0.5 - 1e-3, args.grid)
            records = records + analysis.grid_census(cavity, xs, phis, _limits(args))
        reports.append(("theorem-1", analysis.verify_theorem1(records)))
        reports.append(("theorem-2", analysis.verify_theorem2(records)))
        reports.append(("corollary-2phi0", analysis.verify_corollary(records)))
    if args.suite in ("appendix", "all"):
        reports.append(
            (
                "three-bounce-structure",
                analysis.verify_appendix_structure(
                    cavity, args.samples, args.seed, _limits(args)
                ),
            )
        )
    failed = False
    for name, report in reports:
        status = "PASS" if report.passed else "FAIL"
        failed = failed or not report.passed
        print(
            f"{status} {name}: {report.violations} violations "
            f"over {report.samples} samples ({report.bound_checked})"
        )
        if report.witness is not None:
            w = report.witness
            print(
                f"  witness: x={w.x!r} phi={w.phi!r} "
                f"reflections={w.reflections} faces={list(w.faces)}"
            )
    return 3 if failed else 0


def _cmd_scan(args: argparse.Namespace) -> int:
    quad = _quad_spec(args)
    h_values = _parse_range(args.h_range)
    if args.beta_range:
        beta_values = _parse_range(args.beta_range)
        rows = analysis.scan_r_grid(h_values, beta_values, quad, _limits(args))
        with _open_out(args.out) as fh:
            fh.write("h,beta,R\n")
            for h, beta, value in rows:
                fh.write(f"{h!r},{beta!r},{value!r}\n")
    else:
        rows2 = analysis.scan_r_of_h(args.beta, h_values, quad, _limits(args))
        with _open_out(args.out) as fh:
            fh.write("h,R\n")
            for h, value in rows2:
                fh.write(f"{h!r},{value!r}\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavres",
        description=(
            "Billiard tracing and normalized mean-resistance computation "
            "for 2D wall cavities."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="trace one trajectory and emit its polyline")
    _add_shape_args(p)
    p.add_argument("--x", type=float, required=True, help="entry abscissa in (-1/2, 1/2)")
    p.add_argument("--phi", type=float, required=True, help="entry angle")
    p.add_argument("--radians", action="store_true", help="interpret --phi in radians")
    p.add_argument("--max-reflections", type=int, default=1000)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("resistance", help="compute the cavity resistance")
    _add_shape_args(p)
    _add_quad_args(p)
    p.set_defaults(func=_cmd_resistance)

    p = sub.add_parser("body", help="resistance of a disc tiled with equal cavities")
    p.add_argument("--cavities", type=int, required=True, help="number of cavities")
    p.add_argument(
        "--cavity-r", type=float, required=True, help="single-cavity resistance"
    )
    p.set_defaults(func=_cmd_body)

    p = sub.add_parser("optimize", help="maximize resistance over a shape family")
    p.add_argument(
        "--family",
        default="quadratic",
        help="shape family: quadratic or polyline-N (default quadratic)",
    )
    p.add_argument(
        "--method",
        choices=("nelder-mead", "pattern-search"),
        default="nelder-mead",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=1, help="number of random starts")
    p.add_argument(
        "--budget", type=int, default=500, help="evaluation budget per start"
    )
    p.add_argument(
        "--search-n", type=int, default=400, help="objective grid during the search"
    )
    p.add_argument(
        "--report-n", type=int, default=2000, help="grid for the reported best value"
    )
    p.add_argument("--trace-out", help="CSV path for the incumbent trace")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("census", help="trace random entries and emit a CSV census")
    _add_shape_args(p)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-reflections", type=int, default=1000)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_census)

    p = sub.add_parser("verify", help="run the empirical theorem checks")
    _add_shape_args(p)
    p.add_argument(
        "--suite", choices=("theorems", "appendix", "all"), default="all"
    )
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument(
        "--grid",
        type=int,
        default=0,
        help="also check an NxN deterministic grid above the critical angle",
    )
    p.add_argument("--max-reflections", type=int, default=1000)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("scan", help="tabulate R over quadratic-family parameters")
    p.add_argument("--beta", type=float, default=0.0, help="fixed beta for 1-D scans")
    p.add_argument(
        "--h-range", required=True, metavar="LO:HI:STEP", help="grid of h values"
    )
    p.add_argument(
        "--beta-range",
        metavar="LO:HI:STEP",
        help="grid of beta values (turns the scan into a 2-D grid)",
    )
    _add_quad_args(p)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_scan)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


run = main


if __name__ == "__main__":
    sys.exit(main())
