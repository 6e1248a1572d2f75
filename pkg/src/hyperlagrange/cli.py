"""Command-line front end.

Exit codes: 0 success with results, 1 success without results, 2 user error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import lagrange, mudiff
from .expr import ParseError, ProblemDef, ProblemError, load_problem
from .hyperreal import ConfigurationError, NonUnitDivisorError, Tolerance, render

EXIT_OK, EXIT_EMPTY, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(record: dict, out):
    out.write(json.dumps(record) + "\n")


def _parse_assignment(text: str, p: ProblemDef) -> list[float]:
    parts = [s.strip() for s in text.split(",") if s.strip()]
    if parts and all("=" not in s for s in parts):
        if len(parts) != p.n:
            raise UsageError(f"--at expects {p.n} values, got {len(parts)}")
        try:
            return [float(s) for s in parts]
        except ValueError as e:
            raise UsageError(f"--at: {e}") from None
    values: dict[str, float] = {}
    for s in parts:
        name, sep, val = s.partition("=")
        name = name.strip()
        if not sep:
            raise UsageError(f"--at: expected name=value, got {s!r}")
        if name not in p.vars:
            raise UsageError(f"--at: unknown variable {name!r}")
        if name in values:
            raise UsageError(f"--at: {name!r} assigned twice")
        try:
            values[name] = float(val)
        except ValueError:
            raise UsageError(f"--at: bad value for {name!r}: {val!r}") from None
    missing = [v for v in p.vars if v not in values]
    if missing:
        raise UsageError(f"--at: missing value for {', '.join(missing)}")
    return [values[v] for v in p.vars]


def cmd_grad(args, out) -> int:
    p = load_problem(args.file)
    at = _parse_assignment(args.at, p)
    g = mudiff.gradient(p.objective, mudiff.point(at, p.generators, p.order))
    partials = [
        {"var": v, "value": render(d), "st": d.st()} for v, d in zip(p.vars, g.partials)
    ]
    if args.table:
        out.write(f"gradient at ({', '.join(f'{v}={a:g}' for v, a in zip(p.vars, at))}), "
                  f"step {g.step_name}\n")
        width = max(len(v) for v in p.vars)
        for d in partials:
            out.write(f"  d/d{d['var']:<{width}}  st={d['st']:<14.12g} {d['value']}\n")
    else:
        _emit({
            "kind": "gradient",
            "at": dict(zip(p.vars, at)),
            "step": g.step_name,
            "partials": partials,
        }, out)
    return EXIT_OK


def _point_record(p: ProblemDef, c: lagrange.CriticalPoint) -> dict:
    rec = {
        "kind": "critical-point",
        "point": dict(zip(p.vars, c.point)),
        "mu": c.mu,
        "lambda": list(c.lambdas),
        "lambda_over_mu": None if c.abnormal else list(c.ratios()),
        "residual": c.residual_norm,
        "objective_st": c.objective_st,
        "objective": render(lagrange.objective_value(p, c)),
        "abnormal": c.abnormal,
        "constraint_degenerate": c.constraint_degenerate,
        "classification": list(c.classification),
    }
    return rec


def _table(p: ProblemDef, points, out):
    rows = [("#", "point", "mu", "lambda", "st(f)", "residual", "flags", "class")]
    for k, c in enumerate(points, 1):
        flags = ",".join(f for f, on in (("abnormal", c.abnormal),
                                          ("degenerate", c.constraint_degenerate)) if on)
        rows.append((
            str(k),
            "(" + ", ".join(f"{v:.9g}" for v in c.point) + ")",
            f"{c.mu:.6g}",
            "(" + ", ".join(f"{v:.6g}" for v in c.lambdas) + ")",
            f"{c.objective_st:.10g}",
            f"{c.residual_norm:.2e}",
            flags or "-",
            "/".join(c.classification),
        ))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        out.write("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip() + "\n")


def cmd_solve(args, out) -> int:
    p = load_problem(args.file)
    if args.tol is not None:
        p = replace(p, tolerance=Tolerance(args.tol))
    p.check_dimensions()
    opts = lagrange.SolverOptions(seeds=args.seeds, rng_seed=args.rng_seed)
    report = lagrange.solve(p, opts, general=args.general)
    points = lagrange.classify(p, report.points)
    if args.table:
        if points:
            _table(p, points, out)
        out.write(report.diagnostic() + "\n")
    else:
        for c in points:
            _emit(_point_record(p, c), out)
        _emit({
            "kind": "diagnostic",
            "message": report.diagnostic(),
            "points": len(points),
            "seeds": report.seeds,
            "converged": report.converged,
            "abandoned": report.abandoned,
            "rejected": report.rejected,
        }, out)
    return EXIT_OK if points else EXIT_EMPTY


def cmd_check(args, out) -> int:
    p = load_problem(args.file)
    p.check_dimensions()
    _emit({
        "kind": "diagnostic",
        "message": "ok",
        "generators": list(p.generators.names),
        "vars": list(p.vars),
        "constraints": p.m,
        "trunc": p.order,
        "tol": p.tolerance.tol,
    }, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperlagrange",
        description="Mu-differentiation and Lagrange multipliers for hyperreal-perturbed problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--json", dest="table", action="store_false", help="JSON lines (default)")
        g.add_argument("--table", dest="table", action="store_true", help="human-readable table")
        sp.set_defaults(table=False)

    g = sub.add_parser("grad", help="gradient of the objective at a standard point")
    g.add_argument("file")
    g.add_argument("--at", required=True, help="x=1,y=2,z=0 or 1,2,0")
    output_flags(g)
    g.set_defaults(func=cmd_grad)

    s = sub.add_parser("solve", help="Lagrange critical points")
    s.add_argument("file")
    s.add_argument("--general", action="store_true", help="general rule with mu (abnormal cases)")
    s.add_argument("--seeds", type=int, default=64)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--rng-seed", type=int, default=0)
    output_flags(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="parse and validate a problem file")
    c.add_argument("file")
    c.set_defaults(func=cmd_check)
    return parser


def _join_at(argv: list[str]) -> list[str]:
    # argparse reads "--at -1,2,0" as a missing value followed by an option
    joined, k = [], 0
    while k < len(argv):
        if argv[k] == "--at" and k + 1 < len(argv):
            joined.append("--at=" + argv[k + 1])
            k += 2
        else:
            joined.append(argv[k])
            k += 1
    return joined


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = _join_at(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args, out)
    except (UsageError, ParseError, ProblemError, ConfigurationError,
            NonUnitDivisorError, ZeroDivisionError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
