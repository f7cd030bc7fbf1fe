"""Command-line frontend: ``polymaplab {analyze,levelset,flow,portrait,verify}``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .acceptance import run_suite
from .analyzer import AnalyzeOptions, analyze
from .flow import IntegratorConfig, integrate
from .hamiltonian import Window, hamiltonian_field
from .levels import branches_to_csv, trace_level
from .parser import ParseError, parse
from .svg import levelset_svg, portrait_svg

USAGE_ERROR = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str, n: int, what: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must be {n} comma-separated numbers")
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"{what} must be {n} comma-separated finite numbers")
    return vals


def window_arg(text: str) -> Window:
    vals = _floats(text, 4, "window")
    try:
        return Window(*vals)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def point_arg(text: str) -> tuple:
    return _floats(text, 2, "point")


def _poly(text: str, flag: str):
    try:
        return parse(text)
    except ParseError as exc:
        raise UsageError(f"cannot parse {flag}: {exc}\n{exc.caret()}")


def _write(path: Optional[str], data: str):
    if path is None or path == "-":
        sys.stdout.write(data)
    else:
        Path(path).write_text(data, encoding="utf-8")


def cmd_analyze(args) -> int:
    f, g = _poly(args.f, "--f"), _poly(args.g, "--g")
    if f.is_constant() or g.is_constant():
        raise UsageError("both components must be nonconstant")
    report = analyze(f, g, AnalyzeOptions(window=args.window, grid_n=args.grid_n))
    text = json.dumps(report.to_json(), indent=2) + "\n"
    if args.json:
        _write(args.json, text)
        print(f"verdict: {report.verdict}")
    else:
        sys.stdout.write(text)
    return report.exit_code


def cmd_levelset(args) -> int:
    f = _poly(args.f, "--f")
    if f.is_constant():
        raise UsageError("--f must be nonconstant")
    branches = trace_level(f, args.level, args.window)
    if args.format == "csv":
        _write(args.out, branches_to_csv(branches))
    else:
        _write(args.out, levelset_svg(f, args.level, branches, args.window))
    return 0


def cmd_flow(args) -> int:
    f = _poly(args.f, "--f")
    if not args.tmax >= 0 or not math.isfinite(args.tmax):
        raise UsageError("--tmax must be a finite nonnegative number")
    t_end = -args.tmax if args.backward else args.tmax
    traj = integrate(hamiltonian_field(f), args.p0, t_end, IntegratorConfig())
    _write(args.out, traj.to_csv())
    return 0


def cmd_portrait(args) -> int:
    f, g = _poly(args.f, "--f"), _poly(args.g, "--g")
    if f.is_constant() or g.is_constant():
        raise UsageError("both components must be nonconstant")
    _write(args.out, portrait_svg(f, g))
    return 0


def cmd_verify(args) -> int:
    if args.suite != "paper":
        raise UsageError(f"unknown suite {args.suite!r}; available: paper")
    results = run_suite()
    for r in results:
        print(r.line(), flush=True)
    n_ok = sum(r.ok for r in results)
    print(f"{n_ok}/{len(results)} criteria passed")
    return 0 if n_ok == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polymaplab", description="Planar polynomial map analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="classify a map (f, g)")
    a.add_argument("--f", required=True)
    a.add_argument("--g", required=True)
    a.add_argument("--window", type=window_arg, default=Window())
    a.add_argument("--grid-n", type=int, default=512)
    a.add_argument("--json", metavar="PATH", help="write the report here instead of stdout")
    a.set_defaults(run=cmd_analyze)

    ls = sub.add_parser("levelset", help="trace the level set f = u")
    ls.add_argument("--f", required=True)
    ls.add_argument("--level", type=float, required=True)
    ls.add_argument("--window", type=window_arg, default=Window())
    ls.add_argument("--out", metavar="PATH")
    ls.add_argument("--format", choices=("csv", "svg"), default="csv")
    ls.set_defaults(run=cmd_levelset)

    fl = sub.add_parser("flow", help="integrate the Hamiltonian field of f")
    fl.add_argument("--f", required=True)
    fl.add_argument("--p0", type=point_arg, required=True)
    fl.add_argument("--tmax", type=float, required=True)
    fl.add_argument("--backward", action="store_true")
    fl.add_argument("--out", metavar="PATH")
    fl.set_defaults(run=cmd_flow)

    pt = sub.add_parser("portrait", help="Poincare-disc portrait of H_f and H_g")
    pt.add_argument("--f", required=True)
    pt.add_argument("--g", required=True)
    pt.add_argument("--out", metavar="PATH", required=True)
    pt.set_defaults(run=cmd_portrait)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--suite", required=True)
    v.set_defaults(run=cmd_verify)
    return p


_VALUE_FLAGS = ("--f", "--g", "--p0", "--window", "--level")


def _glue_values(argv: list[str]) -> list[str]:
    """Turn ``--f -x`` into ``--f=-x`` so leading minus signs are not options."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_glue_values(argv))
    try:
        return args.run(args)
    except UsageError as exc:
        print(f"polymaplab: error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
