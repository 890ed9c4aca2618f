"""Command-line front end: ``flatkit check|verify|decompose|show-frelated``."""

from __future__ import annotations

import argparse
import json
import sys as _sys
from fractions import Fraction

from .config import Config
from .decompose import FLAT, NOT_FLAT, run
from .symbolic import ExprSyntaxError, SymbolicError, to_text
from .symbolic.errors import UnknownSymbol
from .system import SystemFileError, load_system
from .verify import (InvalidCandidate, NotVerified, Refuted, Verified,
                     frelated_from_flat_output, verify_candidate)

EXIT = {FLAT: 0, NOT_FLAT: 2}
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 3


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="system description file")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--trials", type=int, default=8,
                        help="random points per generic-rank test")
    common.add_argument("--max-shift", type=int, default=None,
                        help="shift budget of the verifier (default n+q+2)")
    common.add_argument("--one-dim", action="store_true",
                        help="use a single projectable direction per step")
    common.add_argument("--explore-branches", action="store_true",
                        help="report the flat output of every elimination branch")
    common.add_argument("--report", metavar="PATH", help="write a JSON report")
    common.add_argument("--quiet", action="store_true", help="suppress the trace")
    p = argparse.ArgumentParser(prog="flatkit",
                                description="Difference flatness of x+ = f(x,u).")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="decide flatness")
    sub.add_parser("decompose", parents=[common], help="print every step")
    v = sub.add_parser("verify", parents=[common], help="verify a candidate")
    v.add_argument("--output", action="append", required=True,
                   help="one candidate component (repeat m times)")
    f = sub.add_parser("show-frelated", parents=[common],
                       help="f-related pair from a known flat output")
    f.add_argument("--output", action="append", required=True)
    f.add_argument("--component", type=int, default=1, help="1-based index s")
    f.add_argument("--const", action="append", default=[], metavar="u=VALUE",
                   help="constant for the shifted input u (default: equilibrium)")
    return p


def _config(args):
    return Config(seed=args.seed, trials=args.trials, one_dim=args.one_dim,
                  explore_branches=args.explore_branches, max_shift=args.max_shift)


def _write_report(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _say(args, *lines):
    if not args.quiet:
        for line in lines:
            print(line)


def cmd_check(args, trace=False):
    system = load_system(args.file)
    report = run(system, _config(args))
    if trace:
        for step in report.steps:
            _say(args, *format_step(step))
    print(f"verdict: {report.verdict}")
    if report.flat_output:
        print("flat output: (" + ", ".join(to_text(e) for e in report.flat_output) + ")")
    if report.reason:
        print(f"reason: {report.reason}")
    for b in report.branches:
        _say(args, "branch: (" + ", ".join(to_text(e) for e in b) + ")")
    _say(args, f"steps: {len(report.steps)}",
         "verified: symbolic={symbolic} numeric={numeric}".format(**report.verified))
    if args.report:
        _write_report(args.report, report.to_json())
    return EXIT.get(report.verdict, EXIT_INCONCLUSIVE)


def format_step(step):
    d = step.to_json()
    lines = [f"== step {step.index} ({step.kind})"]
    lines += ["  " + l for l in d["system"][1:]]
    if "chart" in d:
        lines.append("  adapted chart h = (" + ", ".join(d["chart"]) + ")")
    for key, label in (("distribution", "D"), ("pushforward", "f_*D")):
        if key in d:
            lines.append(f"  {label} = {d[key]}")
    for key, label in (("input_transformation", "input transformation"),
                       ("state_transformation", "state transformation")):
        if key in d:
            t = d[key]
            lines.append(f"  {label}: " + ", ".join(f"{k} = {v}" for k, v in t.items()
                                                   if k not in ("inverse", "assumptions")))
    if "subsystem" in d:
        lines.append("  subsystem:")
        lines += ["    " + l for l in d["subsystem"][1:]]
    if "new_inputs" in d:
        lines.append("  subsystem inputs: " + ", ".join(f"{k} = {v}" for k, v in
                                                       d["new_inputs"].items()))
    lines.append("  eliminated outputs: (" + ", ".join(d["eliminated_outputs"]) + ")")
    for n in d.get("notes", []):
        lines.append(f"  note: {n}")
    if "assumptions" in d:
        lines.append("  assuming " + ", ".join(d["assumptions"]))
    if "reason" in d:
        lines.append(f"  termination: {d['reason']}")
    return lines


def _candidate(system, outputs):
    return [system.parse(o) for o in outputs]


def cmd_verify(args):
    system = load_system(args.file)
    result = verify_candidate(system, _candidate(system, args.output), _config(args))
    data = {"candidate": list(args.output), "gaps": result.gaps}
    if isinstance(result, Verified):
        print(f"verified (R = {tuple(result.R)})")
        data.update(status="verified", R=list(result.R), symbolic=result.symbolic,
                    numeric=result.numeric.to_json() if result.numeric else None)
        p = result.parametrization
        if p is not None:
            for s, e in zip(system.states, p.F_x):
                _say(args, f"  {s.label} = {to_text(e)}")
            for u, e in zip(system.inputs, p.F_u):
                _say(args, f"  {u.label} = {to_text(e)}")
            data["parametrization"] = {v.label: to_text(e) for v, e in
                                       zip(system.coords, p.F_x + p.F_u)}
        _say(args, f"  symbolic: {result.symbolic}, numeric: {result.numeric is not None}")
        for n in result.notes:
            _say(args, f"  note: {n}")
        code = 0
    elif isinstance(result, Refuted):
        print(f"refuted: {result.reason}")
        data.update(status="refuted", reason=result.reason)
        code = 2
    else:
        print(f"not verified ({result.kind}): {result.reason}")
        data.update(status="not_verified", kind=result.kind, reason=result.reason)
        code = EXIT_INCONCLUSIVE
    if args.report:
        _write_report(args.report, data)
    return code


def cmd_show_frelated(args):
    system = load_system(args.file)
    result = verify_candidate(system, _candidate(system, args.output), _config(args))
    if isinstance(result, Refuted):
        print(f"refuted: {result.reason}")
        return 2
    if not isinstance(result, Verified) or result.parametrization is None:
        print("no symbolic parametrization available")
        return EXIT_INCONCLUSIVE
    constants = {}
    for item in args.const:
        name, _, value = item.partition("=")
        constants[name.strip()] = Fraction(value.strip())
    s = args.component - 1
    if not 0 <= s < system.m:
        raise InvalidCandidate(f"component index must lie in 1..{system.m}")
    v, w = frelated_from_flat_output(system, result.parametrization, s, constants)
    print(f"v = {v.to_text()}")
    print(f"w = {w.to_text()}")
    if args.report:
        _write_report(args.report, {"v": v.to_text(), "w": w.to_text(),
                                    "R": list(result.R), "component": args.component})
    return 0


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args)
        if args.command == "decompose":
            return cmd_check(args, trace=True)
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_show_frelated(args)
    except (OSError, SystemFileError, ExprSyntaxError, UnknownSymbol, InvalidCandidate,
            ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_ERROR
    except SymbolicError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    _sys.exit(main())
