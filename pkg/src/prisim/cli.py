"""Command-line surface: scenario parsing, run/check/diff.

Scenario files are one directive per line (``#`` starts a comment):

    stages N
    assign <level> R|P|S <index>
    ce <j> <stage> <bits>
    phi <e> <stage> <a-node> <b-node>
    phi <e> honest [delay <d>]
    mi <i> <stage> <oracle-bits> <x> <y>
    copier <i> delay <d>
    check <name>|all

``-`` stands for the empty bit string.  Traces are line-delimited JSON
records with sorted keys, so identical runs are byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .engine import Engine, Scenario
from .graphs import ConstructionError, to_dot
from .verifier import CHECKS, run_checks

BIT_EMPTY = "-"


class ScenarioSyntaxError(Exception):
    pass


def _bits(token: str, lineno: int) -> str:
    if token == BIT_EMPTY:
        return ""
    if token.strip("01"):
        raise ScenarioSyntaxError(f"line {lineno}: bad bit string {token!r}")
    return token


def _int(token: str, lineno: int, minimum: int = 0) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ScenarioSyntaxError(
            f"line {lineno}: expected integer, got {token!r}") from None
    if value < minimum:
        raise ScenarioSyntaxError(f"line {lineno}: {value} is below {minimum}")
    return value


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    saw_stages = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        word, args = parts[0], parts[1:]
        if word == "stages":
            if saw_stages:
                raise ScenarioSyntaxError(f"line {lineno}: duplicate stages")
            if len(args) != 1:
                raise ScenarioSyntaxError(f"line {lineno}: stages takes one value")
            sc.stages = _int(args[0], lineno, minimum=1)
            saw_stages = True
        elif word == "assign":
            if len(args) != 3 or args[1] not in ("R", "P", "S"):
                raise ScenarioSyntaxError(
                    f"line {lineno}: usage: assign <level> R|P|S <index>")
            sc.assignment[_int(args[0], lineno)] = (
                args[1], _int(args[2], lineno))
        elif word == "ce":
            if len(args) != 3:
                raise ScenarioSyntaxError(
                    f"line {lineno}: usage: ce <j> <stage> <bits>")
            sc.ce.append((_int(args[0], lineno), _int(args[1], lineno),
                          _bits(args[2], lineno)))
        elif word == "phi":
            if len(args) >= 2 and args[1] == "honest":
                if len(args) == 2:
                    delay = 0
                elif len(args) == 4 and args[2] == "delay":
                    delay = _int(args[3], lineno)
                else:
                    raise ScenarioSyntaxError(
                        f"line {lineno}: usage: phi <e> honest [delay <d>]")
                sc.phi_honest[_int(args[0], lineno)] = delay
            elif len(args) == 4:
                sc.phi.append(tuple(_int(a, lineno) for a in args))
            else:
                raise ScenarioSyntaxError(
                    f"line {lineno}: usage: phi <e> <stage> <a> <b>")
        elif word == "mi":
            if len(args) != 5:
                raise ScenarioSyntaxError(
                    f"line {lineno}: usage: mi <i> <stage> <bits> <x> <y>")
            sc.mi.append((_int(args[0], lineno), _int(args[1], lineno),
                          _bits(args[2], lineno), _int(args[3], lineno),
                          _int(args[4], lineno)))
        elif word == "copier":
            if len(args) != 3 or args[1] != "delay":
                raise ScenarioSyntaxError(
                    f"line {lineno}: usage: copier <i> delay <d>")
            sc.copiers[_int(args[0], lineno)] = _int(args[2], lineno)
        elif word == "check":
            if len(args) != 1 or (args[0] != "all" and args[0] not in CHECKS):
                raise ScenarioSyntaxError(
                    f"line {lineno}: unknown check {' '.join(args)!r}")
            sc.checks.append(args[0])
        else:
            raise ScenarioSyntaxError(
                f"line {lineno}: unknown directive {word!r}")
    return sc


def serialize_scenario(sc: Scenario) -> str:
    lines = [f"stages {sc.stages}"]
    for level in sorted(sc.assignment):
        kind, index = sc.assignment[level]
        lines.append(f"assign {level} {kind} {index}")
    for j, st, bits in sc.ce:
        lines.append(f"ce {j} {st} {bits or BIT_EMPTY}")
    for e, st, a, b in sc.phi:
        lines.append(f"phi {e} {st} {a} {b}")
    for e in sorted(sc.phi_honest):
        lines.append(f"phi {e} honest delay {sc.phi_honest[e]}")
    for i, st, bits, x, y in sc.mi:
        lines.append(f"mi {i} {st} {bits or BIT_EMPTY} {x} {y}")
    for i in sorted(sc.copiers):
        lines.append(f"copier {i} delay {sc.copiers[i]}")
    for name in sc.checks:
        lines.append(f"check {name}")
    return "\n".join(lines) + "\n"


def trace_to_lines(trace: list[dict]) -> str:
    return "".join(json.dumps(ev, sort_keys=True) + "\n" for ev in trace)


def load_trace(path: str) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _check_names(flag: str | None, sc: Scenario) -> list[str]:
    if flag:
        return [n.strip() for n in flag.split(",") if n.strip()]
    return sc.checks


def cmd_run(args: argparse.Namespace) -> int:
    with open(args.scenario) as fh:
        sc = parse_scenario(fh.read())
    if args.stages is not None:
        if args.stages < 1:
            print("run: --stages must be >= 1", file=sys.stderr)
            return 2
        sc.stages = args.stages
    engine = Engine(sc)
    if args.dot_dir:
        os.makedirs(args.dot_dir, exist_ok=True)
        for s in range(1, sc.stages + 1):
            engine.run_stage()
            for g in (engine.A, engine.B):
                name = f"{g.side}_{s:04d}.dot"
                with open(os.path.join(args.dot_dir, name), "w") as fh:
                    fh.write(to_dot(g))
    else:
        engine.run()
    text = trace_to_lines(engine.trace)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    names = _check_names(args.check, sc)
    if not names:
        return 0
    reports = run_checks(names, engine.trace, sc, engine)
    for rep in reports:
        print(rep.render())
    return 0 if all(r.passed for r in reports) else 1


def cmd_check(args: argparse.Namespace) -> int:
    trace = load_trace(args.trace)
    sc = None
    if args.scenario:
        with open(args.scenario) as fh:
            sc = parse_scenario(fh.read())
    names = _check_names(args.check, sc) if (args.check or sc) else ["all"]
    if not names:
        names = ["all"]
    needs_scenario = "all" in names or "requirements_at_horizon" in names
    if needs_scenario and sc is None:
        print("check: requirements_at_horizon needs --scenario",
              file=sys.stderr)
        return 2
    reports = run_checks(names, trace, sc)
    for rep in reports:
        print(rep.render())
    return 0 if all(r.passed for r in reports) else 1


def cmd_diff(args: argparse.Namespace) -> int:
    t1 = load_trace(args.a)
    t2 = load_trace(args.b)
    n = min(len(t1), len(t2))
    for i in range(n):
        if t1[i] != t2[i]:
            e1, e2 = t1[i], t2[i]
            print(f"diverge at event {i} (stage {e1['stage']}): "
                  f"{e1['kind']} vs {e2['kind']}"
                  if (e1["stage"], e1["kind"]) != (e2["stage"], e2["kind"])
                  else f"diverge at event {i} (stage {e1['stage']}, "
                       f"{e1['kind']}): payloads differ")
            return 1
    if len(t1) == len(t2):
        print("identical")
        return 0
    longer = "B" if len(t2) > len(t1) else "A"
    print(f"prefix: shorter trace is a prefix of {longer} "
          f"({n} shared events, {max(len(t1), len(t2)) - n} extra)")
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="prisim",
        description="scenario-driven priority-construction simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and emit its trace")
    p_run.add_argument("scenario", help="scenario file")
    p_run.add_argument("--stages", type=int, default=None,
                       help="override the scenario's stage count")
    p_run.add_argument("--trace", default=None,
                       help="write the trace here instead of stdout")
    p_run.add_argument("--check", default=None,
                       help="comma-separated checks (overrides the scenario)")
    p_run.add_argument("--dot-dir", default=None,
                       help="write per-stage DOT snapshots of both graphs")
    p_run.add_argument("--seed", type=int, default=None,
                       help="accepted for interface stability; runs are "
                            "deterministic and ignore it")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="verify a recorded trace")
    p_check.add_argument("--trace", required=True, help="trace file")
    p_check.add_argument("--scenario", default=None,
                         help="scenario file (needed for the horizon check)")
    p_check.add_argument("--check", default=None,
                         help="comma-separated checks (default: all)")
    p_check.set_defaults(func=cmd_check)

    p_diff = sub.add_parser("diff", help="structurally compare two traces")
    p_diff.add_argument("a")
    p_diff.add_argument("b")
    p_diff.set_defaults(func=cmd_diff)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioSyntaxError, ConstructionError, OSError,
            json.JSONDecodeError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
