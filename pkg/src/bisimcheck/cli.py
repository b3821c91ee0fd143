"""Command-line interface.

``check`` decides every goal of a spec file (exit 0 when all hold, 1 when any
fails, 2 on input errors); ``synth`` prints the finite system of a bound
expression; ``expr`` prints an expression for a state of a user-declared
system; ``translate`` prints the expression of a bound process.

Verdict output on stdout is byte-deterministic; per-goal timing and size
statistics go to stderr.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .bisim import (
    Bisimilar,
    decide_state,
    decide_with_stats,
    render_experiment,
    render_mismatch,
    render_step,
)
from .ccs import termination_lattice, translate
from .errors import BisimcheckError
from .expr import check_expression, render_expr
from .specfile import parse_spec_file
from .synth import SynthLimit, coalgebra_to_dot, coalgebra_to_json, synthesize, to_expression

MAX_STATES_ENV = "COALG_MAX_STATES"


@dataclass
class GoalResult:
    label: str
    verdict: object
    states: tuple
    rounds: int
    seconds: float


@dataclass
class RunReport:
    results: list

    @property
    def all_bisimilar(self):
        return all(isinstance(r.verdict, Bisimilar) for r in self.results)


def _limit_from(args):
    if args.max_states is not None:
        return SynthLimit(args.max_states)
    env = os.environ.get(MAX_STATES_ENV)
    if env:
        return SynthLimit(int(env))
    return SynthLimit()


def _witness_lines(verdict, stats):
    lines = []
    for s, t in sorted(verdict.witness.pairs):
        lines.append(f"{stats.left.state_label(s)} ~ {stats.right.state_label(t)}")
    return lines


def run_check(sf, *, unit=True, limit=SynthLimit(), witness=False, as_json=False,
              jobs=1, out=sys.stdout, err=sys.stderr):
    def one(goal):
        t0 = time.perf_counter()
        verdict, stats = decide_with_stats(sf.functor, goal.lhs, goal.rhs, limit, unit=unit)
        return GoalResult(goal.label, verdict, (stats.states_left, stats.states_right),
                          stats.rounds, time.perf_counter() - t0), stats

    if jobs > 1 and len(sf.goals) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, sf.goals))
    else:
        outcomes = [one(goal) for goal in sf.goals]

    report = RunReport([res for res, _ in outcomes])
    if as_json:
        payload = []
        for res, stats in outcomes:
            entry = {
                "goal": res.label,
                "verdict": "bisimilar" if isinstance(res.verdict, Bisimilar) else "not-bisimilar",
                "states": list(res.states),
                "rounds": res.rounds,
            }
            if isinstance(res.verdict, Bisimilar):
                entry["witness"] = [
                    [stats.left.state_label(s), stats.right.state_label(t)]
                    for s, t in sorted(res.verdict.witness.pairs)
                ]
            else:
                exp = res.verdict.experiment
                entry["experiment"] = {
                    "steps": [render_step(s) for s in exp.steps],
                    "mismatch": render_mismatch(exp.mismatch),
                }
            payload.append(entry)
        print(json.dumps({"goals": payload}, indent=2), file=out)
    else:
        for res, stats in outcomes:
            if isinstance(res.verdict, Bisimilar):
                print(f'goal "{res.label}": bisimilar', file=out)
                if witness:
                    for line in _witness_lines(res.verdict, stats):
                        print(f"  {line}", file=out)
            else:
                print(f'goal "{res.label}": NOT bisimilar', file=out)
                print(f"  experiment: {render_experiment(res.verdict.experiment)}", file=out)
    for res, _ in outcomes:
        print(
            f'# goal "{res.label}": states {res.states[0]}x{res.states[1]}, '
            f"rounds {res.rounds}, {res.seconds * 1000:.1f}ms",
            file=err,
        )
    return report


def _cmd_check(sf, args, out, err):
    report = run_check(
        sf,
        unit=not args.no_unit,
        limit=_limit_from(args),
        witness=args.witness,
        as_json=args.json,
        jobs=args.jobs,
        out=out,
        err=err,
    )
    return 0 if report.all_bisimilar else 1


def _cmd_synth(sf, args, out, err):
    if args.expr not in sf.exprs:
        raise BisimcheckError(f"unknown expression {args.expr!r}")
    certified = check_expression(sf.exprs[args.expr], sf.functor)
    coalgebra = synthesize(sf.functor, certified, _limit_from(args), unit=not args.no_unit)
    if args.dot:
        out.write(coalgebra_to_dot(coalgebra))
    elif args.json:
        print(coalgebra_to_json(coalgebra), file=out)
    else:
        from .functor import render_functor
        print(f"functor: {render_functor(coalgebra.functor)}", file=out)
        print(f"states: {len(coalgebra.states)}", file=out)
        from .semantics import render_struct
        for i in range(len(coalgebra.states)):
            value = render_struct(coalgebra.structure[i])
            print(f"s{i} = {value}    # {coalgebra.state_label(i)}", file=out)
    return 0


def _cmd_expr(sf, args, out, err):
    if args.coalgebra not in sf.coalgebras:
        raise BisimcheckError(f"unknown coalgebra {args.coalgebra!r}")
    coalgebra = sf.coalgebras[args.coalgebra]
    if args.state not in coalgebra.states:
        raise BisimcheckError(f"unknown state {args.state!r}")
    certified = to_expression(coalgebra, args.state)
    print(render_expr(certified.expr), file=out)
    if args.verify:
        ok = decide_state(sf.functor, certified.expr, coalgebra, args.state, _limit_from(args))
        print(f"verify: {'ok' if ok else 'FAILED'}", file=out)
        return 0 if ok else 1
    return 0


def _cmd_translate(sf, args, out, err):
    if args.process not in sf.procs:
        raise BisimcheckError(f"unknown process {args.process!r}")
    lattice = termination_lattice(sf.functor)
    expr = translate(sf.procs[args.process], lattice)
    check_expression(expr, sf.functor)
    print(render_expr(expr), file=out)
    return 0


def build_arg_parser():
    parser = argparse.ArgumentParser(
        prog="bisimcheck",
        description="Decide behavioural equivalence of expressions over a declared system type.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="specification file")
        p.add_argument("--max-states", type=int, default=None,
                       help=f"synthesis state cap (or ${MAX_STATES_ENV})")
        p.add_argument("--no-unit", action="store_true",
                       help="keep phi summands when normalizing")

    p_check = sub.add_parser("check", help="decide every goal in the file")
    common(p_check)
    p_check.add_argument("--witness", action="store_true", help="print witness relations")
    p_check.add_argument("--json", action="store_true", help="machine-readable verdicts")
    p_check.add_argument("--jobs", type=int, default=1, help="decide goals concurrently")

    p_synth = sub.add_parser("synth", help="synthesize the system of a bound expression")
    common(p_synth)
    p_synth.add_argument("--expr", required=True, help="expression binding to synthesize")
    fmt = p_synth.add_mutually_exclusive_group()
    fmt.add_argument("--dot", action="store_true", help="Graphviz output")
    fmt.add_argument("--json", action="store_true", help="JSON output")

    p_expr = sub.add_parser("expr", help="extract an expression from a coalgebra state")
    common(p_expr)
    p_expr.add_argument("--coalgebra", required=True)
    p_expr.add_argument("--state", required=True)
    p_expr.add_argument("--verify", action="store_true",
                        help="check the result against the state it came from")

    p_tr = sub.add_parser("translate", help="translate a bound process to an expression")
    common(p_tr)
    p_tr.add_argument("--process", required=True)
    return parser


_COMMANDS = {
    "check": _cmd_check,
    "synth": _cmd_synth,
    "expr": _cmd_expr,
    "translate": _cmd_translate,
}


def main(argv=None, out=sys.stdout, err=sys.stderr):
    args = build_arg_parser().parse_args(argv)
    try:
        with open(args.file, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return 2
    try:
        sf = parse_spec_file(text)
        return _COMMANDS[args.command](sf, args, out, err)
    except BisimcheckError as exc:
        print(f"error: {args.file}: {exc}", file=err)
        return 2


def console_main():
    raise SystemExit(main())
