"""Command-line front end: solve, translate, check, props.

Output is JSON with sorted keys (translate prints program text), so runs
with identical inputs, flags and seeds are byte-identical.  Exit codes:
0 success (even with zero models), 1 usage or parse error, 2 budget
exceeded, 3 property violation found.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .checker import (
    SUITE_NAMES,
    context_family,
    equivalent,
    run_property_suite,
    stable_equivalent,
    strong_equiv_sampled,
)
from .errors import BudgetError, HtcError, ParseError
from .parser import parse_theory, pretty_print
from .semantics import ht_models, stable_models, valuation_key
from .syntax import LCRule, desugar_aggregates, desugar_theory, make_theory
from .transforms import eliminate_conditionals, unfold_rule

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2
EXIT_VIOLATION = 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="htc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="enumerate stable models of a file")
    solve.add_argument("file")
    solve.add_argument("--ht", action="store_true", help="list HT models instead")
    solve.add_argument("--json", action="store_true", help="JSON output (the default)")
    solve.add_argument("--models", type=int, default=None, help="print at most N models")
    _common(solve)

    translate = sub.add_parser("translate", help="print a transformed program")
    translate.add_argument("file")
    translate.add_argument(
        "--pass",
        dest="pass_name",
        choices=("desugar", "unfold", "delta", "all"),
        required=True,
    )
    _common(translate)

    check = sub.add_parser("check", help="compare two files")
    check.add_argument("file_a")
    check.add_argument("file_b")
    check.add_argument("--stable", action="store_true", help="compare stable models")
    check.add_argument("--project", default=None, help="comma-separated variables")
    check.add_argument(
        "--strong", action="store_true", help="sampled projected strong equivalence"
    )
    _common(check)

    props = sub.add_parser("props", help="run a property suite")
    props.add_argument("--suite", required=True, choices=SUITE_NAMES)
    props.add_argument("--seed", type=int, default=0)
    props.add_argument("--count", type=int, default=50)
    _common(props)
    return parser


def _common(sub):
    sub.add_argument(
        "--max-interps",
        type=int,
        default=None,
        help="interpretation budget (also HTC_MAX_INTERPS)",
    )
    sub.add_argument("--jobs", type=int, default=1, help="parallel workers")


def _budget(args):
    if args.max_interps is not None:
        return args.max_interps
    env = os.environ.get("HTC_MAX_INTERPS")
    return int(env) if env else None


def _load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_theory(fh.read())


def _emit(doc):
    print(json.dumps(doc, sort_keys=True))


def cmd_solve(args) -> int:
    thy = _load(args.file)
    visible = thy.spec.variables()
    budget = _budget(args)
    if args.ht:
        models = ht_models(thy, budget=budget, jobs=args.jobs)
        seen, out = set(), []
        for i in models:
            pair = (i.h.project(visible), i.t.project(visible))
            if pair not in seen:
                seen.add(pair)
                out.append({"h": pair[0].to_json(), "t": pair[1].to_json()})
        if args.models is not None:
            out = out[: max(args.models, 0)]
        _emit({"ht_models": out})
        return EXIT_OK
    models = stable_models(thy, budget=budget, jobs=args.jobs)
    projected = []
    seen = set()
    for t in models:
        p = t.project(visible)
        if p not in seen:
            seen.add(p)
            projected.append(p)
    projected.sort(key=lambda v: valuation_key(thy.spec, v))
    if args.models is not None:
        projected = projected[: max(args.models, 0)]
    _emit({"stable_models": [v.to_json() for v in projected]})
    return EXIT_OK


def cmd_translate(args) -> int:
    thy = _load(args.file)
    budget = _budget(args)
    if args.pass_name == "desugar":
        result = desugar_theory(thy)
    elif args.pass_name == "delta":
        result = eliminate_conditionals(thy, budget=budget).theory()
    else:
        # unfold first on the aggregate-free surface, so a later delta still
        # sees each conditional occurrence before comparison expansion
        surface = desugar_aggregates(thy)
        statements = []
        for stmt in surface.statements:
            if isinstance(stmt, LCRule):
                statements.extend(unfold_rule(stmt, distribute=False))
            else:
                statements.append(stmt)
        result = make_theory(surface.spec, statements)
        if args.pass_name == "all":
            result = eliminate_conditionals(result, budget=budget).theory()
        else:
            result = desugar_theory(result)
    sys.stdout.write(pretty_print(result))
    return EXIT_OK


def cmd_check(args) -> int:
    a = _load(args.file_a)
    b = _load(args.file_b)
    budget = _budget(args)
    project = (
        tuple(n.strip() for n in args.project.split(",") if n.strip())
        if args.project
        else None
    )
    if args.strong:
        report = stable_equivalent(a, b, project=project, budget=budget)
        if report.equal:
            names = project or a.spec.variables()
            family = context_family(desugar_theory(a).spec, names)
            report = strong_equiv_sampled(
                a, b, project=project, contexts=family, budget=budget
            )
    elif args.stable:
        report = stable_equivalent(a, b, project=project, budget=budget)
    else:
        report = equivalent(a, b, budget=budget)
    _emit({"report": report.to_json()})
    return EXIT_OK


def cmd_props(args) -> int:
    report = run_property_suite(
        args.suite, seed=args.seed, count=args.count, jobs=args.jobs
    )
    _emit({"report": report.to_json()})
    return EXIT_OK if report.ok else EXIT_VIOLATION


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "solve": cmd_solve,
        "translate": cmd_translate,
        "check": cmd_check,
        "props": cmd_props,
    }
    try:
        return handlers[args.command](args)
    except BudgetError as exc:
        print(f"htc: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ParseError, OSError) as exc:
        print(f"htc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HtcError as exc:
        print(f"htc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"htc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
