"""Command-line front end: compile, solve, bench, check."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from decimal import Decimal
from pathlib import Path

from .core import (
    DimacsError, RawCosts, from_normalized, map_fixing, parse_costs, parse_dimacs, parse_fixing,
)
from .driver import (
    CSV_HEADER, ArtifactError, build_compiled, compile_class, curve_csv_rows, estimate_curve, formula_hash,
    load_artifact, save_artifact,
)
from .learner import DEFAULT_NODE_BUDGET
from .oracle import brute_force
from .solver import MINSAT, SAT, NodeBudgetExceeded, solve

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSAT = 20
FULL_CHECK_LIMIT = 18

log = logging.getLogger("minsatc")


class CliError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _load_problem(cnf_path: str, costs_path: str | None, unit_costs: bool):
    formula = parse_dimacs(_read(cnf_path))
    if costs_path and unit_costs:
        raise CliError("--costs and --unit-costs are mutually exclusive")
    if costs_path:
        raw = parse_costs(_read(costs_path), formula.num_vars)
    elif unit_costs:
        raw = RawCosts.unit(formula.num_vars)
    else:
        raw = RawCosts.zeros(formula.num_vars)
    return formula, raw


def _is_artifact(path: str) -> bool:
    try:
        with open(path) as fh:
            head = fh.read(64).lstrip()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    return head.startswith("{")


def _fmt_cost(value: int, scale: int) -> str:
    if scale == 1:
        return str(value)
    return str((Decimal(value) / Decimal(scale)).normalize())


# -- compile --------------------------------------------------------------------


def cmd_compile(args) -> int:
    formula, raw = _load_problem(args.cnf, args.costs, args.unit_costs)
    compiled = build_compiled(formula, raw, clause_cap_factor=args.clause_cap)
    xn_before = len(compiled.partition.enumerated)
    t0 = time.perf_counter()
    compiled = compile_class(
        compiled,
        mode=args.mode,
        samples_per_level=args.samples,
        seed=args.seed,
        node_budget=args.node_budget,
        max_lemma_len=args.lemma_max_len,
        small_xn=args.small_xn,
    )
    elapsed = time.perf_counter() - t0
    save_artifact(compiled, args.output)
    print(f"clauses: {compiled.original_clause_count} -> {compiled.clause_count()}")
    print(f"lemmas: {len(compiled.lemmas)}  pairs: {len(compiled.pairs)}  deleted: {compiled.deleted_total}")
    print(f"|X_N|: {xn_before} -> {len(compiled.partition.enumerated)}")
    for step in compiled.log:
        print(f"{step.mode}: levels={len(step.levels)} stop={step.stop_reason} v={step.v_sequence()}")
    print(f"time: {elapsed:.2f}s  artifact: {args.output}")
    return EXIT_OK


# -- solve ----------------------------------------------------------------------


def cmd_solve(args) -> int:
    if _is_artifact(args.source):
        if args.costs or args.unit_costs:
            raise CliError("cost options apply to CNF input only; the artifact carries its own costs")
        compiled = load_artifact(args.source)
    else:
        formula, raw = _load_problem(args.source, args.costs, args.unit_costs)
        compiled = build_compiled(formula, raw)
    norm = compiled.instance.norm
    try:
        fixing = parse_fixing(args.fix or "", compiled.instance.num_vars)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    result = solve(compiled, map_fixing(norm, fixing), args.mode, node_budget=args.node_budget)
    print(f"status: {result.status}")
    if result.satisfiable:
        assignment = from_normalized(norm, result.assignment)
        if args.mode == MINSAT:
            print(f"cost: {_fmt_cost(result.cost + norm.offset, norm.scale)}")
        print("assignment: " + " ".join(str(v if a else -v) for v, a in enumerate(assignment, start=1)))
    print(f"nodes: {result.nodes}")
    print(f"time_ms: {result.elapsed * 1000:.3f}")
    return EXIT_OK if result.satisfiable else EXIT_UNSAT


# -- bench ----------------------------------------------------------------------


def cmd_bench(args) -> int:
    formula, raw = _load_problem(args.cnf, args.costs, args.unit_costs)
    max_level = None if args.max_level == "auto" else int(args.max_level)
    before = estimate_curve(build_compiled(formula, raw), args.samples, max_level, args.seed, args.mode)
    lines = [CSV_HEADER] + curve_csv_rows(before)
    worst_after = None
    if args.artifact:
        compiled = load_artifact(args.artifact, expected_hash=formula_hash(formula, raw))
        # replay exactly the levels measured before learning
        top = before.rows[-1].level if before.rows else 0
        after = estimate_curve(compiled, args.samples, top, args.seed, args.mode)
        lines += curve_csv_rows(after)
        worst_after = after.worst
    worst_before = before.worst
    if worst_after is None:
        summary = f"# summary worst_before={worst_before} worst_after=NA reduction=NA"
    else:
        reduction = worst_before / worst_after if worst_after else float("inf")
        summary = f"# summary worst_before={worst_before} worst_after={worst_after} reduction={reduction:.3f}"
    lines.append(summary)
    try:
        Path(args.csv).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write {args.csv}: {exc.strerror}") from None
    print(summary[2:])
    return EXIT_OK


# -- check ----------------------------------------------------------------------


def check_artifact(compiled, full: bool) -> list[str]:
    """Revalidate every lemma and pair against the input formula; returns failures."""
    instance = compiled.instance
    failures = []
    if full and instance.num_vars > FULL_CHECK_LIMIT:
        return [f"--full needs at most {FULL_CHECK_LIMIT} variables, artifact has {instance.num_vars}"]
    reference = build_compiled(compiled.source, compiled.raw_costs)

    def violators_cost(clause, mode):
        fixing = [(abs(l), l < 0) for l in clause]
        if full:
            return brute_force(instance, fixing, mode).cost
        return solve(reference, fixing, mode, node_budget=DEFAULT_NODE_BUDGET).cost

    for lem in compiled.lemmas:
        if violators_cost(lem.clause, SAT) is not None:
            failures.append(f"lemma {list(lem.clause)} is not implied by the formula")
    for pair in compiled.pairs:
        best = violators_cost(pair.clause, MINSAT)
        if best is not None and best < pair.threshold:
            failures.append(f"pair {list(pair.clause)} threshold {pair.threshold} exceeds violator cost {best}")
    dropped = set(instance.clauses) - set(compiled.originals)
    for clause in sorted(dropped):
        if not any(set(l.clause) <= set(clause) for l in compiled.lemmas if not l.is_global):
            failures.append(f"input clause {list(clause)} deleted without a subsuming lemma")
    return failures


def cmd_check(args) -> int:
    compiled = load_artifact(args.artifact)
    try:
        failures = check_artifact(compiled, args.full)
    except NodeBudgetExceeded:
        failures = ["node budget exhausted while revalidating; rerun with --full on small classes"]
    for f in failures:
        print(f"FAIL {f}")
    if failures:
        return EXIT_ERROR
    how = "brute force" if args.full else "solver"
    print(f"ok: hash, partition, {len(compiled.lemmas)} lemmas, {len(compiled.pairs)} pairs ({how})")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------


def _add_cost_flags(p):
    p.add_argument("--costs", help="cost file: '<var> <costTrue> <costFalse>' per line")
    p.add_argument("--unit-costs", action="store_true", help="cost 1 for True, 0 for False on every variable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minsatc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="learn lemmas for a class and write an artifact")
    p.add_argument("cnf")
    _add_cost_flags(p)
    p.add_argument("--mode", choices=("sat", "minsat", "both"), default="both")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--lemma-max-len", type=int, default=3)
    p.add_argument("--clause-cap", type=float, default=3.0)
    p.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.add_argument("--small-xn", type=int, default=5, help="stop once |X_N| is at most this")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("solve", help="solve one member of a class")
    p.add_argument("source", help="artifact or DIMACS file")
    _add_cost_flags(p)
    p.add_argument("--fix", default="", help='e.g. "1=T,5=F" (original variable polarity)')
    p.add_argument("--mode", choices=(SAT, MINSAT), default=MINSAT)
    p.add_argument("--node-budget", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="performance curves before and after learning")
    p.add_argument("cnf")
    _add_cost_flags(p)
    p.add_argument("--artifact")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--max-level", default="auto")
    p.add_argument("--mode", choices=(SAT, MINSAT), default=MINSAT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="revalidate an artifact")
    p.add_argument("artifact")
    p.add_argument("--full", action="store_true", help=f"brute-force revalidation (<= {FULL_CHECK_LIMIT} variables)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "max_level", "auto") != "auto":
        try:
            int(args.max_level)
        except ValueError:
            parser.error("--max-level must be an integer or 'auto'")
    try:
        return args.func(args)
    except (CliError, DimacsError, ArtifactError, NodeBudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
