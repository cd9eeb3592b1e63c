"""Lemma learning from search traces.

SAT step: every refuted opposite branch on the final path yields a clause
ruling out that prefix.  MINSAT step: every other opposite branch yields a
cost-conditional pair (L, z), z being a certified lower bound on the cost of
any completion that violates L.  Candidates are shortened with exact oracle
calls and only those of length <= 3 are kept.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

from .core import Clause, make_clause, split_dominated, subsumes
from .partition import compute_partition
from .solver import (
    COST_CONDITIONAL, MINSAT, SAT, UNCONDITIONAL, Lemma, NodeBudgetExceeded, SearchTrace, prepare, solve,
)

if TYPE_CHECKING:
    from .driver import CompiledClass

log = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 1_000_000
MAX_LEMMA_LEN = 3


@dataclass(frozen=True)
class CandidateLemma:
    """Literals in path order; ``indices`` are the path positions (initial
    fixing literals get indices <= 0).  The last literal is the flipped one."""

    literals: tuple[int, ...]
    indices: tuple[int, ...]
    kind: str = UNCONDITIONAL
    threshold: int | None = None

    @property
    def clause(self) -> Clause:
        return make_clause(self.literals)


def _candidates(trace: SearchTrace, want_pairs: bool) -> list[CandidateLemma]:
    p = list(trace.initial_path)
    # x = a is ruled out by the literal that is false under it
    prefix = [-v if val else v for v, val in p]
    prefix_idx = list(range(1 - len(p), 1))
    out = []
    for i, node in enumerate(trace.nodes, start=1):
        last = node.var if node.value else -node.var
        lits = tuple(prefix) + (last,)
        idx = tuple(prefix_idx) + (i,)
        if node.opposite_refuted:
            out.append(CandidateLemma(lits, idx, UNCONDITIONAL))
        elif want_pairs and node.opposite_evidence is not None:
            out.append(CandidateLemma(lits, idx, COST_CONDITIONAL, node.opposite_evidence))
        prefix.append(-node.var if node.value else node.var)
        prefix_idx.append(i)
    return out


def extract_sat_lemmas(trace: SearchTrace) -> list[CandidateLemma]:
    """Candidates from a SAT-mode trace.

    An unsatisfiable root instance yields the empty clause; an unsatisfiable
    subinstance yields nothing.
    """
    if trace.result == "unsat":
        if not trace.initial_path:
            return [CandidateLemma((), (), UNCONDITIONAL)]
        return []
    return _candidates(trace, want_pairs=False)


def extract_cost_pairs(trace: SearchTrace) -> list[CandidateLemma]:
    if trace.result == "unsat" or trace.optimal_cost is None:
        return extract_sat_lemmas(trace)
    return _candidates(trace, want_pairs=True)


# -- oracles ----------------------------------------------------------------


def sat_oracle(compiled: "CompiledClass", node_budget: int = DEFAULT_NODE_BUDGET, prepared=None) -> Callable:
    """fixing -> satisfiable?  (production solver, SAT mode, on a snapshot of ``compiled``)"""
    prep = prepared if prepared is not None and prepared.mode == SAT else prepare(compiled, SAT)

    def oracle(fixing) -> bool:
        return solve(None, fixing, SAT, node_budget=node_budget, prepared=prep).satisfiable

    return oracle


def minsat_oracle(compiled: "CompiledClass", node_budget: int = DEFAULT_NODE_BUDGET, prepared=None) -> Callable:
    """fixing -> optimal cost, or None if unsatisfiable."""
    prep = prepared if prepared is not None and prepared.mode == MINSAT else prepare(compiled, MINSAT)

    def oracle(fixing) -> int | None:
        return solve(None, fixing, MINSAT, node_budget=node_budget, prepared=prep).cost

    return oracle


def _violating_fixing(literals: Iterable[int]) -> list[tuple[int, bool]]:
    # not L as a fixing: every literal false
    return [(abs(l), l < 0) for l in literals]


def _removal_order(candidate: CandidateLemma) -> list[int]:
    """Positions of removable literals, highest path index first."""
    positions = range(len(candidate.literals) - 1)
    return sorted(positions, key=lambda j: -candidate.indices[j])


def _minimize(candidate: CandidateLemma, removable: Callable[[list[int]], bool], max_len: int) -> Clause | None:
    if not candidate.literals:
        return ()
    keep = [True] * len(candidate.literals)
    kept_extra = 0
    for j in _removal_order(candidate):
        keep[j] = False
        trial = [l for l, k in zip(candidate.literals, keep) if k]
        try:
            ok = removable(trial)
        except NodeBudgetExceeded:
            log.debug("oracle budget exhausted; discarding %s", candidate)
            return None
        if not ok:
            keep[j] = True
            kept_extra += 1
            # the flipped literal always stays, so the result is already too long
            if kept_extra + 1 > max_len:
                return None
    clause = make_clause(l for l, k in zip(candidate.literals, keep) if k)
    return clause if len(clause) <= max_len else None


def minimize_sat_lemma(candidate: CandidateLemma, is_satisfiable: Callable, max_len: int = MAX_LEMMA_LEN,
                       easy: Iterable[int] = ()) -> Lemma | None:
    """Drop literals (except the last) while S and not-L stays unsatisfiable."""
    clause = _minimize(candidate, lambda lits: not is_satisfiable(_violating_fixing(lits)), max_len)
    if clause is None:
        return None
    easy = set(easy)
    return Lemma(clause, UNCONDITIONAL, None, any(abs(l) in easy for l in clause))


def minimize_cost_pair(candidate: CandidateLemma, optimum: Callable, max_len: int = MAX_LEMMA_LEN,
                       easy: Iterable[int] = ()) -> Lemma | None:
    """Drop literals (except the last) while every violator still costs >= z."""
    z = candidate.threshold

    def removable(lits):
        best = optimum(_violating_fixing(lits))
        return best is None or best >= z

    clause = _minimize(candidate, removable, max_len)
    if clause is None:
        return None
    easy = set(easy)
    return Lemma(clause, COST_CONDITIONAL, z, any(abs(l) in easy for l in clause))


# -- incorporation -----------------------------------------------------------------


@dataclass
class IncorporateReport:
    lemmas_added: int = 0
    pairs_added: int = 0
    clauses_deleted: int = 0
    cap_hit: bool = False


def clause_cap(compiled: "CompiledClass") -> int:
    return int(compiled.clause_cap_factor * compiled.original_clause_count)


def _unconditional_clauses(compiled: "CompiledClass"):
    yield from compiled.originals
    for lem in compiled.lemmas:
        yield lem.clause


def incorporate(compiled: "CompiledClass", lemmas: Sequence[Lemma]) -> IncorporateReport:
    """Add minimized lemmas to ``compiled`` in place and re-partition.

    Unconditional lemmas over enumerated variables delete the clauses they
    subsume; lemmas touching easy variables are kept as global consequences
    and delete nothing.  Pairs never delete input clauses.  A lemma that
    would push the clause count over the cap is refused and ``cap_hit`` set.
    """
    report = IncorporateReport()
    cap = clause_cap(compiled)
    easy = compiled.partition.easy
    for lem in lemmas:
        clause = make_clause(lem.clause)
        if any(subsumes(c, clause) for c in _unconditional_clauses(compiled)):
            continue
        if lem.kind == UNCONDITIONAL:
            is_global = any(abs(l) in easy for l in clause)
            new = Lemma(clause, UNCONDITIONAL, None, is_global)
            if is_global:
                if compiled.clause_count() + 1 > cap:
                    report.cap_hit = True
                    break
                compiled.lemmas.append(new)
            else:
                originals, deleted = split_dominated(compiled.originals, [clause])
                old_lemmas = [l for l in compiled.lemmas if not subsumes(clause, l.clause)]
                pairs = [p for p in compiled.pairs if not subsumes(clause, p.clause)]
                count = len(originals) + len(old_lemmas) + 1 + len(pairs)
                if count > cap:
                    report.cap_hit = True
                    break
                compiled.originals = originals
                compiled.lemmas = old_lemmas + [new]
                compiled.pairs = pairs
                report.clauses_deleted += len(deleted)
                compiled.deleted_total += len(deleted)
            report.lemmas_added += 1
        else:
            z = lem.threshold
            if any(subsumes(p.clause, clause) and p.threshold >= z for p in compiled.pairs):
                continue
            # weaker thresholds on the same clause are superseded
            rest = [p for p in compiled.pairs if p.clause != clause]
            if len(compiled.originals) + len(compiled.lemmas) + len(rest) + 1 > cap:
                report.cap_hit = True
                break
            compiled.pairs = rest + [Lemma(clause, COST_CONDITIONAL, z, any(abs(l) in easy for l in clause))]
            report.pairs_added += 1
    if report.lemmas_added or report.pairs_added:
        compiled.version += 1
        if report.lemmas_added:
            compiled.partition = compute_partition(compiled.instance, compiled.core_clauses())
    if compiled.clause_count() >= cap:
        report.cap_hit = True
    return report
