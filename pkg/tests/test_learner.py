import random

import pytest

from minsatc.core import CnfFormula, RawCosts
from minsatc.driver import build_compiled, learn
from minsatc.learner import (
    CandidateLemma, clause_cap, extract_cost_pairs, extract_sat_lemmas, incorporate, minimize_cost_pair,
    minimize_sat_lemma, minsat_oracle, sat_oracle,
)
from minsatc.oracle import brute_force, implied, min_cost_violating
from minsatc.solver import COST_CONDITIONAL, MINSAT, SAT, UNCONDITIONAL, Lemma, SearchTrace, TraceNode, solve

from conftest import random_3sat, random_costs


def _trace(nodes, initial=(), result="sat", cost=0):
    return SearchTrace(tuple(initial), nodes, cost, len(nodes), result)


# -- extraction ------------------------------------------------------------------


def test_extract_sat_lemma_example():
    nodes = [TraceNode(1, True, False), TraceNode(2, False, False), TraceNode(3, False, True)]
    (cand,) = extract_sat_lemmas(_trace(nodes))
    assert cand.clause == (-1, 2, -3)
    assert cand.literals[-1] == -3 and cand.kind == UNCONDITIONAL


def test_extract_includes_initial_path():
    nodes = [TraceNode(4, True, True)]
    (cand,) = extract_sat_lemmas(_trace(nodes, initial=[(1, True), (2, False)]))
    assert cand.literals == (-1, 2, 4)
    assert cand.indices == (-1, 0, 1)


def test_extract_nothing_refuted():
    nodes = [TraceNode(1, True, False), TraceNode(2, True, False, 4)]
    assert extract_sat_lemmas(_trace(nodes)) == []


def test_extract_unsat_gives_empty_clause():
    (cand,) = extract_sat_lemmas(_trace([], result="unsat", cost=None))
    assert cand.clause == ()
    assert extract_sat_lemmas(_trace([], initial=[(1, True)], result="unsat", cost=None)) == []


def test_extract_cost_pairs():
    nodes = [TraceNode(1, True, False, 7), TraceNode(2, False, True), TraceNode(3, True, False, None)]
    cands = extract_cost_pairs(_trace(nodes, cost=5))
    assert [(c.clause, c.kind, c.threshold) for c in cands] == [
        ((1,), COST_CONDITIONAL, 7),
        ((-1, -2), UNCONDITIONAL, None),
    ]


def test_extracted_pair_thresholds_are_lower_bounds():
    rng = random.Random(10)
    seen = 0
    for seed in range(40):
        f = random_3sat(10, 3.0, seed)
        compiled = build_compiled(f, random_costs(rng, 10, 6))
        res = solve(compiled, trace=True)
        for cand in extract_cost_pairs(res.trace):
            best = min_cost_violating(compiled.instance, cand.clause)
            if cand.kind == COST_CONDITIONAL:
                assert best is None or best >= cand.threshold
                seen += 1
            else:
                assert best is None
    assert seen > 20


# -- minimization ----------------------------------------------------------------


def _sat_oracle_for(clauses, n):
    f = CnfFormula.from_lists(n, clauses)
    return sat_oracle(build_compiled(f))


def test_minimize_sat_example():
    # a=1, b=2, c=3; S = {not a or not b}
    is_sat = _sat_oracle_for([[-1, -2]], 3)
    cand = CandidateLemma((-2, 3, -1), (1, 2, 3))
    lem = minimize_sat_lemma(cand, is_sat)
    assert lem.clause == (-1, -2)
    # the derived steps: dropping c keeps S and a and b unsatisfiable, dropping not-b does not
    assert not is_sat([(1, True), (2, True)])
    assert is_sat([(1, True)])


def test_minimize_sat_length_cap():
    # x1..x4 all needed: S = {x1 or x2 or x3 or x4}
    is_sat = _sat_oracle_for([[1, 2, 3, 4]], 4)
    cand = CandidateLemma((1, 2, 3, 4), (1, 2, 3, 4))
    assert minimize_sat_lemma(cand, is_sat) is None
    assert minimize_sat_lemma(cand, is_sat, max_len=4).clause == (1, 2, 3, 4)


def test_minimize_sat_unit_unchanged():
    is_sat = _sat_oracle_for([[1]], 1)
    assert minimize_sat_lemma(CandidateLemma((1,), (1,)), is_sat).clause == (1,)


def test_minimize_sat_global_flag():
    is_sat = _sat_oracle_for([[-1, -2]], 3)
    cand = CandidateLemma((-2, 3, -1), (1, 2, 3))
    assert minimize_sat_lemma(cand, is_sat, easy={2}).is_global
    assert not minimize_sat_lemma(cand, is_sat, easy={3}).is_global


def test_minimize_cost_pair_boundary():
    cand = CandidateLemma((1, 2), (1, 2), COST_CONDITIONAL, 5)
    assert minimize_cost_pair(cand, lambda fixing: 5).clause == (2,)
    assert minimize_cost_pair(cand, lambda fixing: 4).clause == (1, 2)
    assert minimize_cost_pair(cand, lambda fixing: None).clause == (2,)
    assert minimize_cost_pair(cand, lambda fixing: 5).threshold == 5


def test_minimize_removes_in_decreasing_index_order():
    calls = []

    def oracle(fixing):
        calls.append(tuple(sorted(v for v, _ in fixing)))
        return 10

    cand = CandidateLemma((1, 2, 3, 4), (-1, 0, 1, 2), COST_CONDITIONAL, 3)
    assert minimize_cost_pair(cand, oracle).clause == (4,)
    # index 1 (x3) first, then 0 (x2), then -1 (x1)
    assert calls == [(1, 2, 4), (1, 4), (4,)]


def test_minimized_pairs_are_minimal_end_to_end():
    rng = random.Random(3)
    checked = 0
    for seed in range(30):
        f = random_3sat(10, 3.0, seed)
        compiled = build_compiled(f, random_costs(rng, 10, 6))
        res = solve(compiled, trace=True)
        optimum = minsat_oracle(compiled)
        for cand in extract_cost_pairs(res.trace):
            if cand.kind != COST_CONDITIONAL:
                continue
            lem = minimize_cost_pair(cand, optimum)
            if lem is None:
                continue
            z = lem.threshold
            best = min_cost_violating(compiled.instance, lem.clause)
            assert best is None or best >= z
            last = cand.literals[-1]
            for lit in lem.clause:
                if lit == last:
                    continue
                rest = tuple(l for l in lem.clause if l != lit)
                shorter = min_cost_violating(compiled.instance, rest)
                assert shorter is not None and shorter < z
                checked += 1
    assert checked > 5


# -- incorporation ---------------------------------------------------------------


def _compiled(n, clauses, costs=None):
    raw = RawCosts(tuple((c, 0) for c in costs)) if costs else None
    return build_compiled(CnfFormula.from_lists(n, clauses), raw)


def test_incorporate_unit_subsumes():
    c = _compiled(2, [[1, 2]])
    c.partition = c.partition.__class__(frozenset({1, 2}), frozenset(), c.partition.easy_renaming)
    report = incorporate(c, [Lemma((1,))])
    assert c.originals == [] and [l.clause for l in c.lemmas] == [(1,)]
    assert report.lemmas_added == 1 and report.clauses_deleted == 1
    assert c.core_clauses() == [(1,)]


def test_incorporate_global_lemma_deletes_nothing():
    c = _compiled(2, [[1, 2]])
    assert c.partition.easy == frozenset({1, 2})
    incorporate(c, [Lemma((1,))])
    assert c.originals == [(1, 2)] and c.lemmas[0].is_global
    assert c.global_clauses() == [(1,)]


def test_incorporate_pairs_keep_largest_threshold():
    c = _compiled(3, [[1, 2, 3]], [1, 1, 1])
    incorporate(c, [Lemma((-1, -2), COST_CONDITIONAL, 5)])
    incorporate(c, [Lemma((-1, -2), COST_CONDITIONAL, 9)])
    assert [(p.clause, p.threshold) for p in c.pairs] == [((-1, -2), 9)]
    report = incorporate(c, [Lemma((-1, -2), COST_CONDITIONAL, 5)])
    assert report.pairs_added == 0
    assert [(p.clause, p.threshold) for p in c.pairs] == [((-1, -2), 9)]
    assert c.originals == [(1, 2, 3)]


def test_incorporate_idempotent():
    c = _compiled(3, [[1, 2], [2, 3]])
    c.partition = c.partition.__class__(frozenset({1, 2, 3}), frozenset(), c.partition.easy_renaming)
    incorporate(c, [Lemma((2,))])
    snapshot = (list(c.originals), list(c.lemmas), c.version)
    report = incorporate(c, [Lemma((2,))])
    assert (list(c.originals), list(c.lemmas), c.version) == snapshot
    assert report.lemmas_added == 0


def test_incorporate_respects_cap():
    c = _compiled(4, [[1, 2], [3, 4]])
    c.clause_cap_factor = 1.0
    assert clause_cap(c) == 2
    report = incorporate(c, [Lemma((1, 3))])
    assert report.cap_hit and c.lemmas == []


# -- learning-wide properties -------------------------------------------------------


def test_monotone_formulas_learn_nothing_in_sat_step():
    rng = random.Random(50)
    for seed in range(5):
        n = 12
        clauses = [rng.sample(range(1, n + 1), rng.randint(2, 3)) for _ in range(30)]
        compiled = build_compiled(CnfFormula.from_lists(n, clauses), RawCosts.unit(n))
        out = learn(compiled, SAT, samples_per_level=10, seed=seed, small_xn=0)
        assert out.lemmas == [] and out.pairs == []
        assert out.log[-1].stop_reason in ("vIncrease", "levelsExhausted")


def test_learned_lemmas_sound_and_minimal():
    rng = random.Random(60)
    for seed in range(6):
        n = rng.randint(10, 14)
        compiled = build_compiled(random_3sat(n, 4.0, seed), random_costs(rng, n, 4))
        out = learn(learn(compiled, SAT, 15, seed), MINSAT, 15, seed)
        inst = out.instance
        for lem in out.lemmas:
            assert implied(inst, lem.clause)
            for j in range(len(lem.clause)):
                assert not implied(inst, lem.clause[:j] + lem.clause[j + 1:])
        for pair in out.pairs:
            best = min_cost_violating(inst, pair.clause)
            assert best is None or best >= pair.threshold
        # the unconditional database still has exactly the input models
        for _ in range(20):
            fixing = [(v, rng.random() < 0.5) for v in range(1, n + 1)]
            inside = all(any(fixing[abs(l) - 1][1] == (l > 0) for l in c) for c in out.core_clauses())
            assert inside == brute_force(inst, fixing, "sat").satisfiable
