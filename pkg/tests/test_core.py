import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minsatc.core import (
    CnfFormula, DimacsError, MinsatInstance, RawCosts, emit_costs, emit_dimacs, make_clause, map_fixing,
    model_clause_removal, model_variable_removal, normalize, parse_costs, parse_dimacs, parse_fixing,
    raw_cost, remove_dominated, satisfies, split_dominated, subsumes, to_normalized, total_cost,
)
from minsatc.oracle import brute_force

from conftest import instance, models, random_costs, random_formula


# -- parsing -----------------------------------------------------------------


def test_parse_dimacs_basic():
    f = parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n")
    assert f.num_vars == 3
    assert f.clauses == ((1, -2), (2, 3))


def test_parse_dimacs_comments_and_multiline_clauses():
    f = parse_dimacs("c hello\np cnf 2 2\n1 0 -2 0\n\n")
    assert f.clauses == ((1,), (-2,))


def test_parse_dimacs_percent_terminator():
    f = parse_dimacs("p cnf 2 1\n1 2 0\n%\n0\n")
    assert len(f) == 1


def test_parse_dimacs_tautology_rejected_with_line():
    with pytest.raises(DimacsError) as exc:
        parse_dimacs("p cnf 1 1\n1 -1 0\n")
    assert exc.value.line == 2
    assert "tautolog" in str(exc.value)


@pytest.mark.parametrize(
    "text, line",
    [
        ("p cnf x 1\n1 0\n", 1),
        ("p dnf 1 1\n1 0\n", 1),
        ("p cnf 2 1\n1 3 0\n", 2),
        ("p cnf 2 1\n1 2\n", 2),
        ("1 2 0\n", 1),
        ("p cnf 2 1\n1 a 0\n", 2),
    ],
)
def test_parse_dimacs_errors_carry_line(text, line):
    with pytest.raises(DimacsError) as exc:
        parse_dimacs(text)
    assert exc.value.line == line


def test_parse_dimacs_clause_count_mismatch():
    with pytest.raises(DimacsError):
        parse_dimacs("p cnf 2 2\n1 2 0\n")


def test_parse_dimacs_100_by_800():
    rng = random.Random(201)
    f = random_formula(rng, 100, 800)
    g = parse_dimacs(emit_dimacs(f))
    assert (g.num_vars, len(g.clauses)) == (100, 800)


@given(st.integers(1, 12), st.lists(st.lists(st.integers(-12, 12).filter(bool), max_size=5), max_size=15))
def test_dimacs_round_trip(n, raw):
    clauses = []
    for c in raw:
        c = [l for l in c if abs(l) <= n]
        try:
            clauses.append(make_clause(c))
        except ValueError:
            continue
    f = CnfFormula(n, tuple(clauses))
    assert parse_dimacs(emit_dimacs(f)) == f


def test_parse_costs_default_and_scaling():
    assert parse_costs("1 3 5\n", 2).pairs == ((3, 5), (0, 0))
    scaled = parse_costs("2 0.5 0\n", 2)
    assert scaled.pairs == ((0, 0), (5, 0)) and scaled.scale == 10
    assert parse_costs("", 3).pairs == ((0, 0),) * 3


def test_parse_costs_negative_allowed():
    assert parse_costs("1 -2 1\n", 1).pairs == ((-2, 1),)


@pytest.mark.parametrize("text", ["3 1 1\n", "0 1 1\n", "1 1 1\n1 2 2\n", "1 1\n", "1 x 2\n"])
def test_parse_costs_errors(text):
    with pytest.raises(DimacsError):
        parse_costs(text, 2)


def test_costs_round_trip():
    raw = parse_costs("1 0.25 1\n3 2 0\n", 3)
    assert parse_costs(emit_costs(raw), 3) == raw


def test_parse_fixing():
    assert parse_fixing("1=T, 5=F", 5) == ((1, True), (5, False))
    with pytest.raises(ValueError):
        parse_fixing("9=T", 5)
    with pytest.raises(ValueError):
        parse_fixing("1=X", 5)
    with pytest.raises(ValueError):
        parse_fixing("1=T,1=F", 5)


# -- normalization -------------------------------------------------------------


def test_normalize_examples():
    f = CnfFormula.from_lists(3, [[1, 2, -3]])
    inst = normalize(f, RawCosts(((3, 5), (4, 0), (2, 2))))
    assert inst.costs == (2, 4, 0)
    assert inst.norm.flipped == frozenset({1})
    assert inst.norm.offset == 3 + 0 + 2
    assert inst.clauses == ((-1, 2, -3),)


def test_normalization_soundness_exhaustive():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(1, 8)
        f = random_formula(rng, n, rng.randint(0, 3 * n))
        raw = RawCosts(tuple((rng.randint(-5, 9), rng.randint(-5, 9)) for _ in range(n)))
        inst = normalize(f, raw)
        for bits in itertools.product((False, True), repeat=n):
            mapped = to_normalized(inst.norm, bits)
            assert raw_cost(raw, bits) == total_cost(inst, mapped) + inst.norm.offset
            assert satisfies(f.clauses, bits) == satisfies(inst.clauses, mapped)


def test_optimum_invariance_under_normalization():
    rng = random.Random(8)
    for _ in range(40):
        n = rng.randint(1, 10)
        f = random_formula(rng, n, rng.randint(1, 3 * n))
        raw = RawCosts(tuple((rng.randint(-5, 9), rng.randint(-5, 9)) for _ in range(n)))
        inst = normalize(f, raw)
        sols = models(n, f.clauses)
        if not sols:
            assert not brute_force(inst).satisfiable
            continue
        best = min(raw_cost(raw, s) for s in sols)
        argmin = {s for s in sols if raw_cost(raw, s) == best}
        norm_best = brute_force(inst)
        assert norm_best.cost + inst.norm.offset == best
        assert to_normalized(inst.norm, norm_best.assignment) in argmin


def test_map_fixing_flips():
    inst = normalize(CnfFormula.from_lists(2, []), RawCosts(((0, 1), (1, 0))))
    assert map_fixing(inst.norm, [(1, True), (2, True)]) == ((1, False), (2, True))


def test_total_cost():
    inst = instance(3, [], [1, 1, 1])
    assert total_cost(inst, (False,) * 3) == 0
    assert total_cost(inst, (True, False, True)) == 2
    with pytest.raises(ValueError):
        total_cost(inst, (True, None, False))
    with pytest.raises(ValueError):
        total_cost(inst, (True,))


def test_total_cost_matches_oracle_recomputation():
    rng = random.Random(10)
    f = random_formula(rng, 10, 25)
    inst = normalize(f, random_costs(rng, 10))
    res = brute_force(inst)
    if res.satisfiable:
        assert total_cost(inst, res.assignment) == res.cost
        assert res.cost == sum(c for c, a in zip(inst.costs, res.assignment) if a)


def test_instance_invariants():
    with pytest.raises(ValueError):
        MinsatInstance(CnfFormula.from_lists(2, []), (1,))
    with pytest.raises(ValueError):
        MinsatInstance(CnfFormula.from_lists(1, []), (-1,))
    with pytest.raises(ValueError):
        CnfFormula(1, ((2,),))


# -- reductions ----------------------------------------------------------------


def _project(sols, keep):
    return {tuple(s[v - 1] for v in keep) for s in sols}


def test_variable_removal_construction():
    inst = instance(2, [[1, 2]])
    out = model_variable_removal(inst, 1)
    v, wt, wf = 3, 4, 5
    assert out.num_vars == 5
    assert out.clauses[0] == (2, wt)
    assert len(out.clauses) == 7
    assert out.costs == (0, 0, 0, 0, 0)


def test_variable_removal_semantics():
    rng = random.Random(3)
    for _ in range(20):
        n = rng.randint(2, 6)
        inst = instance(n, [list(c) for c in random_formula(rng, n, rng.randint(1, 2 * n)).clauses])
        x = rng.randint(1, n)
        out = model_variable_removal(inst, x)
        keep = list(range(1, n + 1))
        sols = models(out.num_vars, out.clauses)
        on = _project([s for s in sols if s[n]], keep)
        assert on == set(models(n, inst.clauses))
        off = _project([s for s in sols if not s[n]], [v for v in keep if v != x])
        deleted = [tuple(l for l in c if abs(l) != x) for c in inst.clauses]
        expect = _project(models(n, deleted), [v for v in keep if v != x])
        assert off == expect


def test_variable_removal_range():
    with pytest.raises(ValueError):
        model_variable_removal(instance(1, []), 2)


def test_clause_removal():
    inst = instance(2, [[1, 2]])
    out = model_clause_removal(inst, 0)
    assert out.clauses == ((1, 2, 3),)
    sols = models(3, out.clauses)
    assert _project([s for s in sols if not s[2]], [1, 2]) == set(models(2, inst.clauses))
    assert len(_project([s for s in sols if s[2]], [1, 2])) == 4
    with pytest.raises(IndexError):
        model_clause_removal(inst, 1)


# -- subsumption -----------------------------------------------------------------


def test_subsumes_examples():
    assert subsumes((-1,), (-1, 2))
    assert not subsumes((1,), (-1, 2))
    assert subsumes((1, 2), (1, 2))
    assert subsumes((), (1,))


def test_remove_dominated_unit():
    f = CnfFormula.from_lists(3, [[1, 2], [1, 3]])
    out = remove_dominated(f, [(1,)])
    assert out.clauses == ((1,),)


def test_remove_dominated_preserves_models():
    rng = random.Random(16)
    for _ in range(30):
        n = rng.randint(2, 10)
        f = random_formula(rng, n, rng.randint(2, 4 * n))
        sols = models(n, f.clauses)
        # any clause true in every model is an implied lemma
        lits = [l for v in range(1, n + 1) for l in (v, -v)]
        lemmas = []
        for _ in range(5):
            cand = make_clause(rng.sample(lits, 1)) if rng.random() < 0.5 else None
            if cand is None:
                a, b = rng.sample(range(1, n + 1), 2)
                cand = make_clause([a if rng.random() < 0.5 else -a, b if rng.random() < 0.5 else -b])
            if all(satisfies([cand], s) for s in sols):
                lemmas.append(cand)
        out = remove_dominated(f, lemmas)
        assert models(n, out.clauses) == sols


def test_split_dominated_reports_deleted():
    kept, deleted = split_dominated([(1, 2), (2, 3), (-1, 3)], [(2,)])
    assert kept == [(-1, 3)] and deleted == [(1, 2), (2, 3)]
