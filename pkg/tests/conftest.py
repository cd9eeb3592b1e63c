import itertools
import random

import pytest

from minsatc.core import CnfFormula, MinsatInstance, RawCosts, normalize


def random_formula(rng: random.Random, n: int, m: int, max_len: int = 3) -> CnfFormula:
    clauses = []
    for _ in range(m):
        k = rng.randint(1, min(max_len, n))
        vs = rng.sample(range(1, n + 1), k)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return CnfFormula.from_lists(n, clauses)


def random_3sat(n: int, ratio: float, seed: int) -> CnfFormula:
    rng = random.Random(seed)
    clauses = []
    for _ in range(round(n * ratio)):
        vs = rng.sample(range(1, n + 1), 3)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return CnfFormula.from_lists(n, clauses)


def random_costs(rng: random.Random, n: int, hi: int = 10) -> RawCosts:
    return RawCosts(tuple((rng.randint(0, hi), rng.randint(0, hi)) for _ in range(n)))


def instance(n, clauses, costs=None) -> MinsatInstance:
    costs = costs if costs is not None else [0] * n
    return MinsatInstance(CnfFormula.from_lists(n, clauses), tuple(costs))


def models(num_vars, clauses):
    """All satisfying total assignments, by plain enumeration."""
    out = []
    for bits in itertools.product((False, True), repeat=num_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            out.append(bits)
    return out


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when not in ("call", "setup"):
                continue
            if rep.when == "setup" and outcome == "passed":
                continue
            num = int(nodeid.split("test_criterion_")[1][:2])
            detail = dict(rep.user_properties).get("detail", "")
            lines.append((num, f"criterion {num:2d} {'PASS' if outcome == 'passed' else 'FAIL'}  {detail}"))
    if lines:
        terminalreporter.section("acceptance")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
