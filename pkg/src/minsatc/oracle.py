"""Exhaustive SAT/MINSAT reference used by the tests.

Deliberately shares nothing with the search code: no propagation, just a
vectorized sweep over every completion of the fixing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_FREE_VARS = 24
_CHUNK_BITS = 16


class OracleGuardError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    assignment: tuple | None
    cost: int | None

    @property
    def satisfiable(self) -> bool:
        return self.assignment is not None


def brute_force(instance, fixing=(), mode: str = "minsat") -> OracleResult:
    """Cheapest (MINSAT) or first (SAT) satisfying extension of ``fixing``.

    ``instance`` needs ``num_vars``, ``clauses`` and ``costs`` (True-costs,
    indexed by variable - 1).  Returns an unsatisfiable result when no
    extension satisfies every clause.
    """
    n = instance.num_vars
    fixed = {}
    for v, val in fixing:
        if not 1 <= v <= n:
            raise ValueError(f"fixing references unknown variable {v}")
        if fixed.get(v, bool(val)) != bool(val):
            return OracleResult(None, None)
        fixed[v] = bool(val)
    free = [v for v in range(1, n + 1) if v not in fixed]
    if len(free) > MAX_FREE_VARS:
        raise OracleGuardError(f"{len(free)} free variables exceed the guard of {MAX_FREE_VARS}")
    costs = np.asarray(instance.costs, dtype=np.int64)
    total = 1 << len(free)
    chunk = min(total, 1 << _CHUNK_BITS)
    best_cost, best_row = None, None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        values = np.zeros((len(idx), n + 1), dtype=bool)
        for v, val in fixed.items():
            values[:, v] = val
        for bit, v in enumerate(free):
            values[:, v] = (idx >> bit) & 1
        ok = np.ones(len(idx), dtype=bool)
        for clause in instance.clauses:
            sat = np.zeros(len(idx), dtype=bool)
            for lit in clause:
                col = values[:, abs(lit)]
                sat |= col if lit > 0 else ~col
            ok &= sat
        rows = np.flatnonzero(ok)
        if not len(rows):
            continue
        if mode == "sat":
            best_row = values[rows[0], 1:]
            best_cost = int(costs[best_row].sum())
            break
        totals = values[rows, 1:].astype(np.int64) @ costs
        i = int(np.argmin(totals))
        if best_cost is None or totals[i] < best_cost:
            best_cost, best_row = int(totals[i]), values[rows[i], 1:]
    if best_row is None:
        return OracleResult(None, None)
    return OracleResult(tuple(bool(x) for x in best_row), best_cost)


def min_cost_violating(instance, clause, fixing=()) -> int | None:
    """Cheapest model violating ``clause`` (None if none); the soundness test for pairs."""
    violate = [(abs(l), l < 0) for l in clause]
    return brute_force(instance, list(fixing) + violate).cost


def implied(instance, clause) -> bool:
    """True iff every model of the instance satisfies ``clause``."""
    return not brute_force(instance, [(abs(l), l < 0) for l in clause], "sat").satisfiable
