"""Branch-and-bound SAT/MINSAT over the enumerated variables X_N.

The search fixes X_N variables chosen by Böhm's Rule, propagates unit clauses
over every variable, and hands the leaf to the hidden-Horn minimal-model
routine once X_N is exhausted.  Cost-conditional lemmas (L, z) join the clause
database as soon as the incumbent cost drops to z or below.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .core import Clause, make_fixing
from .forms import horn_minimal_model

if TYPE_CHECKING:
    from .driver import CompiledClass

SAT = "sat"
MINSAT = "minsat"
UNCONDITIONAL = "unconditional"
COST_CONDITIONAL = "costConditional"


@dataclass(frozen=True)
class Lemma:
    clause: Clause
    kind: str = UNCONDITIONAL
    threshold: int | None = None
    is_global: bool = False

    def __len__(self) -> int:
        return len(self.clause)


class NodeBudgetExceeded(RuntimeError):
    def __init__(self, nodes: int):
        self.nodes = nodes
        super().__init__(f"node budget exhausted after {nodes} nodes")


@dataclass(frozen=True)
class TraceNode:
    var: int
    value: bool
    opposite_refuted: bool
    opposite_evidence: int | None = None


@dataclass
class SearchTrace:
    initial_path: tuple
    nodes: list[TraceNode]
    optimal_cost: int | None
    nodes_expanded: int
    result: str


@dataclass
class SolveResult:
    status: str  # "unsat", "sat" or "optimal"
    assignment: tuple | None
    cost: int | None
    nodes: int
    propagations: int
    elapsed: float
    trace: SearchTrace | None = None
    pair_activations: list = field(default_factory=list)

    @property
    def satisfiable(self) -> bool:
        return self.status != "unsat"


def active_lemmas(lemmas: Iterable[Lemma], incumbent: int | None) -> list[Clause]:
    """Unconditional lemmas always; a pair (L, z) once some solution costs <= z."""
    out = []
    for lem in lemmas:
        if lem.kind == UNCONDITIONAL:
            out.append(lem.clause)
        elif incumbent is not None and incumbent <= lem.threshold:
            out.append(lem.clause)
    return out


# -- Böhm's Rule -------------------------------------------------------------------


def _pick(counts: list[int], candidates: Iterable[int], width: int,
          has_incumbent: bool, costs: Sequence[int]) -> tuple[int, bool]:
    """``counts[(2*x + neg) * width + length]`` holds literal occurrences by clause length."""
    best_var, best_e = 0, None
    for x in candidates:
        base = 2 * x * width
        e = [a + 2 * b if a >= b else b + 2 * a
             for a, b in zip(counts[base:base + width], counts[base + width:base + 2 * width])]
        if best_e is None or e > best_e:
            best_var, best_e = x, e
    base = 2 * best_var * width
    g = sum(counts[base:base + width])
    h = sum(counts[base + width:base + 2 * width])
    value = g > h and (not has_incumbent or costs[best_var - 1] == 0)
    return best_var, value


def boehm_select(clauses: Iterable[Sequence[int]], enumerated, unfixed, has_incumbent: bool,
                 costs: Sequence[int]) -> tuple[int, bool]:
    """Pick the branching variable and its first value.

    ``clauses`` is the formula after unit resolution (only open literals);
    ``costs`` is indexed by variable - 1.  Only clauses with at most one
    literal outside ``enumerated`` are counted.
    """
    enumerated = set(enumerated)
    clauses = [tuple(c) for c in clauses]
    candidates = sorted(set(unfixed) & enumerated)
    if not candidates:
        raise ValueError("no unfixed enumerated variable to branch on")
    n = max([abs(l) for c in clauses for l in c] + candidates)
    width = max((len(c) for c in clauses), default=0) + 1
    counts = [0] * (2 * (n + 1) * width)
    for c in clauses:
        if sum(1 for l in c if abs(l) not in enumerated) > 1:
            continue
        for l in c:
            if abs(l) in enumerated:
                counts[(2 * abs(l) + (l < 0)) * width + len(c)] += 1
    return _pick(counts, candidates, width, has_incumbent, costs)


# -- propagation engine --------------------------------------------------------------


class _Engine:
    """Counter-based unit propagation with a trail for backtracking.

    ``xe_open`` counts, per clause, the unassigned literals over variables
    flagged in ``is_xe``; Böhm counting reads it instead of rescanning.
    """

    def __init__(self, num_vars: int, clauses: Sequence[Clause], enabled: Sequence[bool],
                 costs: Sequence[int] | None = None, is_xe: Sequence[bool] | None = None,
                 occ=None, xe_open: Sequence[int] | None = None):
        self.n = num_vars
        self.clauses = clauses
        self.size = [len(c) for c in clauses]
        if occ is None:
            occ = _occurrences(num_vars, clauses)
        self.pos_occ, self.neg_occ = occ
        self.value = [0] * (num_vars + 1)
        self.ntrue = [0] * len(clauses)
        self.nfalse = [0] * len(clauses)
        self.enabled = list(enabled)
        self.cost = [0] + list(costs) if costs is not None else [0] * (num_vars + 1)
        self.is_xe = is_xe if is_xe is not None else [False] * (num_vars + 1)
        if xe_open is None:
            xe_open = [sum(1 for l in c if self.is_xe[abs(l)]) for c in clauses]
        self.xe_open = list(xe_open)
        self.trail: list[int] = []
        self.lb = 0
        self.props = 0

    def initial_units(self) -> list[int] | None:
        """Literals of enabled unit clauses, or None if an enabled clause is empty."""
        units = []
        for ci, c in enumerate(self.clauses):
            if self.enabled[ci]:
                if not c:
                    return None
                if len(c) == 1:
                    units.append(c[0])
        return units

    def assign(self, lits: Iterable[int]) -> bool:
        """Assign literals and propagate to fixpoint; False on conflict."""
        value, trail = self.value, self.trail
        pos_occ, neg_occ = self.pos_occ, self.neg_occ
        ntrue, nfalse, size = self.ntrue, self.nfalse, self.size
        enabled, clauses, cost = self.enabled, self.clauses, self.cost
        is_xe, xe_open = self.is_xe, self.xe_open
        queue = list(lits)
        qi = 0
        while qi < len(queue):
            lit = queue[qi]
            qi += 1
            if lit > 0:
                v, val = lit, 1
            else:
                v, val = -lit, -1
            cur = value[v]
            if cur:
                if cur != val:
                    return False
                continue
            value[v] = val
            trail.append(v)
            self.props += 1
            if val > 0:
                sat_occ, false_occ = pos_occ[v], neg_occ[v]
                self.lb += cost[v]
            else:
                sat_occ, false_occ = neg_occ[v], pos_occ[v]
            for ci in sat_occ:
                ntrue[ci] += 1
            if is_xe[v]:
                for ci in sat_occ:
                    xe_open[ci] -= 1
                for ci in false_occ:
                    xe_open[ci] -= 1
            conflict = False
            for ci in false_occ:
                nf = nfalse[ci] + 1
                nfalse[ci] = nf
                if conflict or ntrue[ci] or not enabled[ci]:
                    continue
                free = size[ci] - nf
                if free == 0:
                    conflict = True
                elif free == 1:
                    for l in clauses[ci]:
                        if not value[l if l > 0 else -l]:
                            queue.append(l)
                            break
            if conflict:
                return False
        return True

    def undo(self, mark: int) -> None:
        value, trail = self.value, self.trail
        pos_occ, neg_occ = self.pos_occ, self.neg_occ
        ntrue, nfalse, cost = self.ntrue, self.nfalse, self.cost
        is_xe, xe_open = self.is_xe, self.xe_open
        while len(trail) > mark:
            v = trail.pop()
            if value[v] > 0:
                sat_occ, false_occ = pos_occ[v], neg_occ[v]
                self.lb -= cost[v]
            else:
                sat_occ, false_occ = neg_occ[v], pos_occ[v]
            value[v] = 0
            for ci in sat_occ:
                ntrue[ci] -= 1
            for ci in false_occ:
                nfalse[ci] -= 1
            if is_xe[v]:
                for ci in sat_occ:
                    xe_open[ci] += 1
                for ci in false_occ:
                    xe_open[ci] += 1

    def open_clauses(self) -> list[tuple[int, ...]]:
        value = self.value
        return [
            tuple(l for l in c if not value[abs(l)])
            for ci, c in enumerate(self.clauses)
            if self.enabled[ci] and not self.ntrue[ci]
        ]


def _occurrences(num_vars: int, clauses: Sequence[Clause]):
    pos_occ: list[list[int]] = [[] for _ in range(num_vars + 1)]
    neg_occ: list[list[int]] = [[] for _ in range(num_vars + 1)]
    for ci, c in enumerate(clauses):
        for l in c:
            (pos_occ if l > 0 else neg_occ)[abs(l)].append(ci)
    return pos_occ, neg_occ


def propagate(clauses: Sequence[Clause], fixing: Iterable[tuple[int, bool]] = (), num_vars: int | None = None):
    """Apply a fixing and resolve unit clauses to fixpoint.

    Returns ``(assignment, remaining)`` -- a dict of forced values and the
    open clauses reduced to their unassigned literals -- or None on conflict.
    """
    clauses = [tuple(c) for c in clauses]
    fixing = list(fixing)
    if num_vars is None:
        num_vars = max((abs(l) for c in clauses for l in c), default=0)
        num_vars = max([num_vars] + [v for v, _ in fixing])
    eng = _Engine(num_vars, clauses, [True] * len(clauses))
    units = eng.initial_units()
    if units is None or not eng.assign([v if val else -v for v, val in fixing] + units):
        return None
    assignment = {v: eng.value[v] > 0 for v in eng.trail}
    return assignment, eng.open_clauses()


class PreparedClass:
    """Clause database of a compiled class frozen for repeated solving.

    Building the occurrence lists and Böhm bookkeeping is the dominant cost
    of short solves, so oracles that solve many subinstances of one snapshot
    prepare it once.
    """

    def __init__(self, compiled: "CompiledClass", mode: str):
        inst = compiled.instance
        self.instance = inst
        self.mode = mode
        self.n = n = inst.num_vars
        self.costs = list(inst.costs)
        core = list(compiled.core_clauses())
        glob = list(compiled.global_clauses())
        pairs = sorted(compiled.pairs, key=lambda p: -p.threshold) if mode == MINSAT else []
        self.n_core = len(core)
        self.pair_base = len(core) + len(glob)
        self.pair_z = [p.threshold for p in pairs]
        self.clauses = core + glob + [p.clause for p in pairs]
        self.enabled = [True] * self.pair_base + [False] * len(pairs)
        part = compiled.partition
        self.flipped = part.easy_renaming.flipped
        self.xn_list = sorted(part.enumerated)
        is_xn = [False] * (n + 1)
        for v in self.xn_list:
            is_xn[v] = True
        self.is_xe = [not x for x in is_xn]
        self.is_xe[0] = False
        # per clause: (variable, count offset) of enumerated literals, for Böhm counting
        self.width = max((len(c) for c in self.clauses), default=0) + 1
        self.xn_keys = [
            tuple((abs(l), (2 * abs(l) + (l < 0)) * self.width) for l in c if is_xn[abs(l)])
            for c in self.clauses
        ]
        self.occ = _occurrences(n, self.clauses)
        self.xe_open = [sum(1 for l in c if self.is_xe[abs(l)]) for c in self.clauses]


def prepare(compiled: "CompiledClass", mode: str = MINSAT) -> PreparedClass:
    if mode not in (SAT, MINSAT):
        raise ValueError(f"unknown mode {mode!r}")
    return PreparedClass(compiled, mode)


# -- search -------------------------------------------------------------------------


class _Summary:
    """Outcome of a closed subtree: cheapest solution found (or None), whether
    the absence of solutions was proven by conflicts alone, and the incumbent
    when the subtree closed."""

    __slots__ = ("best", "pure", "inc_at_close")

    def __init__(self, best, pure, inc_at_close=None):
        self.best = best
        self.pure = pure
        self.inc_at_close = inc_at_close


class _Frame:
    __slots__ = ("var", "first", "summaries")

    def __init__(self, var: int, first: bool):
        self.var = var
        self.first = first
        self.summaries = [None, None]


def _min_opt(*xs):
    xs = [x for x in xs if x is not None]
    return min(xs) if xs else None


class _Search:
    def __init__(self, prep: PreparedClass, node_budget: int | None):
        self.mode = prep.mode
        self.n = prep.n
        self.costs = prep.costs
        self.n_core = prep.n_core
        self.pair_base = prep.pair_base
        self.pair_z = prep.pair_z
        self.next_pair = 0
        self.eng = _Engine(prep.n, prep.clauses, prep.enabled,
                           prep.costs if prep.mode == MINSAT else None, prep.is_xe, prep.occ, prep.xe_open)
        self.flipped = prep.flipped
        self.xn_list = prep.xn_list
        self.xn_keys = prep.xn_keys
        self.width = prep.width
        self.count_size = 2 * (prep.n + 1) * prep.width
        self.budget = node_budget
        self.nodes = 0
        self.incumbent: int | None = None
        self.best_assignment = None
        self.best_path = None
        self.done = False
        self.stack: list[_Frame] = []
        self.activations: list[tuple[int, int]] = []

    # pairs ----------------------------------------------------------------

    def _activate(self) -> None:
        z = self.pair_z
        enabled = self.eng.enabled
        while self.next_pair < len(z) and self.incumbent <= z[self.next_pair]:
            assert self.incumbent <= z[self.next_pair]
            enabled[self.pair_base + self.next_pair] = True
            self.activations.append((z[self.next_pair], self.incumbent))
            self.next_pair += 1

    def _sync(self, start: int) -> bool:
        """Propagate pairs enabled since ``start`` under the current state."""
        eng = self.eng
        units = []
        for j in range(start, self.next_pair):
            ci = self.pair_base + j
            if eng.ntrue[ci]:
                continue
            free = eng.size[ci] - eng.nfalse[ci]
            if free == 0:
                return False
            if free == 1:
                units.extend(l for l in eng.clauses[ci] if not eng.value[abs(l)])
        return eng.assign(units) if units else True

    # selection ------------------------------------------------------------

    def _select(self) -> tuple[int, bool]:
        eng = self.eng
        value = eng.value
        candidates = [v for v in self.xn_list if not value[v]]
        if not candidates:
            return 0, False
        ntrue, nfalse, size, xe_open = eng.ntrue, eng.nfalse, eng.size, eng.xe_open
        xn_keys = self.xn_keys
        width = self.width
        counts = [0] * self.count_size
        # enabled clauses are exactly the prefix up to the last activated pair
        for ci in range(self.pair_base + self.next_pair):
            if ntrue[ci] or xe_open[ci] > 1:
                continue
            length = size[ci] - nfalse[ci]
            for v, key in xn_keys[ci]:
                if not value[v]:
                    counts[key + length] += 1
        has_inc = self.mode == MINSAT and self.incumbent is not None
        return _pick(counts, candidates, width, has_inc, self.costs)

    # search ---------------------------------------------------------------

    def root(self, fixing) -> bool:
        units = self.eng.initial_units()
        if units is None:
            return False
        return self.eng.assign([v if val else -v for v, val in fixing] + units)

    def node(self) -> _Summary:
        eng = self.eng
        if self.mode == MINSAT and self.incumbent is not None and eng.lb >= self.incumbent:
            return _Summary(None, False, self.incumbent)
        synced = self.next_pair
        var, first = self._select()
        if not var:
            return self._leaf()
        frame = _Frame(var, first)
        best, pure = None, True
        node_mark = len(eng.trail)
        for k, val in enumerate((first, not first)):
            if self.next_pair > synced:
                ok = self._sync(synced)
                synced = self.next_pair
                if not ok:
                    cut = _Summary(None, False, self.incumbent)
                    for j in range(k, 2):
                        frame.summaries[j] = cut
                    pure = False
                    break
            self.nodes += 1
            if self.budget is not None and self.nodes > self.budget:
                raise NodeBudgetExceeded(self.nodes)
            mark = len(eng.trail)
            self.stack.append(frame)
            if eng.assign((var if val else -var,)):
                child = self.node()
            else:
                child = _Summary(None, True)
            self.stack.pop()
            eng.undo(mark)
            child.inc_at_close = self.incumbent
            if self.next_pair:
                child.pure = False
            frame.summaries[k] = child
            best = _min_opt(best, child.best)
            pure = pure and child.pure
            if self.done:
                break
        eng.undo(node_mark)
        return _Summary(best, pure, self.incumbent)

    def _leaf(self) -> _Summary:
        eng = self.eng
        value = eng.value
        remaining = [
            tuple(l for l in eng.clauses[ci] if not value[abs(l)])
            for ci in range(self.n_core)
            if not eng.ntrue[ci]
        ]
        fixed = {v: value[v] > 0 for v in eng.trail}
        model = horn_minimal_model(self.n, remaining, self.flipped, fixed)
        if model is None:
            return _Summary(None, not self.next_pair)
        assignment = tuple(model[1:])
        cost = sum(c for c, a in zip(self.costs, assignment) if a) if self.mode == MINSAT else 0
        if self.mode == MINSAT and self.incumbent is not None and cost >= self.incumbent:
            return _Summary(None, False, self.incumbent)
        self.incumbent = cost
        self.best_assignment = assignment
        self.best_path = self._snapshot()
        if self.mode == SAT:
            self.done = True
        else:
            self._activate()
        return _Summary(cost, True, cost)

    def _snapshot(self):
        # each frame on the stack is the ancestor decision; its current branch
        # index tells which summary slot holds the opposite value
        return [(f, 0 if f.summaries[0] is None else 1) for f in self.stack]

    def trace(self, fixing, status: str) -> SearchTrace:
        nodes = []
        if self.best_path is not None:
            for frame, k in self.best_path:
                value = frame.first if k == 0 else not frame.first
                opp = frame.summaries[1 - k]
                if opp is None:
                    nodes.append(TraceNode(frame.var, value, False, None))
                    continue
                refuted = opp.best is None and opp.pure
                evidence = None if refuted else _min_opt(opp.best, opp.inc_at_close)
                nodes.append(TraceNode(frame.var, value, refuted, evidence))
        return SearchTrace(
            initial_path=tuple(fixing),
            nodes=nodes,
            optimal_cost=self.incumbent if status != "unsat" else None,
            nodes_expanded=self.nodes,
            result=status,
        )


def solve(compiled: "CompiledClass", fixing: Iterable[tuple[int, bool]] = (), mode: str = MINSAT,
          trace: bool = False, node_budget: int | None = None, prepared: PreparedClass | None = None) -> SolveResult:
    """Solve the subinstance of ``compiled`` given by ``fixing`` (normalized space).

    ``prepared`` may carry a snapshot from :func:`prepare` for the same mode;
    ``compiled`` is then ignored.  Raises NodeBudgetExceeded when
    ``node_budget`` branch nodes do not suffice.
    """
    if prepared is None:
        prepared = prepare(compiled, mode)
    elif prepared.mode != mode:
        raise ValueError("prepared class was built for a different mode")
    instance = prepared.instance
    n = instance.num_vars
    fixing = make_fixing(fixing, n)
    need = 3 * n + 200
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)
    t0 = time.perf_counter()
    search = _Search(prepared, node_budget)
    if search.root(fixing):
        search.node()
    elapsed = time.perf_counter() - t0
    if search.best_assignment is None:
        status, cost = "unsat", None
    else:
        status = "sat" if mode == SAT else "optimal"
        cost = sum(c for c, a in zip(instance.costs, search.best_assignment) if a)
        assert all(
            any(search.best_assignment[abs(l) - 1] == (l > 0) for l in c)
            for c in instance.clauses
        ), "solver returned an assignment violating the input formula"
        assert all(search.best_assignment[v - 1] == val for v, val in fixing)
    return SolveResult(
        status=status,
        assignment=search.best_assignment,
        cost=cost,
        nodes=search.nodes,
        propagations=search.eng.props,
        elapsed=elapsed,
        trace=search.trace(fixing, status) if trace else None,
        pair_activations=search.activations,
    )
