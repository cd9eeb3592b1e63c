"""Special CNF forms: restricted hidden Horn (detection and linear-time
MINSAT) and network form (detection only)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import Clause, CnfFormula, MinsatInstance


@dataclass(frozen=True)
class Renaming:
    flipped: frozenset = frozenset()
    clause_flipped: frozenset = frozenset()


@dataclass(frozen=True)
class FormDiagnosis:
    hidden_horn: Renaming | None
    network_condition1: Renaming | None
    network_condition2: Renaming | None


# -- 2-SAT -------------------------------------------------------------------


def solve_2sat(num_vars: int, clauses: Iterable[tuple[int, int]]) -> list[bool] | None:
    """Solve a 2-CNF over variables 1..num_vars by Tarjan SCC on the implication graph.

    Returns values indexed 1..num_vars (index 0 unused) or None if unsatisfiable.
    Unit constraints are given as (l, l).
    """
    # node of literal l: 2*(v-1) for v, 2*(v-1)+1 for -v
    size = 2 * num_vars
    adj: list[list[int]] = [[] for _ in range(size)]

    def node(lit: int) -> int:
        return 2 * (abs(lit) - 1) + (lit < 0)

    for a, b in clauses:
        adj[node(-a)].append(node(b))
        if a != b:
            adj[node(-b)].append(node(a))

    index = [-1] * size
    low = [0] * size
    comp = [-1] * size
    on_stack = [False] * size
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in range(size):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            u, i = work[-1]
            if i < len(adj[u]):
                work[-1] = (u, i + 1)
                w = adj[u][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[u]:
                    low[u] = index[w]
                continue
            work.pop()
            if work:
                p = work[-1][0]
                if low[u] < low[p]:
                    low[p] = low[u]
            if low[u] == index[u]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == u:
                        break
                ncomp += 1

    values = [False] * (num_vars + 1)
    for v in range(1, num_vars + 1):
        cp, cn = comp[2 * (v - 1)], comp[2 * (v - 1) + 1]
        if cp == cn:
            return None
        # Tarjan numbers components in reverse topological order
        values[v] = cp < cn
    return values


# -- restricted hidden Horn --------------------------------------------------------


def horn_constraints(scope: Sequence[Clause], costs: Sequence[int]) -> list[tuple[int, int]]:
    """2-SAT clauses over flip variables f_x.

    Literal ``a`` stays non-positive after flipping exactly when the 2-SAT
    literal ``a`` over f holds, so forbidding two positive literals in a
    clause is the 2-clause (a or b).  Positive-cost variables cannot flip.
    """
    cons = []
    seen_vars = set()
    for clause in scope:
        k = len(clause)
        for i in range(k):
            a = clause[i]
            seen_vars.add(abs(a))
            for j in range(i + 1, k):
                cons.append((a, clause[j]))
    for v in sorted(seen_vars):
        if costs[v - 1] > 0:
            cons.append((-v, -v))
    return cons


def detect_restricted_hidden_horn(instance: MinsatInstance, scope: Sequence[Clause] | None = None) -> Renaming | None:
    """Find zero-cost variables whose flip leaves <=1 positive literal per clause."""
    clauses = instance.clauses if scope is None else scope
    # fast path: every clause already Horn
    if all(sum(1 for l in c if l > 0) <= 1 for c in clauses):
        return Renaming()
    values = solve_2sat(instance.num_vars, horn_constraints(clauses, instance.costs))
    if values is None:
        return None
    used = {abs(l) for c in clauses for l in c}
    return Renaming(frozenset(v for v in sorted(used) if values[v]))


def is_horn_under(clauses: Iterable[Clause], flipped: frozenset | set) -> bool:
    for clause in clauses:
        pos = 0
        for lit in clause:
            if (lit > 0) != (abs(lit) in flipped):
                pos += 1
                if pos > 1:
                    return False
    return True


class NotHornError(ValueError):
    pass


def horn_minimal_model(
    num_vars: int,
    clauses: Iterable[Clause],
    flipped: frozenset | set,
    fixing: Mapping[int, bool] | None = None,
) -> list[bool] | None:
    """Minimal model (in renamed space) of a Horn formula, mapped back to real values.

    Linear in the total literal count: every clause keeps a counter of body
    literals not yet derived True; a clause whose body is complete forces its
    head.  Fixed variables act as unit clauses.  Returns a list indexed
    1..num_vars of real truth values, or None if unsatisfiable.
    """
    fixing = fixing or {}
    heads: list[int] = []  # renamed-positive variable or 0
    missing: list[int] = []
    watch: list[list[int]] = [[] for _ in range(num_vars + 1)]
    derived = [False] * (num_vars + 1)
    queue: list[int] = []

    def add(head: int, body: Sequence[int]) -> bool:
        ci = len(heads)
        heads.append(head)
        missing.append(len(body))
        for v in body:
            watch[v].append(ci)
        if not body:
            if head == 0:
                return False
            queue.append(head)
        return True

    for clause in clauses:
        head = 0
        body = []
        sat = False
        for lit in clause:
            v = abs(lit)
            if v in fixing:
                if fixing[v] == (lit > 0):
                    sat = True
                    break
                continue
            if (lit > 0) != (v in flipped):
                if head:
                    raise NotHornError(f"clause {clause} has two positive literals after renaming")
                head = v
            else:
                body.append(v)
        if sat:
            continue
        if not add(head, body):
            return None

    # fixings in renamed space: True -> unit head; False -> headless {v}
    for v, val in fixing.items():
        if val != (v in flipped):
            if not add(v, []):
                return None
        else:
            if not add(0, [v]):
                return None

    head_i = 0
    while head_i < len(queue):
        v = queue[head_i]
        head_i += 1
        if derived[v]:
            continue
        derived[v] = True
        for ci in watch[v]:
            missing[ci] -= 1
            if missing[ci] == 0:
                h = heads[ci]
                if h == 0:
                    return None
                if not derived[h]:
                    queue.append(h)

    return [False] + [derived[v] != (v in flipped) for v in range(1, num_vars + 1)]


def solve_horn_minsat(instance: MinsatInstance, renaming: Renaming, fixing: Iterable[tuple[int, bool]] = ()):
    """Optimal (assignment, cost) of a hidden-Horn instance, or None if unsatisfiable."""
    values = horn_minimal_model(instance.num_vars, instance.clauses, renaming.flipped, dict(fixing))
    if values is None:
        return None
    assignment = tuple(values[1:])
    return assignment, sum(c for c, a in zip(instance.costs, assignment) if a)


# -- network form --------------------------------------------------------------


class ParityUnionFind:
    """Union-find over integers where each element carries a parity to its root."""

    def __init__(self):
        self.parent: dict[int, int] = {}
        self.parity: dict[int, int] = {}

    def find(self, x: int) -> tuple[int, int]:
        if x not in self.parent:
            self.parent[x] = x
            self.parity[x] = 0
            return x, 0
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        root = x
        # parity[node] is relative to parent[node]; walk from the root side down
        acc = 0
        for node in reversed(path):
            acc ^= self.parity[node]
            self.parity[node] = acc
            self.parent[node] = root
        return root, (self.parity[path[0]] if path else 0)

    def union(self, a: int, b: int, p: int) -> bool:
        """Require value(a) xor value(b) == p. False if that contradicts earlier unions."""
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            return (pa ^ pb) == p
        if rb < ra:
            ra, rb, pa, pb = rb, ra, pb, pa
        self.parent[rb] = ra
        self.parity[rb] = pa ^ pb ^ p
        return True

    def solution(self, elements: Iterable[int]) -> set[int]:
        """Elements set to 1, choosing per component the side with fewer ones."""
        groups: dict[int, list[tuple[int, int]]] = {}
        for x in sorted(set(elements)):
            r, p = self.find(x)
            groups.setdefault(r, []).append((x, p))
        ones = set()
        for members in groups.values():
            odd = [x for x, p in members if p]
            even = [x for x, p in members if not p]
            ones.update(odd if len(odd) <= len(even) else even)
        return ones


def _network_condition1(formula: CnfFormula) -> Renaming | None:
    uf = ParityUnionFind()
    used = []
    for clause in formula.clauses:
        if len(clause) > 2:
            return None
        if len(clause) == 2:
            a, b = clause
            # after flips exactly one literal negative
            p = int(a > 0) ^ int(b > 0) ^ 1
            if not uf.union(abs(a), abs(b), p):
                return None
            used += [abs(a), abs(b)]
    return Renaming(flipped=frozenset(uf.solution(used)))


def _network_condition2(formula: CnfFormula) -> Renaming | None:
    occ: dict[int, list[tuple[int, int]]] = {}
    for ci, clause in enumerate(formula.clauses):
        for lit in clause:
            occ.setdefault(abs(lit), []).append((ci, int(lit > 0)))
    uf = ParityUnionFind()
    used = []
    for v in sorted(occ):
        places = occ[v]
        if len(places) > 2:
            return None
        if len(places) == 2:
            (c1, p1), (c2, p2) = places
            # variable flips cancel; clause flips g must satisfy g1^g2 = p1^p2^1
            if not uf.union(c1, c2, p1 ^ p2 ^ 1):
                return None
            used += [c1, c2]
    return Renaming(clause_flipped=frozenset(uf.solution(used)))


def detect_network_form(formula: CnfFormula) -> tuple[Renaming | None, Renaming | None]:
    return _network_condition1(formula), _network_condition2(formula)


def apply_network_renaming(formula: CnfFormula, renaming: Renaming) -> list[list[int]]:
    out = []
    for ci, clause in enumerate(formula.clauses):
        lits = [-l if abs(l) in renaming.flipped else l for l in clause]
        if ci in renaming.clause_flipped:
            lits = [-l for l in lits]
        out.append(lits)
    return out


def diagnose(instance: MinsatInstance) -> FormDiagnosis:
    c1, c2 = detect_network_form(instance.formula)
    return FormDiagnosis(detect_restricted_hidden_horn(instance), c1, c2)
