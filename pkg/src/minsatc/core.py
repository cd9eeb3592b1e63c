"""CNF and cost data model, DIMACS/cost-file parsing, cost normalization,
the variable/clause removal reductions, and subsumption.

Literals are DIMACS-style signed integers: ``v`` is the positive literal of
variable ``v`` and ``-v`` its negation.  A clause is a tuple of literals kept
sorted by variable index; helpers in this module build canonical clauses.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Sequence

Clause = tuple  # tuple[int, ...], canonical: sorted by variable, no duplicates


class DimacsError(ValueError):
    """Malformed DIMACS or cost input; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TautologyError(ValueError):
    pass


def make_clause(literals: Iterable[int]) -> Clause:
    """Build a canonical clause. Duplicates are merged; x and -x together raise."""
    seen: dict[int, int] = {}
    for lit in literals:
        lit = int(lit)
        if lit == 0:
            raise ValueError("literal 0 is not allowed")
        v = abs(lit)
        if v in seen:
            if seen[v] != lit:
                raise TautologyError(f"clause contains both {v} and -{v}")
            continue
        seen[v] = lit
    return tuple(seen[v] for v in sorted(seen))


def negate_clause(clause: Sequence[int]) -> list[int]:
    return [-lit for lit in clause]


def lit_of(var: int, value: bool) -> int:
    """The literal made true by ``var = value``."""
    return var if value else -var


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        for clause in self.clauses:
            for lit in clause:
                if not 1 <= abs(lit) <= self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")

    @classmethod
    def from_lists(cls, num_vars: int, clauses: Iterable[Iterable[int]]) -> "CnfFormula":
        return cls(num_vars, tuple(make_clause(c) for c in clauses))

    def __len__(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class NormalizationRecord:
    """How raw (c, d) costs were turned into nonnegative True-costs.

    ``flipped`` variables had their literals complemented; ``offset`` is the
    constant removed from every total cost; ``scale`` is the power of ten that
    turned decimal input costs into integers.
    """

    flipped: frozenset = frozenset()
    offset: int = 0
    scale: int = 1


@dataclass(frozen=True)
class MinsatInstance:
    formula: CnfFormula
    costs: tuple[int, ...]
    norm: NormalizationRecord = field(default_factory=NormalizationRecord)

    def __post_init__(self):
        if len(self.costs) != self.formula.num_vars:
            raise ValueError("costs must have exactly one entry per variable")
        if any(c < 0 for c in self.costs):
            raise ValueError("normalized costs must be nonnegative")

    @property
    def num_vars(self) -> int:
        return self.formula.num_vars

    @property
    def clauses(self) -> tuple[Clause, ...]:
        return self.formula.clauses

    def cost(self, var: int) -> int:
        return self.costs[var - 1]


# -- parsing ---------------------------------------------------------------


def _lines(text) -> Iterable[str]:
    if isinstance(text, str):
        return io.StringIO(text)
    return text


def parse_dimacs(text) -> CnfFormula:
    """Parse DIMACS CNF from a string or a line iterable.

    Every clause line must end with ``0``; a ``%`` line (SATLIB style) ends
    the clause section.
    """
    num_vars = num_clauses = None
    clauses: list[Clause] = []
    for lineno, raw in enumerate(_lines(text), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if num_vars is not None:
                raise DimacsError("duplicate problem line", lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", lineno) from None
            if num_vars < 0 or num_clauses < 0:
                raise DimacsError(f"malformed header {line!r}", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause before 'p cnf' header", lineno)
        try:
            tokens = [int(t) for t in line.split()]
        except ValueError:
            raise DimacsError(f"non-integer token in {line!r}", lineno) from None
        if tokens[-1] != 0:
            raise DimacsError("clause not zero-terminated", lineno)
        current: list[int] = []
        for tok in tokens:
            if tok == 0:
                try:
                    clauses.append(make_clause(current))
                except TautologyError as exc:
                    raise DimacsError(f"tautological clause: {exc}", lineno) from None
                current = []
            elif abs(tok) > num_vars:
                raise DimacsError(f"literal {tok} out of range 1..{num_vars}", lineno)
            else:
                current.append(tok)
    if num_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if len(clauses) != num_clauses:
        raise DimacsError(f"header declares {num_clauses} clauses, found {len(clauses)}")
    return CnfFormula(num_vars, tuple(clauses))


def emit_dimacs(formula: CnfFormula, comments: Sequence[str] = ()) -> str:
    out = [f"c {c}" for c in comments]
    out.append(f"p cnf {formula.num_vars} {len(formula.clauses)}")
    out.extend(" ".join(map(str, clause + (0,))) for clause in formula.clauses)
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class RawCosts:
    """Per-variable (cost of True, cost of False), as integers times ``scale``."""

    pairs: tuple[tuple[int, int], ...]
    scale: int = 1

    @classmethod
    def zeros(cls, num_vars: int) -> "RawCosts":
        return cls(((0, 0),) * num_vars)

    @classmethod
    def unit(cls, num_vars: int) -> "RawCosts":
        return cls(((1, 0),) * num_vars)

    def __len__(self) -> int:
        return len(self.pairs)


def parse_costs(text, num_vars: int) -> RawCosts:
    """Parse ``<var> <costTrue> <costFalse>`` lines; omitted variables get (0, 0).

    Decimal values are scaled by the smallest power of ten that makes every
    value an integer.
    """
    values: dict[int, tuple[Decimal, Decimal]] = {}
    for lineno, raw in enumerate(_lines(text), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DimacsError(f"expected '<var> <costTrue> <costFalse>', got {line!r}", lineno)
        try:
            var = int(parts[0])
            c, d = Decimal(parts[1]), Decimal(parts[2])
        except (ValueError, InvalidOperation):
            raise DimacsError(f"malformed cost line {line!r}", lineno) from None
        if not (c.is_finite() and d.is_finite()):
            raise DimacsError(f"non-finite cost in {line!r}", lineno)
        if not 1 <= var <= num_vars:
            raise DimacsError(f"variable {var} out of range 1..{num_vars}", lineno)
        if var in values:
            raise DimacsError(f"duplicate cost line for variable {var}", lineno)
        values[var] = (c, d)

    digits = 0
    for c, d in values.values():
        for x in (c, d):
            exp = x.normalize().as_tuple().exponent
            digits = max(digits, -exp)
    scale = 10**digits
    pairs = []
    for v in range(1, num_vars + 1):
        c, d = values.get(v, (Decimal(0), Decimal(0)))
        pairs.append((int(c * scale), int(d * scale)))
    return RawCosts(tuple(pairs), scale)


def emit_costs(costs: RawCosts) -> str:
    lines = []
    for v, (c, d) in enumerate(costs.pairs, start=1):
        if c or d:
            lines.append(f"{v} {_fmt_scaled(c, costs.scale)} {_fmt_scaled(d, costs.scale)}")
    return "\n".join(lines) + ("\n" if lines else "")


def _fmt_scaled(value: int, scale: int) -> str:
    if scale == 1:
        return str(value)
    return str((Decimal(value) / Decimal(scale)).normalize())


# -- normalization -----------------------------------------------------------


def normalize(formula: CnfFormula, raw: RawCosts) -> MinsatInstance:
    """Reduce arbitrary (c, d) costs to c >= 0, d = 0 by shifting and flipping."""
    if len(raw) != formula.num_vars:
        raise ValueError("cost pairs must align with formula variables")
    offset = 0
    flipped = set()
    costs = []
    for v, (c, d) in enumerate(raw.pairs, start=1):
        m = min(c, d)
        offset += m
        c, d = c - m, d - m
        if d > 0:
            flipped.add(v)
            c, d = d, c
        costs.append(c)
    clauses = tuple(
        make_clause(-lit if abs(lit) in flipped else lit for lit in clause)
        for clause in formula.clauses
    )
    return MinsatInstance(
        CnfFormula(formula.num_vars, clauses),
        tuple(costs),
        NormalizationRecord(frozenset(flipped), offset, raw.scale),
    )


def to_normalized(norm: NormalizationRecord, assignment: Sequence[bool]) -> tuple[bool, ...]:
    """Map an assignment of the original variables into normalized space."""
    return tuple(bool(val) != (v in norm.flipped) for v, val in enumerate(assignment, start=1))


# flipping is an involution
from_normalized = to_normalized


def map_fixing(norm: NormalizationRecord, fixing: Iterable[tuple[int, bool]]) -> tuple[tuple[int, bool], ...]:
    return tuple((v, bool(val) != (v in norm.flipped)) for v, val in fixing)


def total_cost(instance: MinsatInstance, assignment: Sequence) -> int:
    """Sum of True-costs in normalized space; rejects partial assignments."""
    if len(assignment) != instance.num_vars or any(a is None for a in assignment):
        raise ValueError("total_cost needs a total assignment")
    return sum(c for c, a in zip(instance.costs, assignment) if a)


def raw_cost(raw: RawCosts, assignment: Sequence[bool]) -> int:
    """Cost of an original-space assignment under the raw (scaled) cost pairs."""
    return sum(c if a else d for (c, d), a in zip(raw.pairs, assignment))


def satisfies(clauses: Iterable[Clause], assignment: Sequence[bool]) -> bool:
    return all(any(assignment[abs(l) - 1] == (l > 0) for l in clause) for clause in clauses)


# -- fixing ------------------------------------------------------------------


def make_fixing(pairs: Iterable[tuple[int, bool]], num_vars: int | None = None) -> tuple[tuple[int, bool], ...]:
    out: dict[int, bool] = {}
    for v, val in pairs:
        v = int(v)
        if v < 1 or (num_vars is not None and v > num_vars):
            raise ValueError(f"fixing references unknown variable {v}")
        if v in out and out[v] != bool(val):
            raise ValueError(f"variable {v} fixed to both values")
        out[v] = bool(val)
    return tuple(out.items())


def parse_fixing(text: str, num_vars: int | None = None) -> tuple[tuple[int, bool], ...]:
    """Parse ``"1=T,5=F"``."""
    pairs = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            var, val = item.split("=")
            val = val.strip().upper()
            if val not in ("T", "F", "TRUE", "FALSE", "1", "0"):
                raise ValueError
            pairs.append((int(var), val in ("T", "TRUE", "1")))
        except ValueError:
            raise ValueError(f"malformed fixing item {item!r}; expected var=T|F") from None
    return make_fixing(pairs, num_vars)


# -- removal reductions --------------------------------------------------------


def _extend(instance: MinsatInstance, clauses: Iterable[Clause], extra_vars: int) -> MinsatInstance:
    n = instance.num_vars + extra_vars
    return MinsatInstance(
        CnfFormula(n, tuple(clauses)),
        instance.costs + (0,) * extra_vars,
        instance.norm,
    )


def model_variable_removal(instance: MinsatInstance, x: int) -> MinsatInstance:
    """Add v, w_t, w_f (numbered n+1..n+3) so that v=False models deleting x.

    Occurrences of x become w_t and of -x become w_f, with
    w_t <-> (v and x) and w_f <-> (v and -x) appended as six clauses.
    """
    n = instance.num_vars
    if not 1 <= x <= n:
        raise ValueError(f"variable {x} out of range 1..{n}")
    v, wt, wf = n + 1, n + 2, n + 3
    subst = {x: wt, -x: wf}
    clauses = [make_clause(subst.get(l, l) for l in c) for c in instance.clauses]
    clauses += [
        make_clause((-wt, v)), make_clause((-wt, x)), make_clause((wt, -v, -x)),
        make_clause((-wf, v)), make_clause((-wf, -x)), make_clause((wf, -v, x)),
    ]
    return _extend(instance, clauses, 3)


def model_clause_removal(instance: MinsatInstance, index: int) -> MinsatInstance:
    """Add a fresh zero-cost variable w (numbered n+1) to clause ``index``."""
    if not 0 <= index < len(instance.clauses):
        raise IndexError(f"clause index {index} out of range")
    w = instance.num_vars + 1
    clauses = list(instance.clauses)
    clauses[index] = make_clause(clauses[index] + (w,))
    return _extend(instance, clauses, 1)


# -- subsumption ---------------------------------------------------------------


def subsumes(a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff every literal of ``a`` occurs in ``b``."""
    if len(a) > len(b):
        return False
    sb = set(b)
    return all(lit in sb for lit in a)


def split_dominated(clauses: Sequence[Clause], lemmas: Sequence[Clause]) -> tuple[list[Clause], list[Clause]]:
    """Drop every clause subsumed by one of ``lemmas``.

    Returns ``(kept, deleted)``.  Lemma clauses themselves are not added here;
    callers append them, which keeps the result equivalent to clauses + lemmas.
    """
    if not lemmas:
        return list(clauses), []
    lemma_sets = [frozenset(l) for l in lemmas]
    kept, deleted = [], []
    for clause in clauses:
        cs = set(clause)
        if any(ls <= cs for ls in lemma_sets):
            deleted.append(clause)
        else:
            kept.append(clause)
    return kept, deleted


def remove_dominated(formula: CnfFormula, lemmas: Sequence[Clause]) -> CnfFormula:
    """Delete clauses subsumed by ``lemmas`` and append the lemmas (deduplicated)."""
    lemmas = [make_clause(l) for l in lemmas]
    kept, _ = split_dominated(formula.clauses, lemmas)
    extra = []
    for l in lemmas:
        if l not in extra:
            extra.append(l)
    return CnfFormula(formula.num_vars, tuple(kept + extra))
