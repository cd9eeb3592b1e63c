"""The learning compiler: compiled classes, level sampling, the learn loop,
performance curves, and the JSON artifact."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .core import (
    Clause, CnfFormula, MinsatInstance, RawCosts, emit_costs, emit_dimacs, make_clause, normalize,
    parse_dimacs, subsumes,
)
from .learner import (
    DEFAULT_NODE_BUDGET, MAX_LEMMA_LEN, clause_cap, extract_cost_pairs, extract_sat_lemmas, incorporate,
    minimize_cost_pair, minimize_sat_lemma, minsat_oracle, sat_oracle,
)
from .forms import Renaming
from .partition import HIDDEN_HORN, Partition, compute_partition, verify_partition
from .solver import (
    COST_CONDITIONAL, MINSAT, SAT, UNCONDITIONAL, Lemma, NodeBudgetExceeded, prepare, solve,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

V_INCREASE = "vIncrease"
CLAUSE_CAP = "clauseCap"
SMALL_XN = "smallXN"
LEVELS_EXHAUSTED = "levelsExhausted"
STOP_REASONS = (V_INCREASE, CLAUSE_CAP, SMALL_XN, LEVELS_EXHAUSTED)


class ArtifactError(ValueError):
    pass


@dataclass
class LevelRecord:
    level: int
    samples: int = 0
    v: int = 0
    lemmas_added: int = 0
    pairs_added: int = 0


@dataclass
class LearningLog:
    mode: str
    levels: list[LevelRecord] = field(default_factory=list)
    stop_reason: str | None = None
    clauses_deleted: int = 0

    def v_sequence(self) -> list[int]:
        return [r.v for r in self.levels]


@dataclass
class CompiledClass:
    source: CnfFormula
    raw_costs: RawCosts
    instance: MinsatInstance
    originals: list[Clause]
    lemmas: list[Lemma]
    pairs: list[Lemma]
    partition: Partition
    original_clause_count: int
    formula_hash: str
    log: list[LearningLog] = field(default_factory=list)
    clause_cap_factor: float = 3.0
    deleted_total: int = 0
    version: int = 0

    def core_clauses(self) -> list[Clause]:
        """Input clauses still present plus lemmas over enumerated variables;
        together equivalent to the input formula."""
        return self.originals + [l.clause for l in self.lemmas if not l.is_global]

    def global_clauses(self) -> list[Clause]:
        return [l.clause for l in self.lemmas if l.is_global]

    def clause_count(self) -> int:
        return len(self.originals) + len(self.lemmas) + len(self.pairs)

    def copy(self) -> "CompiledClass":
        return copy.deepcopy(self)

    def structure(self) -> dict:
        """Everything that defines the class, for equality checks."""
        return {
            "hash": self.formula_hash,
            "originals": list(self.originals),
            "lemmas": [(l.clause, l.is_global) for l in self.lemmas],
            "pairs": [(p.clause, p.threshold) for p in self.pairs],
            "partition": (sorted(self.partition.easy), sorted(self.partition.enumerated),
                          sorted(self.partition.easy_renaming.flipped)),
            "count": self.original_clause_count,
            "log": [asdict(l) for l in self.log],
        }


def formula_hash(formula: CnfFormula, raw: RawCosts) -> str:
    h = hashlib.sha256()
    h.update(emit_dimacs(formula).encode())
    h.update(f"scale {raw.scale}\n".encode())
    h.update(emit_costs(raw).encode())
    return h.hexdigest()


def build_compiled(formula: CnfFormula, raw: RawCosts | None = None, clause_cap_factor: float = 3.0) -> CompiledClass:
    """Normalize costs and partition, without any learning."""
    raw = raw if raw is not None else RawCosts.zeros(formula.num_vars)
    instance = normalize(formula, raw)
    return CompiledClass(
        source=formula,
        raw_costs=raw,
        instance=instance,
        originals=list(instance.clauses),
        lemmas=[],
        pairs=[],
        partition=compute_partition(instance),
        original_clause_count=len(instance.clauses),
        formula_hash=formula_hash(formula, raw),
        clause_cap_factor=clause_cap_factor,
    )


def compile_instance(instance: MinsatInstance) -> CompiledClass:
    """Wrap an already normalized instance (raw costs = (c, 0))."""
    return build_compiled(instance.formula, RawCosts(tuple((c, 0) for c in instance.costs)))


# -- sampling ----------------------------------------------------------------


def sample_level(num_vars: int, level: int, n: int, seed: int) -> list[tuple[tuple[int, bool], ...]]:
    """``n`` random fixings of ``level`` distinct variables each, reproducible from ``seed``."""
    if not 0 <= level <= num_vars:
        raise ValueError(f"level {level} out of range 0..{num_vars}")
    rng = random.Random(f"{seed}/{level}")
    out = []
    for _ in range(n):
        chosen = sorted(rng.sample(range(1, num_vars + 1), level))
        out.append(tuple((v, rng.random() < 0.5) for v in chosen))
    return out


# -- learning ---------------------------------------------------------------


def learn(
    compiled: CompiledClass,
    mode: str = SAT,
    samples_per_level: int = 100,
    seed: int = 0,
    node_budget: int = DEFAULT_NODE_BUDGET,
    max_lemma_len: int = MAX_LEMMA_LEN,
    small_xn: int = 5,
    max_level: int | None = None,
) -> CompiledClass:
    """One learning step (SAT or MINSAT) over levels 0, 1, 2, ...; returns a new class."""
    compiled = compiled.copy()
    n = compiled.instance.num_vars
    top = n if max_level is None else min(max_level, n)
    record = LearningLog(mode)
    compiled.log.append(record)
    deleted_before = compiled.deleted_total

    def stop(reason: str) -> CompiledClass:
        record.stop_reason = reason
        record.clauses_deleted = compiled.deleted_total - deleted_before
        log.info("%s learning stopped: %s after %d levels", mode, reason, len(record.levels))
        return compiled

    if len(compiled.partition.enumerated) <= small_xn:
        return stop(SMALL_XN)
    if compiled.clause_count() >= clause_cap(compiled):
        return stop(CLAUSE_CAP)

    seen: dict = {}
    prepared: dict = {}
    prev_v = None
    for level in range(top + 1):
        rec = LevelRecord(level)
        record.levels.append(rec)
        for fixing in sample_level(n, level, samples_per_level, seed):
            key = (fixing, compiled.version)
            rec.samples += 1
            if key in seen:
                rec.v = max(rec.v, seen[key])
            else:
                if compiled.version not in prepared:
                    prepared.clear()
                    prepared[compiled.version] = prepare(compiled, mode)
                prep = prepared[compiled.version]
                effort, cap_hit = _solve_and_learn(compiled, prep, fixing, mode, node_budget, max_lemma_len, rec)
                seen[key] = effort
                rec.v = max(rec.v, effort)
                if cap_hit:
                    return stop(CLAUSE_CAP)
                if len(compiled.partition.enumerated) <= small_xn:
                    return stop(SMALL_XN)
            if prev_v is not None and rec.v > prev_v:
                return stop(V_INCREASE)
        prev_v = rec.v
    return stop(LEVELS_EXHAUSTED)


def _solve_and_learn(compiled, prep, fixing, mode, node_budget, max_len, rec) -> tuple[int, bool]:
    try:
        result = solve(compiled, fixing, mode, trace=True, node_budget=node_budget, prepared=prep)
    except NodeBudgetExceeded as exc:
        return exc.nodes, False
    trace = result.trace
    cands = extract_sat_lemmas(trace) if mode == SAT else extract_cost_pairs(trace)
    if not cands:
        return result.nodes, False
    easy = compiled.partition.easy
    # oracles see the database as it stood when the trace was produced
    is_sat = _lazy(lambda: sat_oracle(compiled, node_budget, prep))
    optimum = _lazy(lambda: minsat_oracle(compiled, node_budget, prep))
    learned: list[Lemma] = []
    for cand in cands:
        clause = cand.clause
        if any(subsumes(l.clause, clause) and (l.kind == UNCONDITIONAL or (cand.kind == COST_CONDITIONAL and l.threshold >= cand.threshold))
               for l in learned):
            continue
        if cand.kind == UNCONDITIONAL:
            lem = minimize_sat_lemma(cand, is_sat, max_len, easy)
        else:
            lem = minimize_cost_pair(cand, optimum, max_len, easy)
        if lem is not None:
            learned.append(lem)
    if not learned:
        return result.nodes, False
    report = incorporate(compiled, learned)
    rec.lemmas_added += report.lemmas_added
    rec.pairs_added += report.pairs_added
    return result.nodes, report.cap_hit


def _lazy(build):
    """Defer preparing an oracle until its first call."""
    cell = []

    def call(fixing):
        if not cell:
            cell.append(build())
        return cell[0](fixing)

    return call


def compile_class(
    compiled: CompiledClass,
    mode: str = "both",
    samples_per_level: int = 100,
    seed: int = 0,
    **kwargs,
) -> CompiledClass:
    """SAT learning, then MINSAT learning for mode 'both'."""
    if mode in (SAT, "both"):
        compiled = learn(compiled, SAT, samples_per_level, seed, **kwargs)
    if mode in (MINSAT, "both"):
        compiled = learn(compiled, MINSAT, samples_per_level, seed, **kwargs)
    return compiled


# -- performance curves --------------------------------------------------------------


@dataclass
class CurveRow:
    level: int
    samples: int
    mean_nodes: float
    max_nodes: int
    mean_ms: float
    max_ms: float


@dataclass
class PerformanceCurve:
    rows: list[CurveRow]

    @property
    def worst(self) -> int:
        return max((r.max_nodes for r in self.rows), default=0)

    def mean_worst(self, levels) -> float:
        vals = [r.max_nodes for r in self.rows if r.level in levels]
        return sum(vals) / len(vals) if vals else 0.0


def estimate_curve(
    compiled: CompiledClass,
    samples_per_level: int = 100,
    max_level: int | None = None,
    seed: int = 0,
    mode: str = MINSAT,
    node_budget: int | None = None,
) -> PerformanceCurve:
    """Solve seeded samples per level with no learning; record mean/max effort.

    With ``max_level=None`` the sweep stops after three consecutive levels whose
    worst case is at most 1% of the peak seen so far.
    """
    n = compiled.instance.num_vars
    top = n if max_level is None else min(max_level, n)
    rows: list[CurveRow] = []
    peak = 0
    quiet = 0
    for level in range(top + 1):
        nodes, ms = [], []
        for fixing in sample_level(n, level, samples_per_level, seed):
            t0 = time.perf_counter()
            try:
                res = solve(compiled, fixing, mode, node_budget=node_budget)
                nodes.append(res.nodes)
            except NodeBudgetExceeded as exc:
                nodes.append(exc.nodes)
            ms.append((time.perf_counter() - t0) * 1000.0)
        row = CurveRow(level, len(nodes), sum(nodes) / max(len(nodes), 1), max(nodes, default=0),
                       sum(ms) / max(len(ms), 1), max(ms, default=0.0))
        rows.append(row)
        if max_level is None:
            peak = max(peak, row.max_nodes)
            quiet = quiet + 1 if row.max_nodes <= 0.01 * peak else 0
            if quiet >= 3:
                break
    return PerformanceCurve(rows)


CSV_HEADER = "level,samples,mean_nodes,max_nodes,mean_ms,max_ms"


def curve_csv_rows(curve: PerformanceCurve) -> list[str]:
    return [
        f"{r.level},{r.samples},{r.mean_nodes:.3f},{r.max_nodes},{r.mean_ms:.3f},{r.max_ms:.3f}"
        for r in curve.rows
    ]


# -- artifact ------------------------------------------------------------------


def to_json(compiled: CompiledClass) -> dict:
    part = compiled.partition
    norm = compiled.instance.norm
    return {
        "formatVersion": FORMAT_VERSION,
        "formulaHash": compiled.formula_hash,
        "dimacsEcho": emit_dimacs(compiled.source),
        "costs": {"scale": compiled.raw_costs.scale, "pairs": [list(p) for p in compiled.raw_costs.pairs]},
        "normalization": {"flipped": sorted(norm.flipped), "offset": norm.offset},
        "originalClauseCount": compiled.original_clause_count,
        "clauseCapFactor": compiled.clause_cap_factor,
        "clauseDB": (
            [{"literals": list(c), "lemma": False, "global": False} for c in compiled.originals]
            + [{"literals": list(l.clause), "lemma": True, "global": l.is_global} for l in compiled.lemmas]
        ),
        "pairs": [{"literals": list(p.clause), "threshold": p.threshold} for p in compiled.pairs],
        "partition": {
            "easy": sorted(part.easy),
            "enumerated": sorted(part.enumerated),
            "flippedVars": sorted(part.easy_renaming.flipped),
        },
        "log": [asdict(l) for l in compiled.log],
        "deletedTotal": compiled.deleted_total,
    }


def save_artifact(compiled: CompiledClass, destination) -> None:
    text = json.dumps(to_json(compiled), indent=1)
    Path(destination).write_text(text + "\n")


def _clause(lits, n: int) -> Clause:
    if not isinstance(lits, list) or not all(isinstance(l, int) and not isinstance(l, bool) for l in lits):
        raise ArtifactError(f"malformed clause {lits!r}")
    if any(not 1 <= abs(l) <= n for l in lits):
        raise ArtifactError(f"clause {lits} mentions an unknown variable")
    try:
        clause = make_clause(lits)
    except ValueError as exc:
        raise ArtifactError(f"bad clause {lits}: {exc}") from None
    if list(clause) != lits:
        raise ArtifactError(f"clause {lits} is not in canonical form")
    return clause


def from_json(doc: dict, expected_hash: str | None = None) -> CompiledClass:
    try:
        if doc.get("formatVersion") != FORMAT_VERSION:
            raise ArtifactError(f"unsupported formatVersion {doc.get('formatVersion')!r}")
        formula = parse_dimacs(doc["dimacsEcho"])
        raw = RawCosts(tuple((int(c), int(d)) for c, d in doc["costs"]["pairs"]), int(doc["costs"]["scale"]))
        if len(raw) != formula.num_vars:
            raise ArtifactError("cost table does not match the variable count")
        digest = formula_hash(formula, raw)
        if digest != doc["formulaHash"]:
            raise ArtifactError("formulaHash does not match the embedded formula and costs")
        if expected_hash is not None and digest != expected_hash:
            raise ArtifactError("artifact was compiled from a different formula or cost table")
        instance = normalize(formula, raw)
        n = instance.num_vars
        originals, lemmas = [], []
        for entry in doc["clauseDB"]:
            clause = _clause(entry["literals"], n)
            if entry["lemma"]:
                lemmas.append(Lemma(clause, UNCONDITIONAL, None, bool(entry["global"])))
            else:
                originals.append(clause)
        easy_vars = set(doc["partition"]["easy"])
        pairs = []
        for entry in doc["pairs"]:
            z = entry["threshold"]
            if not isinstance(z, int) or isinstance(z, bool):
                raise ArtifactError(f"pair threshold {z!r} is not an integer")
            pairs.append(Lemma(_clause(entry["literals"], n), COST_CONDITIONAL, z,
                               any(abs(l) in easy_vars for l in entry["literals"])))
        original_set = set(instance.clauses)
        if not set(originals) <= original_set:
            raise ArtifactError("clauseDB contains an input clause that is not in the formula")
        part_doc = doc["partition"]
        partition = Partition(
            enumerated=frozenset(part_doc["enumerated"]),
            easy=frozenset(part_doc["easy"]),
            easy_renaming=Renaming(frozenset(part_doc["flippedVars"])),
            property_tag=HIDDEN_HORN,
        )
        logs = []
        for entry in doc["log"]:
            levels = [LevelRecord(**r) for r in entry["levels"]]
            logs.append(LearningLog(entry["mode"], levels, entry["stop_reason"], entry.get("clauses_deleted", 0)))
        compiled = CompiledClass(
            source=formula,
            raw_costs=raw,
            instance=instance,
            originals=originals,
            lemmas=lemmas,
            pairs=pairs,
            partition=partition,
            original_clause_count=int(doc["originalClauseCount"]),
            formula_hash=digest,
            log=logs,
            clause_cap_factor=float(doc.get("clauseCapFactor", 3.0)),
            deleted_total=int(doc.get("deletedTotal", 0)),
        )
    except ArtifactError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ArtifactError(f"malformed artifact: {exc!r}") from None
    if not verify_partition(instance, partition, compiled.core_clauses()):
        raise ArtifactError("stored partition fails hidden-Horn verification")
    if compiled.original_clause_count != len(instance.clauses):
        raise ArtifactError("originalClauseCount does not match the formula")
    return compiled


def load_artifact(source, expected_hash: str | None = None) -> CompiledClass:
    try:
        doc = json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"artifact is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ArtifactError("artifact root must be a JSON object")
    return from_json(doc, expected_hash)
