"""Split variables into an easy set X_E (hidden-Horn partial instance) and an
enumerated set X_N."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import Clause, CnfFormula, MinsatInstance
from .forms import Renaming, detect_restricted_hidden_horn, is_horn_under

HIDDEN_HORN = "hiddenHorn"
NO_PROPERTY = "none"


@dataclass(frozen=True)
class Partition:
    enumerated: frozenset
    easy: frozenset
    easy_renaming: Renaming
    property_tag: str = HIDDEN_HORN


def restrict(clauses: Sequence[Clause], keep) -> list[Clause]:
    return [tuple(l for l in c if abs(l) in keep) for c in clauses]


def partial_instance(instance: MinsatInstance, keep) -> MinsatInstance:
    """Delete every literal over a variable outside ``keep``; empty clauses stay.

    Variable numbering is preserved; costs of dropped variables are zeroed.
    """
    keep = set(keep)
    clauses = tuple(restrict(instance.clauses, keep))
    costs = tuple(c if v in keep else 0 for v, c in enumerate(instance.costs, start=1))
    return MinsatInstance(CnfFormula(instance.num_vars, clauses), costs, instance.norm)


def _detect(instance: MinsatInstance, clauses: Sequence[Clause], easy) -> Renaming | None:
    return detect_restricted_hidden_horn(instance, restrict(clauses, easy))


def _violation_scores(clauses: Sequence[Clause], easy) -> dict[int, int]:
    """Per variable, how many positive-positive literal pairs it sits in."""
    scores: dict[int, int] = {}
    for c in clauses:
        pos = [l for l in c if l > 0 and l in easy]
        k = len(pos)
        if k > 1:
            for v in pos:
                scores[v] = scores.get(v, 0) + k - 1
    return scores


def compute_partition(instance: MinsatInstance, clauses: Sequence[Clause] | None = None) -> Partition:
    """Greedy hidden-Horn partition; the result is 1-maximal.

    Starting from easy = all variables, move the variable in the most
    positive-positive pairs (lowest index on ties) to the enumerated side until
    the partial instance is restricted hidden Horn, then try every enumerated
    variable once for re-admission in index order.
    """
    clauses = instance.clauses if clauses is None else clauses
    easy = set(range(1, instance.num_vars + 1))
    renaming = _detect(instance, clauses, easy)
    while renaming is None:
        scores = _violation_scores(clauses, easy)
        # detection only fails when some clause keeps two positive literals
        worst = min(scores, key=lambda v: (-scores[v], v))
        easy.discard(worst)
        renaming = _detect(instance, clauses, easy)

    enumerated = sorted(set(range(1, instance.num_vars + 1)) - easy)
    for v in enumerated:
        easy.add(v)
        trial = _detect(instance, clauses, easy)
        if trial is None:
            easy.discard(v)
        else:
            renaming = trial
    easy_f = frozenset(easy)
    return Partition(
        enumerated=frozenset(range(1, instance.num_vars + 1)) - easy_f,
        easy=easy_f,
        easy_renaming=renaming,
    )


def verify_partition(instance: MinsatInstance, partition: Partition, clauses: Sequence[Clause] | None = None) -> bool:
    """Recheck that the stored partition covers all variables and S_E is hidden Horn."""
    clauses = instance.clauses if clauses is None else clauses
    allv = frozenset(range(1, instance.num_vars + 1))
    if partition.easy | partition.enumerated != allv or partition.easy & partition.enumerated:
        return False
    if partition.property_tag != HIDDEN_HORN:
        return False
    flipped = partition.easy_renaming.flipped
    if not flipped <= partition.easy:
        return False
    if any(instance.cost(v) > 0 for v in flipped):
        return False
    return is_horn_under(restrict(clauses, partition.easy), flipped)

