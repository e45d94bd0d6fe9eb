"""Decidable checkers for quorum-system properties.

Each checker returns a :class:`PropertyReport`; a failing report always
carries a witness that violates the definition when re-checked directly.
The module-level ``*_holds`` helpers operate on plain quorum maps so the
simulator can probe the same predicates on every step without building
full system objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional

from .core import Attack, QuorumSystem, sorted_ids
from .errors import BadSubset, TooLarge

CONSISTENCY = "Consistency"
AVAILABILITY = "Availability"
AVAILABLE_INSIDE = "AvailableInside"
INCLUSION = "Inclusion"
SHARING = "Sharing"
OUTLIVED = "Outlived"
ACTIVE_INCLUSION = "ActiveInclusion"
ACTIVE_AVAILABILITY = "ActiveAvailability"
TENTATIVE_INCLUSION = "TentativeInclusion"


@dataclass(frozen=True)
class PropertyReport:
    property: str
    holds: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "holds": self.holds,
            "witness": _jsonify(self.witness),
        }


def _jsonify(obj):
    if obj is None or isinstance(obj, (int, str, bool)):
        return obj
    if isinstance(obj, frozenset):
        return sorted_ids(obj)
    if isinstance(obj, (tuple, list)):
        return [_jsonify(x) for x in obj]
    return str(obj)


def report_to_json(report: PropertyReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True)


def _wb_quorum_map(qs: QuorumSystem, attack: Attack) -> dict:
    return {p: qs.quorums_of(p)
            for p in sorted_ids(qs.active & attack.well_behaved)
            if qs.declares(p)}


# --- raw predicates over plain maps (process -> iterable of frozensets) ---

def consistency_witness(wb_quorums: Mapping, at_p: frozenset):
    """First pair of quorums whose intersection misses ``at_p``, else None."""
    decls = [(p, q) for p in sorted_ids(wb_quorums) for q in wb_quorums[p]]
    for (p1, q1), (p2, q2) in combinations(decls, 2):
        if not (q1 & q2 & at_p):
            return q1, q2
    for p, q in decls:
        if not (q & at_p):
            return q, q
    return None


def availability_witness(quorums: Mapping, for_p, at_p: frozenset):
    for p in sorted_ids(for_p):
        if not any(q <= at_p for q in quorums.get(p, ())):
            return (p,)
    return None


def active_availability_witness(quorums: Mapping, inside_p: frozenset, left: frozenset):
    for p in sorted_ids(inside_p - left):
        if not any((q - left) <= inside_p for q in quorums.get(p, ())):
            return (p,)
    return None


def inclusion_witness(wb_quorums: Mapping, p_set: frozenset, wb: frozenset,
                      left: frozenset = frozenset(), tentative: Mapping = None):
    """Witness (q, p2) for a quorum inclusion failure, else None.

    ``left`` weakens the check to the active variant: departed members owe
    no witness, and a witness quorum only needs its well-behaved active part
    inside the enclosing quorum.  ``tentative`` extends the witness
    candidates per process.
    """
    for p in sorted_ids(wb_quorums):
        for q in wb_quorums[p]:
            for p2 in sorted_ids((q & p_set) - left):
                candidates = list(wb_quorums.get(p2, ()))
                if tentative:
                    candidates.extend(tq for _, tq in tentative.get(p2, ()))
                if not any((q2 & wb) - left <= q for q2 in candidates):
                    return q, p2
    return None


def sharing_witness(quorums: Mapping):
    for p in sorted_ids(quorums):
        for q in quorums[p]:
            for p2 in sorted_ids(q):
                if not any(q2 <= q for q2 in quorums.get(p2, ())):
                    return q, p2
    return None


# --- PropertyReport front ends -------------------------------------------

def _require_subset(p_set: frozenset, wb: frozenset, what: str):
    if not p_set <= wb:
        raise BadSubset(f"{what} must be well-behaved; offending ids: "
                        f"{sorted_ids(p_set - wb)}")


def check_consistency(qs: QuorumSystem, attack: Attack, at_p) -> PropertyReport:
    at_p = frozenset(at_p)
    _require_subset(at_p, attack.well_behaved, "consistency set")
    w = consistency_witness(_wb_quorum_map(qs, attack), at_p)
    return PropertyReport(CONSISTENCY, w is None, w)


def check_consistency_raw(qs: QuorumSystem, attack: Attack, at_p) -> PropertyReport:
    """Consistency at an arbitrary (not necessarily well-behaved) set.

    Internal helper; the definition-faithful checker is check_consistency.
    """
    w = consistency_witness(_wb_quorum_map(qs, attack), frozenset(at_p))
    return PropertyReport(CONSISTENCY, w is None, w)


def check_availability(qs: QuorumSystem, for_p, at_p) -> PropertyReport:
    for_p = frozenset(for_p)
    quorums = {p: qs.quorums_of(p) for p in for_p}  # raises UnknownProcess
    w = availability_witness(quorums, for_p, frozenset(at_p))
    return PropertyReport(AVAILABILITY, w is None, w)


def check_available_inside(qs: QuorumSystem, p_set) -> PropertyReport:
    rep = check_availability(qs, p_set, p_set)
    return PropertyReport(AVAILABLE_INSIDE, rep.holds, rep.witness)


def check_active_availability(qs: QuorumSystem, p_set, left) -> PropertyReport:
    p_set = frozenset(p_set)
    left = frozenset(left)
    quorums = {p: qs.quorums_of(p) for p in p_set - left if qs.declares(p)}
    w = active_availability_witness(quorums, p_set, left)
    return PropertyReport(ACTIVE_AVAILABILITY, w is None, w)


def check_quorum_inclusion(qs: QuorumSystem, attack: Attack, p_set) -> PropertyReport:
    p_set = frozenset(p_set)
    _require_subset(p_set, attack.well_behaved, "inclusion set")
    w = inclusion_witness(_wb_quorum_map(qs, attack), p_set, attack.well_behaved)
    return PropertyReport(INCLUSION, w is None, w)


def check_active_inclusion(qs: QuorumSystem, attack: Attack, p_set, left) -> PropertyReport:
    p_set = frozenset(p_set)
    _require_subset(p_set, attack.well_behaved, "inclusion set")
    w = inclusion_witness(_wb_quorum_map(qs, attack), p_set, attack.well_behaved,
                          left=frozenset(left))
    return PropertyReport(ACTIVE_INCLUSION, w is None, w)


def check_tentative_inclusion(qs: QuorumSystem, attack: Attack, p_set,
                              tentative: Mapping) -> PropertyReport:
    """Inclusion where the witness may come from a process's tentative set.

    ``tentative`` maps a process to a set of (requester, quorum) pairs.
    """
    p_set = frozenset(p_set)
    _require_subset(p_set, attack.well_behaved, "inclusion set")
    w = inclusion_witness(_wb_quorum_map(qs, attack), p_set, attack.well_behaved,
                          tentative=tentative)
    return PropertyReport(TENTATIVE_INCLUSION, w is None, w)


def check_quorum_sharing(qs: QuorumSystem) -> PropertyReport:
    quorums = {p: qs.quorums_of(p) for p in qs.active if qs.declares(p)}
    w = sharing_witness(quorums)
    return PropertyReport(SHARING, w is None, w)


def check_outlived(qs: QuorumSystem, attack: Attack, outlived_set) -> PropertyReport:
    """Conjunction of consistency at O, availability inside O and inclusion for O."""
    o = frozenset(outlived_set)
    _require_subset(o, attack.well_behaved, "outlived set")
    for rep in (check_consistency(qs, attack, o),
                check_available_inside(qs, o),
                check_quorum_inclusion(qs, attack, o)):
        if not rep.holds:
            return PropertyReport(OUTLIVED, False, (rep.property,) + (rep.witness or ()))
    return PropertyReport(OUTLIVED, True, None)


def maximal_outlived_sets(qs: QuorumSystem, attack: Attack, size_bound: int = 12) -> list:
    """All inclusion-maximal outlived subsets of the active well-behaved set.

    Exhaustive enumeration, descending by size, pruned by the availability
    conjunct; capped because the search is exponential.
    """
    wb = sorted_ids(qs.active & attack.well_behaved)
    if len(wb) > size_bound:
        raise TooLarge(f"{len(wb)} well-behaved processes exceed bound {size_bound}")
    found = []
    for size in range(len(wb), 0, -1):
        for combo in combinations(wb, size):
            cand = frozenset(combo)
            if any(cand <= prev for prev in found):
                continue
            if not check_available_inside(qs, cand).holds:
                continue
            if check_outlived(qs, attack, cand).holds:
                found.append(cand)
    return found


def check_for_attacks(checker, qs: QuorumSystem, attacks: Iterable[Attack],
                      *args, **kwargs) -> PropertyReport:
    """Lift a checker over a set of attacks: AND of the per-attack results."""
    last = None
    for attack in attacks:
        rep = checker(qs, attack, *args, **kwargs)
        if not rep.holds:
            return rep
        last = rep
    return last if last is not None else PropertyReport("Lifted", True, None)
