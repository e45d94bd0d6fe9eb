"""Random quorum-system generators for property suites.

Two families: unconstrained systems (for the basic minimality lemmas) and
pivot-core systems built to satisfy consistency plus quorum sharing by
construction, which the graph lemmas and the reconfiguration preservation
suites then re-verify through the checkers before relying on them.
"""

from __future__ import annotations

import random

from .core import Attack, new_quorum_system
from .props import check_consistency, check_quorum_sharing, maximal_outlived_sets


def arbitrary_system(rng: random.Random, n_max: int = 7):
    """Unconstrained random declarations; only the constructor invariants hold."""
    n = rng.randint(2, n_max)
    universe = list(range(1, n + 1))
    byz = frozenset(p for p in universe if rng.random() < 0.2)
    decls = {}
    for p in universe:
        if p in byz and rng.random() < 0.5:
            continue
        count = rng.randint(1, 3)
        quorums = []
        for _ in range(count):
            size = rng.randint(1, n)
            q = set(rng.sample(universe, size))
            q.add(p)
            quorums.append(frozenset(q))
        decls[p] = quorums
    qs = new_quorum_system(universe, decls, universe=universe, byzantine=byz)
    return qs, Attack.of(universe, byz)


def sharing_system(rng: random.Random, n_max: int = 7):
    """Random system satisfying consistency at W and quorum sharing.

    A pivot process sits in every core minimal quorum, so all quorum pairs
    intersect at it; processes outside the core declare supersets of core
    quorums, which preserves sharing.  The Byzantine set avoids the pivot.
    """
    n = rng.randint(3, n_max)
    universe = list(range(1, n + 1))
    pivot = rng.choice(universe)
    core_pool = [p for p in universe if p != pivot]
    rng.shuffle(core_pool)
    mq_count = rng.randint(1, min(3, n - 1))
    minimal = []
    for _ in range(mq_count):
        extra = rng.randint(1, max(1, min(2, len(core_pool))))
        members = {pivot} | set(rng.sample(core_pool, extra))
        minimal.append(frozenset(members))
    # drop nested cores so they really are minimal
    minimal = [q for q in minimal if not any(o < q for o in minimal)]
    core = set().union(*minimal)
    decls = {}
    for p in universe:
        if p in core:
            decls[p] = [q for q in minimal if p in q]
        else:
            picks = rng.sample(minimal, rng.randint(1, len(minimal)))
            decls[p] = [q | {p} for q in picks]
    byz = frozenset(p for p in universe
                    if p != pivot and rng.random() < 0.25)
    qs = new_quorum_system(universe, decls, universe=universe, byzantine=byz)
    attack = Attack.of(universe, byz)
    return qs, attack


def checked_sharing_system(rng: random.Random, n_max: int = 7):
    """sharing_system plus checker verification; retries until both hold."""
    while True:
        qs, attack = sharing_system(rng, n_max)
        if (check_consistency(qs, attack, attack.well_behaved).holds
                and check_quorum_sharing(qs).holds):
            return qs, attack


def outlived_system(rng: random.Random, n_max: int = 6, min_outlived: int = 2):
    """A generated system together with a maximal outlived set of useful size."""
    while True:
        qs, attack = checked_sharing_system(rng, n_max)
        sets = maximal_outlived_sets(qs, attack)
        if sets and len(sets[0]) >= min_outlived:
            return qs, attack, sets[0]
