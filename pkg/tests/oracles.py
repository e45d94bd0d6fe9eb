"""Independent brute-force oracles used to freeze expected values.

Everything here is written against the definitions directly, by exhaustive
enumeration, and deliberately shares no code with the package: minimality is
a pairwise subset scan, strong connectivity is mutual reachability, and the
checkers are literal quantifier loops.
"""

from itertools import chain, combinations


def powerset(items):
    items = sorted(items, key=lambda x: (isinstance(x, str), x))
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def declared_pairs(qs, only=None):
    out = []
    for p in qs.active:
        if only is not None and p not in only:
            continue
        if qs.declares(p):
            for q in qs.quorums_of(p):
                out.append((p, q))
    return out


def oracle_minimal_quorums(qs, attack):
    declared = [q for (_, q) in declared_pairs(qs, only=attack.well_behaved)]
    result = set()
    for q in declared:
        if not any(other != q and other < q for other in declared):
            result.add(q)
    return result


def oracle_is_blocking(quorums, candidate):
    for q in quorums:
        if not set(q) & set(candidate):
            return False
    return True


def oracle_consistency(qs, attack, at_set):
    pairs = declared_pairs(qs, only=attack.well_behaved)
    for (_, q1) in pairs:
        for (_, q2) in pairs:
            if not (set(q1) & set(q2) & set(at_set)):
                return False
    return True


def oracle_availability(qs, for_set, at_set):
    for p in for_set:
        if not qs.declares(p):
            return False
        if not any(set(q) <= set(at_set) for q in qs.quorums_of(p)):
            return False
    return True


def oracle_inclusion(qs, attack, p_set):
    wb = attack.well_behaved
    for (_, q) in declared_pairs(qs, only=wb):
        for member in set(q) & set(p_set):
            if not qs.declares(member):
                return False
            if not any(set(q2) & wb <= set(q) for q2 in qs.quorums_of(member)):
                return False
    return True


def oracle_sharing(qs):
    for (_, q) in declared_pairs(qs):
        for member in q:
            if not qs.declares(member):
                return False
            if not any(set(q2) <= set(q) for q2 in qs.quorums_of(member)):
                return False
    return True


def oracle_outlived_sets(qs, attack):
    """All outlived subsets of the active well-behaved processes."""
    wb_active = qs.active & attack.well_behaved
    out = []
    for combo in powerset(wb_active):
        o = frozenset(combo)
        if (oracle_consistency(qs, attack, o)
                and oracle_availability(qs, o, o)
                and oracle_inclusion(qs, attack, o)):
            out.append(o)
    return out


def oracle_maximal_outlived_sets(qs, attack):
    sets = oracle_outlived_sets(qs, attack)
    return [o for o in sets if not any(o < other for other in sets)]


def reachable(edges, start):
    seen = {start}
    frontier = [start]
    while frontier:
        v = frontier.pop()
        for (a, b) in edges:
            if a == v and b not in seen:
                seen.add(b)
                frontier.append(b)
    return seen


def oracle_components(vertices, edges):
    """SCCs by mutual reachability; independent of any stack-based algorithm."""
    reach = {v: reachable(edges, v) for v in vertices}
    comps = []
    assigned = set()
    for v in sorted(vertices, key=lambda x: (isinstance(x, str), x)):
        if v in assigned:
            continue
        comp = {w for w in vertices if v in reach[w] and w in reach[v]}
        comps.append(frozenset(comp))
        assigned |= comp
    return comps


def oracle_sinks(vertices, edges):
    comps = oracle_components(vertices, edges)
    sinks = []
    for comp in comps:
        outgoing = any(a in comp and b not in comp for (a, b) in edges)
        if not outgoing:
            sinks.append(comp)
    return sinks


def oracle_join_fixpoint(seed_set, declarations, max_rounds=50):
    """Replay the join growth rule as a plain fixpoint iteration."""
    s = {frozenset(seed_set)}
    for _ in range(max_rounds):
        changed = False
        for q in sorted(s, key=sorted):
            for p in sorted(q):
                declared = declarations.get(p)
                if declared is None:
                    return None  # would probe a silent process forever
                if any(frozenset(d) <= q for d in declared):
                    continue
                s.discard(q)
                s |= {q | frozenset(d) for d in declared}
                changed = True
                break
            if changed:
                break
        if not changed:
            return s
    raise AssertionError("join fixpoint did not converge")
