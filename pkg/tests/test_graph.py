import random
from itertools import combinations

import pytest

from hqs.core import ReconfigOp, apply_reconfig, new_quorum_system, sorted_ids
from hqs.errors import PreconditionNotVerified, UnknownProcess
from hqs.fixtures import load_fixture
from hqs.gen import checked_sharing_system
from hqs.graph import (
    build_graph,
    condense,
    in_sink,
    is_min_quorum_by_agreement,
    sink_components,
    sink_members,
    to_dot,
    well_behaved_sink,
)
from hqs.props import check_consistency
from hqs.core import minimal_quorums

import oracles


def test_fig2_edges():
    qs, _ = load_fixture("fig2")
    g = build_graph(qs)
    assert {(4, 1), (4, 2), (6, 1), (6, 2)} <= g.edges
    for a, b in combinations([1, 2], 2):
        assert (a, b) in g.edges and (b, a) in g.edges
    for a, b in combinations([1, 3, 5], 2):
        assert (a, b) in g.edges and (b, a) in g.edges


def test_fig1_edges_and_undeclared_vertex():
    qs, _ = load_fixture("fig1")
    g = build_graph(qs)
    assert (1, 4) in g.edges
    assert not any(src == 4 for (src, _) in g.edges)
    assert 4 in g.vertices


def test_self_loop_singleton():
    qs = new_quorum_system([1], {1: [{1}]})
    g = build_graph(qs)
    assert g.edges == {(1, 1)}
    cond = condense(g)
    assert sink_components(cond) == [frozenset({1})]


def test_fig2_condensation_and_sink():
    qs, attack = load_fixture("fig2")
    cond = condense(build_graph(qs))
    comps = {frozenset(c) for c in cond.components}
    assert comps == {frozenset({1, 2, 3, 5}), frozenset({4}), frozenset({6})}
    sinks = sink_components(cond)
    assert sinks == [frozenset({1, 2, 3, 5})]
    assert well_behaved_sink(qs, attack) == frozenset({1, 2, 3})
    assert in_sink(qs, attack, 3)
    assert not in_sink(qs, attack, 4)
    with pytest.raises(UnknownProcess):
        in_sink(qs, attack, 9)


def test_condensation_matches_reachability_oracle():
    rng = random.Random(31)
    for _ in range(40):
        qs, _ = checked_sharing_system(rng, n_max=7)
        g = build_graph(qs)
        cond = condense(g)
        assert sorted(map(sorted_ids, cond.components)) == sorted(
            map(sorted_ids, oracles.oracle_components(g.vertices, g.edges)))
        assert sorted(map(sorted_ids, sink_components(cond))) == sorted(
            map(sorted_ids, oracles.oracle_sinks(g.vertices, g.edges)))


def test_dag_and_complete_graph_edges():
    chain = new_quorum_system([1, 2, 3], {1: [{2}], 2: [{3}], 3: [{3}]})
    cond = condense(build_graph(chain))
    assert all(len(c) == 1 for c in cond.components)
    clique = new_quorum_system([1, 2, 3], {p: [{1, 2, 3}] for p in (1, 2, 3)})
    assert len(condense(build_graph(clique)).components) == 1


def test_two_disconnected_cliques_give_two_sinks():
    qs = new_quorum_system(
        [1, 2, 3, 4],
        {1: [{1, 2}], 2: [{1, 2}], 3: [{3, 4}], 4: [{3, 4}]})
    sinks = sink_components(condense(build_graph(qs)))
    assert len(sinks) == 2


def test_min_quorum_by_agreement():
    qs, attack = load_fixture("fig2")
    assert is_min_quorum_by_agreement(qs, attack, {1, 2})
    assert not is_min_quorum_by_agreement(qs, attack, {1, 2, 4})
    # no well-behaved members: vacuously true, caller must guard
    assert is_min_quorum_by_agreement(qs, attack, {5})


def test_min_quorum_by_agreement_requires_preconditions():
    qs, attack = load_fixture("draft_cycle")  # no sharing
    with pytest.raises(PreconditionNotVerified):
        is_min_quorum_by_agreement(qs, attack, {1, 3})


def test_dot_export_stable_and_annotated():
    qs, attack = load_fixture("fig2")
    dot = to_dot(qs, attack)
    assert dot == to_dot(qs, attack)
    assert dot.startswith("digraph")
    assert '"5" [style="filled,dashed"' in dot  # Byzantine member of the sink
    assert '"4" -> "1";' in dot


def graph_lemma_violations(qs, attack):
    """Check lemmas 1-3, 6 and the containment theorem on one system."""
    wb = attack.well_behaved
    g = build_graph(qs)
    mq = minimal_quorums(qs, attack)
    sinks = sink_components(condense(g))
    bad = []
    if len(sinks) != 1:
        bad.append("unique-sink")
        return bad
    sink = sinks[0]
    members = set()
    for q in mq:
        wb_members = q & wb
        members |= wb_members
        for a in wb_members:
            for b in wb_members:
                if a != b and (a, b) not in g.edges:
                    bad.append("clique")
    for p in qs.active & wb:
        if not any(all((p, m) in g.edges for m in q) for q in mq):
            bad.append("adjacency")
    if not members <= sink:
        bad.append("containment")
    if members:
        comp = {frozenset(c) for c in oracles.oracle_components(members, {
            (a, b) for (a, b) in g.edges if a in members and b in members})}
        if len(comp) != 1:
            bad.append("strong-connectivity")
    return bad


def test_graph_lemmas_on_generated_systems():
    rng = random.Random(37)
    for _ in range(60):
        qs, attack = checked_sharing_system(rng, n_max=7)
        assert graph_lemma_violations(qs, attack) == []


def test_out_sink_leave_preserves_consistency():
    rng = random.Random(41)
    tried = 0
    for _ in range(80):
        qs, attack = checked_sharing_system(rng, n_max=7)
        wb = attack.well_behaved
        sink = sink_members(qs)
        outsiders = sorted_ids((qs.active & wb) - sink)
        for p in outsiders:
            tried += 1
            after = apply_reconfig(qs, ReconfigOp.leave(p))
            assert check_consistency(after, attack, wb - {p}).holds
            for q in qs.quorums_of(p):
                removed = apply_reconfig(qs, ReconfigOp.remove(p, q))
                assert check_consistency(removed, attack, wb).holds
    assert tried > 10
