"""Scenario assembly: worlds, probes, adversary scripts and verdicts.

A scenario pins a system fixture, an attack, the outlived set, client
requests, an adversary script and a seeded schedule policy; running it
yields a trace plus a verdict listing every probe violation.  The
trade-off demonstrations (which no protocol run can realize, per the
impossibility arguments) are pure-state scenarios at the bottom.
"""

from __future__ import annotations

import json
from importlib import resources

from .broadcast import BrbNode
from .core import (
    QuorumSystem,
    ReconfigOp,
    apply_reconfig,
    followers,
    minimal_quorums,
    new_quorum_system,
    sorted_ids,
)
from .discovery import DiscoveryNode, oracle_validq, threshold_validq
from .errors import ScenarioError
from .graph import sink_members
from .props import (
    active_availability_witness,
    availability_witness,
    check_consistency,
    consistency_witness,
    inclusion_witness,
)
from .reconfig import AC, PC, ReconfigNode
from .sim import Adversary, SchedulePolicy, World, canon
from .fixtures import resolve_system

SCENARIO_NAMES = (
    "ac_leave_fig1",
    "ac_leave_fig4_q1",
    "pc_leave_fig4_q1",
    "add_attack_concurrent",
    "brb_honest_fig1",
    "discovery_fig2_deceive",
)


# --- probes -----------------------------------------------------------------


def _wb_node_quorums(world) -> dict:
    wb = world.attack.well_behaved
    return {pid: node.quorums for pid, node in world.nodes.items()
            if pid in wb and isinstance(node, ReconfigNode)}


def probe_intersection(outlived):
    outlived = frozenset(outlived)

    def fn(world):
        at = outlived - world.l_set
        w = consistency_witness(_wb_node_quorums(world), at)
        return None if w is None else canon(w)

    return fn


def probe_active_inclusion(outlived):
    outlived = frozenset(outlived)

    def fn(world):
        quorums = _wb_node_quorums(world)
        w = inclusion_witness(quorums, outlived, world.attack.well_behaved,
                              left=frozenset(world.l_set))
        return None if w is None else canon(w)

    return fn


def probe_active_availability(outlived):
    outlived = frozenset(outlived)

    def fn(world):
        w = active_availability_witness(_wb_node_quorums(world), outlived,
                                        frozenset(world.l_set))
        return None if w is None else canon(w)

    return fn


def probe_tentative_inclusion(outlived):
    outlived = frozenset(outlived)

    def fn(world):
        quorums = _wb_node_quorums(world)
        tentative = {pid: node.tentative for pid, node in world.nodes.items()
                     if isinstance(node, ReconfigNode)}
        w = inclusion_witness(quorums, outlived, world.attack.well_behaved,
                              tentative=tentative)
        return None if w is None else canon(w)

    return fn


def probe_add_no_split(world):
    """No (requester, q_c) may both succeed somewhere and fail-complete elsewhere."""
    succeeded = set()
    fail_done = set()
    for node in world.nodes.values():
        if isinstance(node, ReconfigNode):
            succeeded |= {k for k, v in node.succeeded.items() if v}
            fail_done |= node.fail_completed
    both = succeeded & fail_done
    return None if not both else canon(sorted(map(str, both)))


def probe_brb_consistency(world):
    per_instance = {}
    for pid, node in world.nodes.items():
        if not isinstance(node, BrbNode):
            continue
        for instance, value in node.delivered.items():
            per_instance.setdefault(instance, {})[pid] = value
    for instance, votes in per_instance.items():
        if len(set(votes.values())) > 1:
            return canon((instance, sorted_ids(votes)))
    return None


def probe_intersection_full(at_set):
    """Consistency at a fixed set, irrespective of who has departed; the
    policy-preserving protocols promise this at the full well-behaved set."""
    at_set = frozenset(at_set)

    def fn(world):
        w = consistency_witness(_wb_node_quorums(world), at_set)
        return None if w is None else canon(w)

    return fn


PROBES = {
    "intersection": probe_intersection,
    "intersection_full": probe_intersection_full,
    "active_inclusion": probe_active_inclusion,
    "active_availability": probe_active_availability,
    "tentative_inclusion": probe_tentative_inclusion,
}

GLOBAL_PROBES = {
    "add_no_split": probe_add_no_split,
    "brb_consistency": probe_brb_consistency,
}


# --- adversary scripts --------------------------------------------------------


class SinkDeceiver(Adversary):
    """The quorum-graph-example attack: the Byzantine insider feeds process 3
    misleading quorums and tries to convince outsider 4 it is in the sink."""

    def __init__(self, byz_id=5, fake_target=3, dupe_target=4, stolen=frozenset({1, 3, 5})):
        self.byz_id = byz_id
        self.fake_target = fake_target
        self.dupe_target = dupe_target
        self.stolen = frozenset(stolen)
        self._extended = False

    def on_init(self, world):
        world.adversary_send(self.byz_id, self.fake_target,
                             ("Exchange", (frozenset({self.byz_id}),)))
        world.adversary_send(self.byz_id, self.dupe_target,
                             ("Extend", self.stolen))

    def on_deliver(self, world, env):
        if env.payload[0] == "Exchange" and not self._extended:
            # replay the stolen quorum at the outsider once quorums are seen
            self._extended = True
            world.adversary_send(self.byz_id, self.dupe_target,
                                 ("Extend", self.stolen))
            world.adversary_send(self.byz_id, self.dupe_target,
                                 ("Exchange", (self.stolen,)))


class AddEquivocator(Adversary):
    """Byzantine requester splits Success and Fail across the q_c members."""

    def __init__(self, byz_id, q_c, success_first=()):
        self.byz_id = byz_id
        self.q_c = frozenset(q_c)
        self.success_first = tuple(success_first)
        self._sigs = {}
        self._split_done = False

    def on_init(self, world):
        for p in sorted_ids(self.q_c):
            world.adversary_send(self.byz_id, p, ("CheckAdd", self.q_c))

    def on_deliver(self, world, env):
        if env.payload[0] != "Commit" or self._split_done:
            return
        q_c, sig = frozenset(env.payload[1]), env.payload[2]
        if q_c != self.q_c or not world.verify(sig, env.src, ("Commit", q_c)):
            return
        self._sigs[env.src] = sig
        if set(self._sigs) == self.q_c:
            self._split_done = True
            sigs = tuple(self._sigs[p] for p in sorted_ids(self.q_c))
            fail_sig = world.sign(self.byz_id, ("Fail", self.byz_id, self.q_c),
                                  by_adversary=True)
            members = sorted_ids(self.q_c)
            success_to = set(self.success_first) or {members[0]}
            for p in members:
                if p in success_to:
                    world.adversary_send(self.byz_id, p,
                                         ("Success", self.byz_id, self.q_c, sigs))
                else:
                    world.adversary_send(self.byz_id, p,
                                         ("Fail", self.byz_id, self.q_c, fail_sig))


class AddAccomplice(Adversary):
    """Byzantine processes cooperate with whatever add reaches them: they
    acknowledge inclusion, ack every intersection check, and commit with a
    signature, which maximizes the chance a conflicting add slips through."""

    def on_deliver(self, world, env):
        tag = env.payload[0]
        me = env.dst
        if tag == "Inclusion":
            world.adversary_send(me, env.src, ("AckInclusion", env.payload[1]))
        elif tag == "CheckAdd":
            q_c = frozenset(env.payload[1])
            sig = world.sign(me, ("Commit", q_c), by_adversary=True)
            world.adversary_send(me, env.src, ("Commit", q_c, sig))
        elif tag == "AddCheck":
            world.adversary_send(me, env.src,
                                 ("CheckAck", env.payload[1], env.payload[2]))


class CheckSpammer(Adversary):
    """Broadcasts junk Check requests from every Byzantine id."""

    def on_init(self, world):
        wb = sorted_ids(world.attack.well_behaved)
        for b in sorted_ids(world.attack.byzantine):
            if wb:
                x = wb[world.rng.randrange(len(wb))]
                world.adversary_tob(b, ("LeaveCheck", (frozenset({b, x}),)))
                world.adversary_tob(b, ("LeaveCheck", (frozenset({b}),)))


class JoinResponder(Adversary):
    """Answers probes on behalf of Byzantine targets with fixed declarations."""

    def __init__(self, declarations):
        self.declarations = {p: tuple(frozenset(q) for q in qs)
                             for p, qs in declarations.items()}

    def on_deliver(self, world, env):
        if env.payload[0] == "Prob" and env.dst in self.declarations:
            world.adversary_send(env.dst, env.src,
                                 ("Quorums", self.declarations[env.dst]))


class BrbByzantine(Adversary):
    """Equivocating sender and fake votes from Byzantine members."""

    def __init__(self, sender=None, values=("a", "b"), fake_votes=True):
        self.sender = sender
        self.values = values
        self.fake_votes = fake_votes

    def on_init(self, world):
        if self.sender is None or self.sender not in world.attack.byzantine:
            return
        targets = sorted_ids(world.nodes)
        for i, p in enumerate(targets):
            value = self.values[i % len(self.values)]
            world.adversary_send(self.sender, p, ("Send", self.sender, value))

    def on_deliver(self, world, env):
        if not self.fake_votes or env.payload[0] not in ("Echo", "Ready", "Send"):
            return
        instance = env.payload[1]
        for p in sorted_ids(world.nodes):
            if world.rng.random() < 0.3:
                value = self.values[world.rng.randrange(len(self.values))]
                world.adversary_send(env.dst, p, ("Ready", instance, value))


ADVERSARIES = {
    "none": lambda spec: Adversary(),
    "sink_deceiver": lambda spec: SinkDeceiver(**spec.get("args", {})),
    "add_accomplice": lambda spec: AddAccomplice(),
    "check_spammer": lambda spec: CheckSpammer(),
    "add_equivocator": lambda spec: AddEquivocator(**spec["args"]),
    "join_responder": lambda spec: JoinResponder(
        {int(k) if str(k).lstrip("-").isdigit() else k: v
         for k, v in spec["args"]["declarations"].items()}),
    "brb_byzantine": lambda spec: BrbByzantine(**spec.get("args", {})),
}


# --- world builders ------------------------------------------------------------


def make_reconfig_world(qs, attack, policy, *, mode=AC, combined_checks=True,
                        sink_info=None, adversary=None, step_cap=10_000,
                        joiners=()):
    world = World(qs, attack, policy, adversary=adversary, step_cap=step_cap)
    sink = sink_members(qs) if sink_info == "oracle" else None
    for pid in sorted_ids(qs.active & attack.well_behaved):
        node = ReconfigNode(
            pid,
            qs.quorums_of(pid),
            followers=followers(qs, pid),
            in_sink=(pid in sink) if sink is not None else None,
            mode=mode,
            combined_checks=combined_checks,
        )
        world.add_node(node)
    for pid in sorted_ids(joiners):
        world.add_node(ReconfigNode(pid, (), mode=mode,
                                    combined_checks=combined_checks))
    return world


def make_discovery_world(qs, attack, policy, *, adversary=None, validq="oracle",
                         threshold=2, step_cap=10_000):
    if validq == "oracle":
        predicate = oracle_validq(minimal_quorums(qs, attack))
    elif validq == "threshold":
        predicate = threshold_validq(threshold)
    else:
        predicate = None
    world = World(qs, attack, policy, adversary=adversary, step_cap=step_cap)
    for pid in sorted_ids(qs.active & attack.well_behaved):
        world.add_node(DiscoveryNode(pid, qs.quorums_of(pid), validq=predicate))
        world.request(0, pid, ("Discover",))
    return world


def make_brb_world(qs, attack, policy, *, adversary=None, step_cap=10_000):
    world = World(qs, attack, policy, adversary=adversary, step_cap=step_cap)
    for pid in sorted_ids(qs.active & attack.well_behaved):
        world.add_node(BrbNode(pid, qs.quorums_of(pid),
                               followers=followers(qs, pid),
                               active=qs.active))
    return world


def current_system(world, base: QuorumSystem) -> QuorumSystem:
    """Assemble the live quorum system from node states.

    Byzantine declarations keep their initial value, departed nodes drop out
    of the active set, and a well-behaved node left with no quorums at all is
    excluded and reported through the system diagnostics.
    """
    decls = {}
    active = set()
    starved = []
    for pid in sorted_ids(base.active):
        node = world.nodes.get(pid)
        if node is None:
            if base.declares(pid):
                decls[pid] = base.quorums_of(pid)
            active.add(pid)
        elif isinstance(node, ReconfigNode) and node.frozen:
            continue
        elif node.quorums:
            decls[pid] = tuple(node.quorums)
            active.add(pid)
        else:
            starved.append(pid)
    for pid, node in world.nodes.items():
        if pid not in base.active and isinstance(node, ReconfigNode):
            if not node.frozen and node.quorums:
                decls[pid] = tuple(node.quorums)
                active.add(pid)
    qs = new_quorum_system(active, decls, universe=base.universe | set(active),
                           byzantine=world.attack.byzantine)
    if starved:
        notes = qs.diagnostics + tuple(
            f"process {p!r} has no quorums left" for p in starved)
        qs = QuorumSystem(qs.universe, qs.active, qs.quorum_map(), notes)
    return qs


# --- scenario files --------------------------------------------------------------


def load_scenario(ref):
    if isinstance(ref, dict):
        return ref
    if ref in SCENARIO_NAMES:
        path = resources.files("hqs").joinpath("scenarios", f"{ref}.json")
        return json.loads(path.read_text(encoding="utf-8"))
    with open(ref, "r", encoding="utf-8") as fh:
        return json.load(fh)


def run_scenario(spec, seed_override=None):
    """Execute one scenario file; returns (world, trace, verdict)."""
    spec = load_scenario(spec)
    if "seed" not in spec.get("policy", {}) and seed_override is None:
        raise ScenarioError("scenario must pin a seed for reproducibility")
    qs, attack = resolve_system(spec["system"])
    pol = spec.get("policy", {})
    policy = SchedulePolicy(
        seed=seed_override if seed_override is not None else pol["seed"],
        mode=pol.get("mode", "RandomFair"),
        fairness_bound=pol.get("fairness_bound", 6),
        tob_order=tuple(pol.get("tob_order", ())),
    )
    adv_spec = spec.get("adversary", "none")
    if isinstance(adv_spec, str):
        adv_spec = {"name": adv_spec}
    try:
        adversary = ADVERSARIES[adv_spec.get("name", "none")](adv_spec)
    except KeyError:
        raise ScenarioError(f"unknown adversary {adv_spec!r}") from None
    protocol = spec.get("protocol", "ac")
    step_cap = spec.get("step_cap", 10_000)
    outlived = frozenset(spec.get("outlived", sorted_ids(attack.well_behaved)))

    if protocol == "discovery":
        world = make_discovery_world(qs, attack, policy, adversary=adversary,
                                     validq=spec.get("validq", "oracle"),
                                     step_cap=step_cap)
    elif protocol == "brb":
        world = make_brb_world(qs, attack, policy, adversary=adversary,
                               step_cap=step_cap)
    else:
        joiners = [r["node"] for r in spec.get("requests", ())
                   if r["op"] == "Join"]
        world = make_reconfig_world(
            qs, attack, policy,
            mode=PC if protocol == "pc" else AC,
            combined_checks=spec.get("combined_checks", True),
            sink_info=spec.get("sink_info"),
            adversary=adversary, step_cap=step_cap, joiners=joiners)

    for name in spec.get("probes", ()):
        if name in PROBES:
            world.add_probe(name, PROBES[name](outlived))
        elif name in GLOBAL_PROBES:
            world.add_probe(name, GLOBAL_PROBES[name])
        else:
            raise ScenarioError(f"unknown probe {name!r}")

    for req in spec.get("requests", ()):
        node = req["node"]
        op = req["op"]
        at = req.get("at", 1)
        if op == "Leave":
            world.request(at, node, ("Leave",))
        elif op == "Remove":
            world.request(at, node, ("Remove", frozenset(req["quorum"])))
        elif op == "Add":
            world.request(at, node, ("Add", frozenset(req["quorum"])))
        elif op == "Join":
            world.request(at, node, ("Join", frozenset(req["seed_set"]),
                                     req.get("timeout", 200)))
        elif op == "Broadcast":
            world.request(at, node, ("Broadcast", req["value"]))
        else:
            raise ScenarioError(f"unknown request op {op!r}")

    trace = world.run()
    verdict = {
        "outcome": trace.outcome,
        "responses": [[s, str(p), r] for (s, p, r) in trace.responses],
        "violations": canon(trace.violations),
        "pass": not trace.violations,
    }
    if protocol not in ("discovery", "brb"):
        final = current_system(world, qs)
        verdict["final_system"] = final.to_json(attack)
        verdict["notes"] = list(final.diagnostics)
    return world, trace, verdict


# --- trade-off demonstrations -----------------------------------------------------


def declared_quorums_by_process(qs: QuorumSystem) -> dict:
    return {p: set(qs.quorums_of(p)) for p in sorted_ids(qs.active) if qs.declares(p)}


def policy_violations(initial: QuorumSystem, completed_grants: dict, final_quorums: dict) -> dict:
    """Processes holding a quorum they never declared nor gained via a
    completed Add/Join; reconfiguration must not fabricate or shrink policies."""
    declared = declared_quorums_by_process(initial)
    out = {}
    for p, quorums in final_quorums.items():
        allowed = declared.get(p, set()) | completed_grants.get(p, set())
        extra = {q for q in quorums if q not in allowed}
        if extra:
            out[p] = extra
    return out


def dilemma_leave_q1(mode: str, seed: int = 0):
    """Fig. 4 first system: leaving process 2 forces availability against policy."""
    qs, attack = resolve_system("fig4_q1_leave")
    policy = SchedulePolicy(seed=seed)
    world = make_reconfig_world(qs, attack, policy, mode=mode)
    world.request(1, 2, ("Leave",))
    trace = world.run()
    final = {pid: set(node.quorums) for pid, node in world.nodes.items()}
    avail = availability_witness({3: tuple(final[3])}, frozenset({3}),
                                 attack.well_behaved - world.l_set) is None
    violations = policy_violations(qs, {}, final)
    return {
        "responses": [r for (_, p, r) in trace.responses if p == 2],
        "availability_for_3": avail,
        "policy_violations": violations,
    }


def dilemma_add_q2():
    """Fig. 4 second system: a terminating add forces either inconsistency or a
    policy change at process 4.  This is a pure-state demonstration: a faithful
    protocol run refuses the add, so the terminating branch is applied with the
    reconfiguration oracle and then repaired the only way consistency allows."""
    qs, attack = resolve_system("fig4_q2")
    wb = attack.well_behaved
    added = frozenset({1, 2})
    after_add = apply_reconfig(qs, ReconfigOp.add(2, added))
    broken = check_consistency(after_add, attack, wb)
    repaired_decls = {}
    for p in sorted_ids(after_add.active):
        if not after_add.declares(p):
            continue
        quorums = []
        for q in after_add.quorums_of(p):
            if p in wb and not (q & added & wb):
                q = q | {2}  # the requester joins the conflicting quorum
            quorums.append(q)
        repaired_decls[p] = quorums
    repaired = new_quorum_system(after_add.active, repaired_decls,
                                 universe=after_add.universe,
                                 byzantine=attack.byzantine)
    violations = policy_violations(qs, {2: {added}},
                                   declared_quorums_by_process(repaired))
    return {
        "completed": added in repaired.quorums_of(2),
        "consistency_before_repair": broken.holds,
        "consistency_after_repair": check_consistency(repaired, attack, wb).holds,
        "policy_violations": violations,
    }
