"""Deterministic discrete-event world for Byzantine message-passing protocols.

One world hosts a set of protocol nodes (well-behaved processes), an
adversary that owns every Byzantine id, authenticated point-to-point links,
a total-order-broadcast oracle and an unforgeable-signature registry.
Runs are reproducible: the same seed and scenario yield a byte-identical
trace.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
from dataclasses import dataclass
from typing import Callable, Optional

from .core import Attack, QuorumSystem, sorted_ids
from .errors import ForgedSender, ForgedSigner

RANDOM_FAIR = "RandomFair"
ADVERSARIAL = "AdversarialReorder"
SCRIPTED = "ScriptedInterleaving"

QUIESCENT = "quiescent"
STEP_CAP = "step_cap"


@dataclass(frozen=True)
class SchedulePolicy:
    seed: int
    mode: str = RANDOM_FAIR
    fairness_bound: int = 6
    tob_order: tuple = ()  # scripted mode: preferred src order for sequencing


@dataclass(frozen=True)
class Signature:
    signer: object
    digest: str


@dataclass
class Envelope:
    src: object
    dst: object
    channel: str  # "APL" or "TOB"
    payload: tuple
    seq: int


def canon(obj):
    """Canonical JSON-compatible form; sets come out sorted."""
    if isinstance(obj, (frozenset, set)):
        return sorted((canon(x) for x in obj), key=lambda v: (str(type(v)), str(v)))
    if isinstance(obj, (tuple, list)):
        return [canon(x) for x in obj]
    if isinstance(obj, Signature):
        return {"signer": obj.signer, "digest": obj.digest}
    if isinstance(obj, dict):
        return {str(k): canon(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    return obj


def fingerprint(obj) -> str:
    blob = json.dumps(canon(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


class Node:
    """Base class for protocol state machines driven by the kernel."""

    def __init__(self, pid):
        self.pid = pid
        self.dirty = False

    def touch(self):
        self.dirty = True

    def on_start(self, api):
        pass

    def on_request(self, api, request):
        pass

    def on_message(self, api, src, payload):
        pass

    def on_tob(self, api, src, payload):
        pass

    def on_timer(self, api, tag):
        pass

    def state_summary(self) -> dict:
        return {}


class Adversary:
    """Hooks through which scripted Byzantine behavior drives the run.

    The adversary owns exactly the Byzantine ids: it can send and sign on
    their behalf, sees every message addressed to them, and (depending on
    the schedule mode) can bias delivery timing within the fairness bound.
    """

    def on_init(self, world):
        pass

    def on_deliver(self, world, env):
        pass

    def on_tob(self, world, index, env):
        pass

    def delay(self, world, env) -> Optional[int]:
        """Delay for a message touching a Byzantine endpoint; None drops it."""
        return None if env is None else world.rng.randint(1, world.policy.fairness_bound)

    def reorder(self, world, env) -> int:
        """Delay for well-behaved traffic in AdversarialReorder mode (clamped)."""
        return world.rng.randint(1, world.policy.fairness_bound)

    def pick_tob(self, world, pending) -> int:
        return 0


class Trace:
    def __init__(self):
        self.events = []
        self.outcome = QUIESCENT
        self.violations = []
        self.responses = []

    def to_jsonl(self) -> str:
        lines = [json.dumps(canon(e), sort_keys=True, separators=(",", ":"))
                 for e in self.events]
        return "\n".join(lines) + "\n"


class World:
    def __init__(self, system: QuorumSystem, attack: Attack, policy: SchedulePolicy,
                 adversary: Optional[Adversary] = None, step_cap: int = 10_000):
        self.system = system
        self.attack = attack
        self.policy = policy
        self.adversary = adversary or Adversary()
        self.step_cap = step_cap
        self.rng = random.Random(policy.seed)
        self.step = 0
        self.nodes = {}
        self.trace = Trace()
        self.probes = []
        self.l_set = set()          # ids holding a LeaveComplete/RemoveComplete
        self._queue = []
        self._seq = 0
        self._link_seq = {}
        self._signed = set()
        self._pending_tob = []
        self._tob_order = []
        self._tob_next = {}         # pid -> next global index expected
        self._tob_buffer = {}       # pid -> {index: env}
        self._tob_hints = list(policy.tob_order)
        self._events_processed = 0

    # -- wiring ------------------------------------------------------------

    def add_node(self, node: Node):
        if node.pid in self.attack.byzantine:
            raise ForgedSender(f"{node.pid!r} is Byzantine; the adversary owns it")
        self.nodes[node.pid] = node
        self._tob_next[node.pid] = 0
        self._tob_buffer[node.pid] = {}

    def add_probe(self, name: str, fn: Callable):
        self.probes.append((name, fn))

    def request(self, at_step: int, pid, request):
        self._push(at_step, "request", (pid, request))

    # -- node/adversary facing API ------------------------------------------

    def send(self, src, dst, payload):
        if src in self.attack.well_behaved and src not in self.nodes:
            raise ForgedSender(f"no node owns well-behaved id {src!r}")
        env = self._make_env(src, dst, "APL", payload)
        self._route(env)

    def adversary_send(self, src, dst, payload):
        if src not in self.attack.byzantine:
            raise ForgedSender(f"adversary cannot send as well-behaved {src!r}")
        env = self._make_env(src, dst, "APL", payload)
        self._route(env)

    def tob_broadcast(self, src, payload):
        env = self._make_env(src, None, "TOB", payload)
        self._pending_tob.append(env)
        self._push(self.step + 1, "tob_seq", None)

    def adversary_tob(self, src, payload):
        if src not in self.attack.byzantine:
            raise ForgedSender(f"adversary cannot broadcast as well-behaved {src!r}")
        self.tob_broadcast(src, payload)

    def sign(self, signer, payload, *, by_adversary=False) -> Signature:
        if by_adversary:
            if signer not in self.attack.byzantine:
                raise ForgedSigner(f"adversary cannot sign as well-behaved {signer!r}")
        elif signer in self.attack.byzantine:
            raise ForgedSigner(f"node cannot sign as Byzantine {signer!r}")
        digest = fingerprint(payload)
        self._signed.add((signer, digest))
        return Signature(signer, digest)

    def verify(self, sig: Signature, signer, payload) -> bool:
        return (isinstance(sig, Signature)
                and sig.signer == signer
                and sig.digest == fingerprint(payload)
                and (signer, sig.digest) in self._signed)

    def set_timer(self, pid, tag, delay):
        self._push(self.step + max(1, delay), "timer", (pid, tag))

    def respond(self, pid, response):
        self.trace.responses.append((self.step, pid, response))
        self._record({"step": self.step, "kind": "response", "node": pid,
                      "response": response})
        if response in ("LeaveComplete", "RemoveComplete"):
            self.l_set.add(pid)

    # -- internals -----------------------------------------------------------

    def _make_env(self, src, dst, channel, payload) -> Envelope:
        key = (src, dst, channel)
        seq = self._link_seq.get(key, 0)
        self._link_seq[key] = seq + 1
        return Envelope(src, dst, channel, payload, seq)

    def _route(self, env: Envelope):
        byz = self.attack.byzantine
        if env.src in byz or env.dst in byz:
            delay = self.adversary.delay(self, env)
            if delay is None:
                self._record({"step": self.step, "kind": "drop", "src": env.src,
                              "dst": env.dst, "msg": env.payload})
                return
            delay = max(1, int(delay))
        elif self.policy.mode == ADVERSARIAL:
            delay = min(max(1, int(self.adversary.reorder(self, env))),
                        self.policy.fairness_bound)
        else:
            delay = self.rng.randint(1, self.policy.fairness_bound)
        self._push(self.step + delay, "apl", env)

    def _push(self, due, kind, data):
        self._seq += 1
        heapq.heappush(self._queue, (due, self._seq, kind, data))

    def _record(self, event):
        self.trace.events.append(event)

    def _api_for(self, node: Node) -> "NodeApi":
        return NodeApi(self, node)

    def _sequence_tob(self):
        if not self._pending_tob:
            return
        if self.policy.mode == SCRIPTED and self._tob_hints:
            want = self._tob_hints[0]
            idx = next((i for i, e in enumerate(self._pending_tob) if e.src == want), 0)
            if self._pending_tob[idx].src == want:
                self._tob_hints.pop(0)
        elif self.policy.mode == ADVERSARIAL:
            idx = self.adversary.pick_tob(self, tuple(self._pending_tob))
            idx = idx if 0 <= idx < len(self._pending_tob) else 0
        else:
            idx = self.rng.randrange(len(self._pending_tob))
        env = self._pending_tob.pop(idx)
        index = len(self._tob_order)
        self._tob_order.append(env)
        self._record({"step": self.step, "kind": "tob_order", "index": index,
                      "src": env.src, "msg": env.payload})
        self.adversary.on_tob(self, index, env)
        for pid in sorted_ids(self.nodes):
            self._push(self.step + self.rng.randint(1, self.policy.fairness_bound),
                       "tob_dlv", (pid, index))
        if self._pending_tob:
            self._push(self.step + 1, "tob_seq", None)

    def _deliver_tob(self, pid, index):
        buf = self._tob_buffer[pid]
        buf[index] = self._tob_order[index]
        node = self.nodes.get(pid)
        while node is not None and self._tob_next[pid] in buf:
            i = self._tob_next[pid]
            env = buf.pop(i)
            self._tob_next[pid] = i + 1
            if getattr(node, "frozen", False):
                continue
            self._record({"step": self.step, "kind": "tob", "dst": pid,
                          "index": i, "src": env.src, "msg": env.payload})
            node.on_tob(self._api_for(node), env.src, env.payload)

    def _run_probes(self):
        for name, fn in self.probes:
            witness = fn(self)
            if witness is not None:
                self.trace.violations.append(
                    {"step": self.step, "probe": name, "witness": witness})
                self._record({"step": self.step, "kind": "probe_violation",
                              "probe": name, "witness": witness})

    def state_snapshot(self) -> dict:
        return {str(pid): self.nodes[pid].state_summary()
                for pid in sorted_ids(self.nodes)}

    def run(self) -> Trace:
        self.adversary.on_init(self)
        for pid in sorted_ids(self.nodes):
            node = self.nodes[pid]
            node.on_start(self._api_for(node))
        self._flush_dirty()
        while self._queue:
            if self._events_processed >= self.step_cap:
                self.trace.outcome = STEP_CAP
                break
            due, _, kind, data = heapq.heappop(self._queue)
            self.step = due
            self._events_processed += 1
            if kind == "apl":
                env = data
                if env.dst in self.attack.byzantine:
                    self._record({"step": self.step, "kind": "apl", "src": env.src,
                                  "dst": env.dst, "msg": env.payload, "byz": True})
                    self.adversary.on_deliver(self, env)
                else:
                    node = self.nodes.get(env.dst)
                    if node is None or getattr(node, "frozen", False):
                        self._record({"step": self.step, "kind": "apl", "src": env.src,
                                      "dst": env.dst, "msg": env.payload, "frozen": True})
                    else:
                        self._record({"step": self.step, "kind": "apl", "src": env.src,
                                      "dst": env.dst, "msg": env.payload})
                        node.on_message(self._api_for(node), env.src, env.payload)
            elif kind == "tob_seq":
                self._sequence_tob()
            elif kind == "tob_dlv":
                self._deliver_tob(*data)
            elif kind == "timer":
                pid, tag = data
                node = self.nodes.get(pid)
                if node is not None and not getattr(node, "frozen", False):
                    self._record({"step": self.step, "kind": "timer", "node": pid,
                                  "tag": tag})
                    node.on_timer(self._api_for(node), tag)
            elif kind == "request":
                pid, request = data
                node = self.nodes.get(pid)
                if node is not None and not getattr(node, "frozen", False):
                    self._record({"step": self.step, "kind": "request", "node": pid,
                                  "request": request})
                    node.on_request(self._api_for(node), request)
            self._flush_dirty()
        else:
            self.trace.outcome = QUIESCENT
        self.trace.events.append({"step": self.step, "kind": "end",
                                  "outcome": self.trace.outcome,
                                  "snap": fingerprint(self.state_snapshot())})
        return self.trace

    def _flush_dirty(self):
        ran = False
        for pid in sorted_ids(self.nodes):
            node = self.nodes[pid]
            if node.dirty:
                node.dirty = False
                if not ran:
                    self._run_probes()
                    ran = True
        if ran:
            self._record({"step": self.step, "kind": "state",
                          "snap": fingerprint(self.state_snapshot())})


class NodeApi:
    """Per-node capability handle: authenticated sends, tob, signing, timers."""

    __slots__ = ("world", "node")

    def __init__(self, world: World, node: Node):
        self.world = world
        self.node = node

    @property
    def me(self):
        return self.node.pid

    def send(self, dst, payload):
        self.world.send(self.node.pid, dst, payload)

    def tob(self, payload):
        self.world.tob_broadcast(self.node.pid, payload)

    def sign(self, payload) -> Signature:
        return self.world.sign(self.node.pid, payload)

    def verify(self, sig, signer, payload) -> bool:
        return self.world.verify(sig, signer, payload)

    def respond(self, response):
        self.world.respond(self.node.pid, response)

    def timer(self, tag, delay):
        self.world.set_timer(self.node.pid, tag, delay)
