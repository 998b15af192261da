"""The stage loop: components, adversary steps, path walk, initialization.

One engine runs one scenario deterministically and records everything it
does as a list of trace events; `replay_trace` rebuilds the graphs and the
generic approximation from a trace alone (event sourcing).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .adversaries import (
    CeSet,
    CopierConfig,
    CopierState,
    FunctionalScript,
    OracleGraphMachine,
    AgeIndex,
)
from .graphs import (
    BuiltGraph,
    ConstructionError,
    GenericApprox,
    NodeRegistry,
    add_stage_components,
    diagonalize_pair,
    homogenize_pair,
)
from .strategies import (
    ACTIONS,
    Address,
    LargeAllocator,
    StrategyNode,
    initialize_node,
    left_of,
    parse_outcome,
    requirement_of,
)

EVENT_KINDS = {
    "ComponentAdded", "Diagonalized", "Homogenized", "GTailSet", "GBitSet",
    "ParamDefined", "OutcomeTaken", "ComputationDefined", "ChallengeIssued",
    "ChallengeCleared", "Initialized", "PathComputed",
}


@dataclass
class Scenario:
    stages: int = 1
    assignment: dict[int, tuple[str, int]] = field(default_factory=dict)
    ce: list[tuple[int, int, str]] = field(default_factory=list)
    phi: list[tuple[int, int, int, int]] = field(default_factory=list)
    phi_honest: dict[int, int] = field(default_factory=dict)
    mi: list[tuple[int, int, str, int, int]] = field(default_factory=list)
    copiers: dict[int, int] = field(default_factory=dict)
    checks: list[str] = field(default_factory=list)


class Engine:
    """Runs one scenario; doubles as the context object the strategies see."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.stage = 0
        self.registry = NodeRegistry()
        self.A = BuiltGraph("A", self.registry)
        self.B = BuiltGraph("B", self.registry)
        self.G = GenericApprox()
        self.allocator = LargeAllocator()
        self.tree: dict[Address, StrategyNode] = {}
        # nodes that may hold state, as a rank-sorted list (nodes strictly
        # right of the current path form a contiguous suffix)
        self.active_ranks: list[tuple[int, ...]] = []
        self.by_ranks: dict[tuple[int, ...], StrategyNode] = {}
        self.trace: list[dict] = []
        self.ce_sets: dict[int, CeSet] = {}
        for j, st, bits in scenario.ce:
            self.ce_sets.setdefault(j, CeSet(j)).add(st, bits)
        self.functionals: dict[int, FunctionalScript] = {}
        for e, st, a, b in scenario.phi:
            self.functionals.setdefault(e, FunctionalScript(e)).add_axiom(st, a, b)
        for e, delay in scenario.phi_honest.items():
            self.functionals[e] = FunctionalScript(e, honest=True, delay=delay)
        self.machines: dict[int, OracleGraphMachine] = {}
        self.age_indexes: dict[int, AgeIndex] = {}
        for i, st, bits, x, y in scenario.mi:
            self._machine(i).add_axiom(bits, st, (x, y))
        self.copiers = [
            CopierState(CopierConfig(i, delay), self._machine(i))
            for i, delay in sorted(scenario.copiers.items())
        ]

    def _machine(self, i: int) -> OracleGraphMachine:
        m = self.machines.get(i)
        if m is None:
            m = OracleGraphMachine(i)
            self.machines[i] = m
            self.age_indexes[i] = AgeIndex(m)
        return m

    def emit(self, kind: str, **payload) -> None:
        self.trace.append({"stage": self.stage, "kind": kind, **payload})

    def _has_state(self, node: StrategyNode) -> bool:
        if node.kind == "S":
            st = node.st
            return st.started or st.challenge is not None or any(
                not c.dead for c in st.computations)
        return node.rp.phase != "fresh" or node.rp.m is not None

    def _maybe_homogenize(self, pair: int) -> None:
        if not self.A.has_pair(pair):
            return
        comps = [g.component(pair, p)
                 for g in (self.A, self.B) for p in ("even", "odd")]
        if any(c.diagonalized for c in comps) and not all(
                c.homogenized for c in comps):
            homogenize_pair(self.A, self.B, pair, self.stage)
            self.emit("Homogenized", pair=pair, sides=["A", "B"])

    def run_stage(self) -> Address:
        self.stage += 1
        s = self.stage
        add_stage_components(self.A, self.B, s)
        self.emit("ComponentAdded", pair=s)
        for copier in self.copiers:
            copier.step(self.A, self.G, s, self.allocator)
        path: list = []
        parent = None
        for level in range(s):
            if parent is None:
                node = self.tree.get(())
            else:
                node = parent.children.get(path[-1])
            if node is None:
                addr = tuple(path)
                kind, index = requirement_of(level, self.scenario.assignment)
                node = StrategyNode.create(addr, kind, index, parent)
                if kind == "S":
                    self._machine(index)
                self.tree[addr] = node
            outcome = ACTIONS[node.kind](node, self)
            self.emit("OutcomeTaken", node=node.payload,
                      strategy=f"{node.kind}_{node.index}",
                      outcome=str(outcome))
            if not node.in_active:
                node.in_active = True
                bisect.insort(self.active_ranks, node.ranks)
                self.by_ranks[node.ranks] = node
            path.append(outcome)
            parent = node
        pi: Address = tuple(path)
        pi_ranks = tuple(o.rank for o in path)
        # every active node is at most as deep as the path, so nothing
        # properly extends pi; entries after pi are exactly the right-of set
        cut = bisect.bisect_right(self.active_ranks, pi_ranks)
        victims = self.active_ranks[cut:]
        del self.active_ranks[cut:]
        initialized: list[Address] = []
        for ranks in victims:
            node = self.by_ranks.pop(ranks)
            node.in_active = False
            if not self._has_state(node):
                continue
            if node.kind == "P" and node.rp.n is not None:
                self._maybe_homogenize(node.rp.n)
            initialize_node(node)
            initialized.append(node.address)
            self.emit("Initialized", node=node.payload)
        if initialized:
            init_set = set(initialized)
            for ranks in self.active_ranks:
                node = self.by_ranks[ranks]
                if (node.kind == "S" and node.st.challenge is not None
                        and node.st.challenge[0] in init_set):
                    node.st.challenge = None
                    self.emit("ChallengeCleared", node=node.payload,
                              reason="challenger_initialized")
        self.G.end_stage(s)
        # parent is the deepest path node; its cached payload is the path
        self.emit("PathComputed", path=list(parent.payload))
        return pi

    def run(self, stages: int | None = None) -> list[dict]:
        budget = self.scenario.stages if stages is None else stages
        for _ in range(budget):
            self.run_stage()
        return self.trace


def run_scenario(scenario: Scenario, stages: int | None = None
                 ) -> tuple[Engine, list[dict]]:
    engine = Engine(scenario)
    engine.run(stages)
    return engine, engine.trace


def paths_by_stage(trace: list[dict]) -> list[Address]:
    return [tuple(parse_outcome(t) for t in ev["path"])
            for ev in trace if ev["kind"] == "PathComputed"]


def stable_prefix(trace: list[dict]) -> Address:
    """Finite-horizon liminf estimate: longest address left-of-or-on every
    final-third path and realized as a prefix of one of them."""
    paths = paths_by_stage(trace)
    if not paths:
        raise ConstructionError("stable_prefix of an empty trace")
    final = paths[-max(1, len(paths) // 3):]
    candidates = {p[:k] for p in final for k in range(len(p) + 1)}
    ok = [a for a in candidates
          if all(a == p[:len(a)] or left_of(a, p) for p in final)]
    best_len = max(len(a) for a in ok)
    return min(a for a in ok if len(a) == best_len)


def replay_trace(trace: list[dict]) -> tuple[BuiltGraph, BuiltGraph, GenericApprox]:
    """Rebuild A, B, G by replaying state-bearing events in order."""
    registry = NodeRegistry()
    A = BuiltGraph("A", registry)
    B = BuiltGraph("B", registry)
    G = GenericApprox()
    for ev in trace:
        kind = ev["kind"]
        if kind == "ComponentAdded":
            add_stage_components(A, B, ev["pair"])
        elif kind == "Diagonalized":
            diagonalize_pair(A, B, ev["pair"], ev["stage"])
        elif kind == "Homogenized":
            homogenize_pair(A, B, ev["pair"], ev["stage"])
        elif kind == "GTailSet":
            G.set_tail(ev["tau"], ev["stage"])
        elif kind == "GBitSet":
            G.enumerate_bit(ev["pos"], ev["stage"])
        elif kind == "PathComputed":
            G.end_stage(ev["stage"])
    return A, B, G
