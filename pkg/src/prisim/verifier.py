"""Trace-level invariant checks.

Every check is a pure function of a completed trace (the horizon check also
takes the scenario, and optionally the engine that produced the trace, to
reach adversary state the trace does not carry).  Lemma-style properties
quantified over all stages are checked over the recorded horizon only; each
report states that horizon.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .engine import Engine, Scenario, stable_prefix
from .graphs import (
    BuiltGraph,
    ConstructionError,
    NodeRegistry,
    add_stage_components,
    diagonalize_pair,
    homogenize_pair,
    legal_shapes,
    pairwise_isomorphic,
)

NodeKey = tuple[str, ...]  # a tree address as outcome strings


@dataclass
class CheckReport:
    name: str
    passed: bool
    horizon: int
    first_violation: tuple[int, str] | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.passed and self.first_violation is None:
            raise ConstructionError(f"failing report {self.name} lacks a violation")

    def render(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        line = f"[{verdict}] {self.name} (horizon: {self.horizon} stages)"
        if self.first_violation is not None:
            line += f"\n  first violation at stage {self.first_violation[0]}: " \
                    f"{self.first_violation[1]}"
        if self.stats:
            line += f"\n  stats: {json.dumps(self.stats, sort_keys=True)}"
        return line

    def to_record(self) -> str:
        return json.dumps(
            {
                "check": self.name,
                "passed": self.passed,
                "horizon": self.horizon,
                "first_violation": self.first_violation,
                "stats": self.stats,
            },
            sort_keys=True,
        )


def _horizon(trace: list[dict]) -> int:
    return max((ev["stage"] for ev in trace), default=0)


def _kind_map(trace: list[dict]) -> dict[NodeKey, tuple[str, int]]:
    """Node address -> (kind, index), from the outcomes it reported."""
    out: dict[NodeKey, tuple[str, int]] = {}
    for ev in trace:
        if ev["kind"] == "OutcomeTaken":
            kind, _, index = ev["strategy"].partition("_")
            out[tuple(ev["node"])] = (kind, int(index))
    return out


def _is_prefix(short: NodeKey, long: NodeKey) -> bool:
    return len(short) <= len(long) and long[: len(short)] == short


# ---------------------------------------------------------------------------


def check_shapes(trace: list[dict]) -> CheckReport:
    """Every component has a legal per-side shape at every stage end, and
    pairs transition only base -> diagonalized -> homogenized."""
    horizon = _horizon(trace)

    def fail(stage: int, msg: str) -> CheckReport:
        return CheckReport("shapes", False, horizon, (stage, msg))

    registry = NodeRegistry()
    A = BuiltGraph("A", registry)
    B = BuiltGraph("B", registry)
    status: dict[int, str] = {}
    for ev in trace:
        kind = ev["kind"]
        s = ev["stage"]
        try:
            if kind == "ComponentAdded":
                pair = ev["pair"]
                if pair in status:
                    return fail(s, f"pair {pair} added twice")
                add_stage_components(A, B, pair)
                status[pair] = "base"
            elif kind == "Diagonalized":
                pair = ev["pair"]
                if status.get(pair) != "base":
                    return fail(
                        s, f"diagonalization of {status.get(pair)} pair {pair}")
                diagonalize_pair(A, B, pair, s)
                status[pair] = "diagonalized"
            elif kind == "Homogenized":
                pair = ev["pair"]
                if status.get(pair) != "diagonalized":
                    return fail(
                        s, f"homogenization of {status.get(pair)} pair {pair}")
                homogenize_pair(A, B, pair, s)
                status[pair] = "homogenized"
            elif kind == "PathComputed":
                for g in (A, B):
                    for pair in g.components:
                        legal = legal_shapes(g.side, pair)
                        for parity in ("even", "odd"):
                            shape = g.component(pair, parity).shape()
                            if shape not in legal:
                                return fail(
                                    s,
                                    f"illegal {g.side} {parity} shape {shape} "
                                    f"for pair {pair}",
                                )
        except ConstructionError as exc:
            return fail(s, str(exc))
    return CheckReport("shapes", True, horizon,
                       stats={"pairs": len(status)})


def check_ab_isomorphic(trace: list[dict]) -> CheckReport:
    """The two graphs are pairwise isomorphic at every stage end."""
    horizon = _horizon(trace)
    registry = NodeRegistry()
    A = BuiltGraph("A", registry)
    B = BuiltGraph("B", registry)
    for ev in trace:
        kind = ev["kind"]
        s = ev["stage"]
        try:
            if kind == "ComponentAdded":
                add_stage_components(A, B, ev["pair"])
            elif kind == "Diagonalized":
                diagonalize_pair(A, B, ev["pair"], s)
            elif kind == "Homogenized":
                homogenize_pair(A, B, ev["pair"], s)
            elif kind == "PathComputed":
                if not pairwise_isomorphic(A, B):
                    return CheckReport(
                        "ab_isomorphic", False, horizon,
                        (s, "graphs not pairwise isomorphic at stage end"))
        except ConstructionError as exc:
            return CheckReport("ab_isomorphic", False, horizon, (s, str(exc)))
    return CheckReport("ab_isomorphic", True, horizon)


def check_unique_challenger(trace: list[dict]) -> CheckReport:
    """No S node holds two live challenges at once."""
    horizon = _horizon(trace)
    live: dict[NodeKey, NodeKey] = {}  # challengee -> challenger
    count = 0
    for ev in trace:
        kind = ev["kind"]
        if kind == "ChallengeIssued":
            gamma = tuple(ev["challengee"])
            if gamma in live:
                return CheckReport(
                    "unique_challenger", False, horizon,
                    (ev["stage"],
                     f"node {list(gamma)} challenged by {ev['challenger']} "
                     f"while already challenged by {list(live[gamma])}"))
            live[gamma] = tuple(ev["challenger"])
            count += 1
        elif kind == "ChallengeCleared":
            live.pop(tuple(ev["node"]), None)
        elif kind == "Initialized":
            # initialization wipes the node's own challenge
            live.pop(tuple(ev["node"]), None)
    return CheckReport("unique_challenger", True, horizon,
                       stats={"challenges": count})


def check_use_discipline(trace: list[dict]) -> CheckReport:
    """Snapshot lengths exceed image-edge uses; enumerated bits were 0 at all
    prior stage ends; computation uses are pairwise distinct."""
    horizon = _horizon(trace)
    ever_one_at_end: set[int] = set()  # positions that were 1 at a stage end
    current_ones: set[int] = set()
    seen_uses: dict[int, int] = {}  # use -> defining stage
    computations = 0
    for ev in trace:
        kind = ev["kind"]
        s = ev["stage"]
        if kind == "ComputationDefined":
            computations += 1
            if len(ev["snapshot"]) <= ev["image_edge_use_max"]:
                return CheckReport(
                    "use_discipline", False, horizon,
                    (s, f"snapshot length {len(ev['snapshot'])} not above "
                        f"image edge use {ev['image_edge_use_max']}"))
            use = ev["use"]
            if use in seen_uses:
                return CheckReport(
                    "use_discipline", False, horizon,
                    (s, f"use {use} reused (first defined at stage "
                        f"{seen_uses[use]})"))
            seen_uses[use] = s
        elif kind == "GBitSet":
            pos = ev["pos"]
            if pos in ever_one_at_end:
                return CheckReport(
                    "use_discipline", False, horizon,
                    (s, f"enumerated position {pos} was already 1 at an "
                        f"earlier stage end"))
            current_ones.add(pos)
        elif kind == "GTailSet":
            current_ones = {
                i for i, c in enumerate(ev["tau"]) if c == "1"}
        elif kind == "PathComputed":
            ever_one_at_end.update(current_ones)
    return CheckReport("use_discipline", True, horizon,
                       stats={"computations": computations})


def check_param_monotonicity(trace: list[dict]) -> CheckReport:
    """An S node never maps a pair below a live m parameter of an R/P node
    sitting above its Inf outcome; regressions against G changes are counted
    as a statistic."""
    horizon = _horizon(trace)
    kinds = _kind_map(trace)
    m_params: dict[NodeKey, int] = {}  # beta -> m
    # enforcement starts when beta arms (defines n): arming certifies the S
    # node above already covered pair m, so dropping below it afterwards is
    # the genuine violation (the initial ramp-up is not)
    armed_m: dict[NodeKey, int] = {}
    last_pair: dict[NodeKey, int] = {}  # S node -> last mapped pair
    g_changes = 0
    regressions = 0
    for ev in trace:
        kind = ev["kind"]
        s = ev["stage"]
        if kind == "ParamDefined":
            beta = tuple(ev["node"])
            if ev["param"] == "m":
                m_params[beta] = ev["value"]
            elif ev["param"] == "n" and beta in m_params:
                armed_m[beta] = m_params[beta]
        elif kind == "Initialized":
            node = tuple(ev["node"])
            m_params.pop(node, None)
            armed_m.pop(node, None)
            last_pair.pop(node, None)
        elif kind in ("GBitSet", "GTailSet"):
            g_changes += 1
        elif kind == "ComputationDefined":
            alpha = tuple(ev["node"])
            pair = ev["pair"]
            guard = alpha + ("Inf",)
            for beta, m in armed_m.items():
                if m >= 1 and pair < m and _is_prefix(guard, beta):
                    if kinds.get(beta, ("", 0))[0] in ("R", "P"):
                        return CheckReport(
                            "param_monotonicity", False, horizon,
                            (s, f"S node {list(alpha)} mapped pair {pair} "
                                f"below armed m={m} of {list(beta)}"))
            if last_pair.get(alpha, 0) >= pair:
                regressions += 1
            last_pair[alpha] = pair
    return CheckReport("param_monotonicity", True, horizon,
                       stats={"g_changes": g_changes,
                              "pair_regressions": regressions})


def check_waiting_lemma(trace: list[dict]) -> CheckReport:
    """When an R node fires, the protected computations (on pairs n_beta for
    R/P nodes beta strictly above it) of every S node below an Inf outcome on
    its address stay snapshot-valid."""
    horizon = _horizon(trace)
    kinds = _kind_map(trace)
    n_params: dict[NodeKey, int] = {}
    # S node -> pair -> list of snapshots of its live computations
    comps: dict[NodeKey, dict[int, list[str]]] = {}
    bits: dict[int, int] = {}
    fires = 0

    def bits_match(snapshot: str) -> bool:
        return all(bits.get(i, 0) == int(c) for i, c in enumerate(snapshot))

    for ev in trace:
        kind = ev["kind"]
        s = ev["stage"]
        if kind == "ParamDefined" and ev["param"] == "n":
            n_params[tuple(ev["node"])] = ev["value"]
        elif kind == "Initialized":
            node = tuple(ev["node"])
            n_params.pop(node, None)
            comps.pop(node, None)
        elif kind == "ComputationDefined":
            node = tuple(ev["node"])
            comps.setdefault(node, {}).setdefault(
                ev["pair"], []).append(ev["snapshot"])
        elif kind == "GBitSet":
            bits[ev["pos"]] = 1
        elif kind == "GTailSet":
            fires += 1
            rho = tuple(ev["node"])
            protected: set[int] = set()
            for beta, n in n_params.items():
                if beta != rho and _is_prefix(beta, rho) \
                        and kinds.get(beta, ("", 0))[0] in ("R", "P"):
                    protected.add(n)
            watch: list[tuple[NodeKey, int, str]] = []
            for gamma, by_pair in comps.items():
                if not _is_prefix(gamma + ("Inf",), rho):
                    continue
                for pair in protected:
                    for snapshot in by_pair.get(pair, ()):
                        if bits_match(snapshot):
                            watch.append((gamma, pair, snapshot))
            new_bits = {i: int(c) for i, c in enumerate(ev["tau"])}
            bits = {i: v for i, v in new_bits.items() if v}
            for gamma, pair, snapshot in watch:
                if not bits_match(snapshot):
                    return CheckReport(
                        "waiting_lemma", False, horizon,
                        (s, f"firing at {ev['node']} invalidated the pair-"
                            f"{pair} computation of {list(gamma)}"))
    return CheckReport("waiting_lemma", True, horizon,
                       stats={"fires": fires})


def check_requirements_at_horizon(
    trace: list[dict],
    scenario: Scenario,
    engine: Engine | None = None,
) -> CheckReport:
    """Requirement satisfaction along the stable prefix, phase-guarded:
    succeeded/parked R nodes meet/avoid their string set, succeeded P nodes
    keep a standing diagonalization, and S nodes backed by a copier hold
    genuine embeddings covering all pairs below their frontier."""
    horizon = _horizon(trace)
    if engine is None:
        # deterministic rerun to recover adversary/machine state
        engine = Engine(scenario)
        engine.run()
    if not any(ev["kind"] == "PathComputed" for ev in trace):
        return CheckReport("requirements_at_horizon", True, horizon,
                           stats={"checked_nodes": 0})
    prefix = stable_prefix(trace)
    G = engine.G
    checked = 0
    for depth in range(len(prefix)):
        node = engine.tree.get(prefix[:depth])
        if node is None:
            continue
        if node.kind == "R":
            state = node.rp
            w = engine.ce_sets.get(node.index)
            members = w.members_at(horizon) if w is not None else set()
            if state.phase in ("fired", "succeeded"):
                checked += 1
                if not any(G.prefix(len(t)) == t for t in members):
                    return CheckReport(
                        "requirements_at_horizon", False, horizon,
                        (horizon, f"R_{node.index} fired but no prefix of "
                                  f"final G is enumerated"))
            elif state.phase == "armed":
                checked += 1
                sigma = G.prefix(state.n)
                hit = next((t for t in members if t.startswith(sigma)), None)
                if hit is not None:
                    return CheckReport(
                        "requirements_at_horizon", False, horizon,
                        (horizon, f"R_{node.index} parked at Wait(1) yet "
                                  f"{hit!r} extends its G prefix"))
        elif node.kind == "P":
            state = node.rp
            if state.phase != "succeeded":
                continue
            checked += 1
            n = state.n
            phi = engine.functionals.get(node.index)
            mapping = phi.mapping_for_pair(horizon, engine.A, engine.B, n) \
                if phi is not None else {}
            ca = engine.A.component(n, "even")
            cb = engine.B.component(n, "even")
            if mapping.get(ca.root) != cb.root:
                continue  # the functional retreated; nothing to refute
            if ca.shape() == cb.shape():
                return CheckReport(
                    "requirements_at_horizon", False, horizon,
                    (horizon, f"P_{node.index} diagonalization of pair {n} "
                              f"did not stand (shapes equal)"))
        elif node.kind == "S":
            if node.index not in scenario.copiers:
                continue
            checked += 1
            machine = engine.machines[node.index]
            present = machine.edges_at(G, horizon)
            st = node.st
            covered: set[int] = set()
            for comp in st.computations:
                if comp.dead or not G.matches(comp.snapshot):
                    continue
                covered.add(comp.pair_index)
                images = list(comp.node_map.values())
                if len(set(images)) != len(images):
                    return CheckReport(
                        "requirements_at_horizon", False, horizon,
                        (horizon, f"S_{node.index} pair {comp.pair_index} "
                                  f"map is not injective"))
                for parity in ("even", "odd"):
                    for x, y in engine.A.component(
                            comp.pair_index, parity).edges():
                        if x not in comp.node_map or y not in comp.node_map:
                            # loops added after the computation was defined
                            # (diagonalization) are outside its domain
                            continue
                        if (comp.node_map[x], comp.node_map[y]) not in present:
                            return CheckReport(
                                "requirements_at_horizon", False, horizon,
                                (horizon,
                                 f"S_{node.index} pair {comp.pair_index} "
                                 f"image edge absent from machine"))
            missing = [m for m in range(1, st.n) if m not in covered]
            if missing:
                return CheckReport(
                    "requirements_at_horizon", False, horizon,
                    (horizon, f"S_{node.index} pairs {missing[:5]} below "
                              f"n={st.n} are uncovered"))
    return CheckReport("requirements_at_horizon", True, horizon,
                       stats={"checked_nodes": checked,
                              "prefix_length": len(prefix)})


CHECKS = {
    "shapes": check_shapes,
    "ab_isomorphic": check_ab_isomorphic,
    "unique_challenger": check_unique_challenger,
    "use_discipline": check_use_discipline,
    "param_monotonicity": check_param_monotonicity,
    "waiting_lemma": check_waiting_lemma,
    "requirements_at_horizon": check_requirements_at_horizon,
}


def run_checks(
    names: list[str],
    trace: list[dict],
    scenario: Scenario,
    engine: Engine | None = None,
) -> list[CheckReport]:
    if any(n == "all" for n in names):
        names = list(CHECKS)
    reports = []
    for name in names:
        if name not in CHECKS:
            raise ConstructionError(f"unknown check {name!r}")
        if name == "requirements_at_horizon":
            reports.append(check_requirements_at_horizon(
                trace, scenario, engine))
        else:
            reports.append(CHECKS[name](trace))
    return reports
