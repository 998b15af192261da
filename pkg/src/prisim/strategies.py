"""Outcome alphabet, tree addresses, and the R/P/S strategy actions.

Three strategy kinds share one tree: R nodes force the generic approximation
into or away from a c.e. string set, P nodes diagonalize a component pair
against a scripted functional and challenge upstream S nodes, and S nodes
build stagewise embeddings of the first graph into an oracle machine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .adversaries import ce_find_extension, find_oldest_lexleast_pair, phi_check_pair
from .graphs import ConstructionError, diagonalize_pair


class Outcome:
    """Inf < ... < Wait(4) < Wait(3) < Succ < Wait(2) < Wait(1) < Wait(0).

    Instances are interned, so equality is identity and hashing is cached;
    tree addresses are long tuples of these.
    """

    __slots__ = ("tag", "n", "rank", "_hash")
    _interned: dict[tuple[str, int], "Outcome"] = {}

    def __new__(cls, tag: str, n: int = 0) -> "Outcome":
        self = cls._interned.get((tag, n))
        if self is None:
            self = super().__new__(cls)
            self.tag = tag
            self.n = n
            # order-embedding into the integers
            if tag == "Inf":
                self.rank = -(10 ** 9)
            elif tag == "Succ":
                self.rank = 0
            else:
                self.rank = -n if n >= 3 else 3 - n
            self._hash = hash((tag, n))
            cls._interned[(tag, n)] = self
        return self

    def __eq__(self, other) -> bool:
        return self is other

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Outcome") -> bool:
        return self.rank < other.rank

    def __le__(self, other: "Outcome") -> bool:
        return self.rank <= other.rank

    def __gt__(self, other: "Outcome") -> bool:
        return self.rank > other.rank

    def __ge__(self, other: "Outcome") -> bool:
        return self.rank >= other.rank

    def __str__(self) -> str:
        return f"Wait({self.n})" if self.tag == "Wait" else self.tag

    def __repr__(self) -> str:
        return str(self)


INF = Outcome("Inf")
SUCC = Outcome("Succ")


def wait(n: int) -> Outcome:
    return Outcome("Wait", n)


def parse_outcome(text: str) -> Outcome:
    if text == "Inf":
        return INF
    if text == "Succ":
        return SUCC
    if text.startswith("Wait(") and text.endswith(")"):
        return wait(int(text[5:-1]))
    raise ConstructionError(f"bad outcome literal {text!r}")


Address = tuple[Outcome, ...]


def address_payload(addr: Address) -> list[str]:
    return [str(o) for o in addr]


def left_of(a: Address, b: Address) -> bool:
    """a <_L b: at the first differing coordinate, a's outcome is smaller.

    Prefix-comparable addresses are not left of each other.
    """
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def requirement_of(level: int, override: dict[int, tuple[str, int]] | None = None
                   ) -> tuple[str, int]:
    """Kind and index for a tree level; round-robin S, P, R by default."""
    if override and level in override:
        return override[level]
    return ("S", "P", "R")[level % 3], level // 3


class LargeAllocator:
    """Hands out "large" parameters/uses: strictly above everything seen."""

    def __init__(self) -> None:
        self.high = 0

    def fresh(self, *bounds: int) -> int:
        self.high = 1 + max(self.high, *bounds) if bounds else self.high + 1
        return self.high


@dataclass
class RPState:
    m: int | None = None
    n: int | None = None
    phase: str = "fresh"  # fresh|waiting|armed|fired|succeeded
    found_tau: str | None = None


@dataclass
class Computation:
    pair_index: int
    node_map: dict[int, int]
    snapshot: str
    defined_at: int
    image_edge_use_max: int
    dead: bool = False
    _vcache: tuple[int, bool] | None = field(
        default=None, repr=False, compare=False)


@dataclass
class SState:
    n: int = 1  # next pair to map; 1 = none mapped yet
    started: bool = False
    computations: list[Computation] = field(default_factory=list)
    by_pair: dict[int, list[Computation]] = field(default_factory=dict)
    challenge: tuple[Address, int] | None = None  # (challenger, bound)
    # (G version, n, image nodes of valid computations below n)
    _img_cache: list | None = field(default=None, repr=False, compare=False)


@dataclass(eq=False)
class StrategyNode:
    address: Address
    kind: str  # "R" | "P" | "S"
    index: int
    parent: "StrategyNode | None" = None
    rp: RPState | None = None
    st: SState | None = None
    payload: list[str] = field(default_factory=list)  # cached address strings
    ranks: tuple[int, ...] = ()  # integer image of the address, for fast order
    children: "dict[Outcome, StrategyNode]" = field(default_factory=dict)
    in_active: bool = False
    # ancestry is immutable, so these prefix lists are computed once
    _rp_up: "list[StrategyNode] | None" = field(
        default=None, repr=False, compare=False)
    _sinf_up: "list[StrategyNode] | None" = field(
        default=None, repr=False, compare=False)

    @staticmethod
    def create(address: Address, kind: str, index: int,
               parent: "StrategyNode | None" = None) -> "StrategyNode":
        node = StrategyNode(address, kind, index, parent)
        if parent is None or not address:
            node.payload = address_payload(address)
            node.ranks = tuple(o.rank for o in address)
        else:
            node.payload = parent.payload + [str(address[-1])]
            node.ranks = parent.ranks + (address[-1].rank,)
        if parent is not None:
            parent.children[address[-1]] = node
        if kind == "S":
            node.st = SState()
        else:
            node.rp = RPState()
        return node


def _comp_valid(comp: Computation, G) -> bool:
    if comp.dead:
        return False
    if comp._vcache is not None and comp._vcache[0] == G.version:
        return comp._vcache[1]
    ok = G.matches(comp.snapshot)
    comp._vcache = (G.version, ok)
    return ok


def valid_computation(st: SState, G, pair: int) -> Computation | None:
    for comp in reversed(st.by_pair.get(pair, ())):
        if _comp_valid(comp, G):
            return comp
    return None


def least_uncovered(st: SState, G) -> int:
    m = 1
    while valid_computation(st, G, m) is not None:
        m += 1
    return m


def initialize_node(node: StrategyNode) -> None:
    if node.kind == "S":
        for comp in node.st.computations:
            comp.dead = True
        node.st.by_pair.clear()
        node.st.n = 1
        node.st.started = False
        node.st.challenge = None
        node.st._img_cache = None
    else:
        node.rp.m = None
        node.rp.n = None
        node.rp.phase = "fresh"
        node.rp.found_tau = None


# ---------------------------------------------------------------------------


def _rp_prefixes(node: StrategyNode, tree: dict[Address, StrategyNode]
                 ) -> list[StrategyNode]:
    if node._rp_up is None:
        out = []
        cur = node.parent
        while cur is not None:
            if cur.kind in ("R", "P"):
                out.append(cur)
            cur = cur.parent
        node._rp_up = out
    return node._rp_up


def _s_inf_prefixes(node: StrategyNode, tree: dict[Address, StrategyNode]
                    ) -> list[StrategyNode]:
    """S strategies gamma with gamma^<Inf> an initial segment of node."""
    if node._sinf_up is None:
        out = []
        cur = node
        while cur.parent is not None:
            if cur.address[-1] is INF and cur.parent.kind == "S":
                out.append(cur.parent)
            cur = cur.parent
        node._sinf_up = out
    return node._sinf_up


def _rp_prelude(node: StrategyNode, ctx) -> Outcome | None:
    """Shared R/P Cases 1-2: define m, wait for convergences, then arm.

    Returns the outcome to emit, or None once the node is past arming.
    """
    state = node.rp
    if state.phase == "fresh":
        uppers = _rp_prefixes(node, ctx.tree)
        if any(b.rp.n is None for b in uppers):
            return wait(0)
        state.m = max((b.rp.n for b in uppers), default=0)
        state.phase = "waiting"
        ctx.emit("ParamDefined", node=node.payload,
                 param="m", value=state.m)
        return wait(0)
    if state.phase == "waiting":
        if state.m >= 1:
            for gamma in _s_inf_prefixes(node, ctx.tree):
                if valid_computation(gamma.st, ctx.G, state.m) is None:
                    return wait(0)
        state.n = ctx.allocator.fresh(ctx.stage, ctx.G.support_max())
        state.phase = "armed"
        ctx.emit("ParamDefined", node=node.payload,
                 param="n", value=state.n)
        return wait(1)
    return None


def act_R(node: StrategyNode, ctx) -> Outcome:
    if node.kind != "R":
        raise ConstructionError(f"act_R on {node.kind} node")
    pre = _rp_prelude(node, ctx)
    if pre is not None:
        return pre
    state = node.rp
    if state.phase == "armed":
        w = ctx.ce_sets.get(node.index)
        tau = None
        if w is not None:
            tau = ce_find_extension(w, ctx.stage, ctx.G.prefix(state.n))
        if tau is None:
            return wait(1)
        ctx.G.set_tail(tau, ctx.stage)
        state.found_tau = tau
        state.phase = "fired"
        ctx.emit("GTailSet", node=node.payload, tau=tau)
        return wait(2)
    state.phase = "succeeded"
    return SUCC


def act_P(node: StrategyNode, ctx) -> Outcome:
    if node.kind != "P":
        raise ConstructionError(f"act_P on {node.kind} node")
    pre = _rp_prelude(node, ctx)
    if pre is not None:
        return pre
    state = node.rp
    if state.phase == "armed":
        n = state.n
        phi = ctx.functionals.get(node.index)
        if phi is None or not ctx.A.has_pair(n) or not ctx.B.has_pair(n):
            return wait(1)
        if not phi_check_pair(phi, ctx.stage, ctx.A, ctx.B, n):
            return wait(1)
        diagonalize_pair(ctx.A, ctx.B, n, ctx.stage)
        ctx.emit("Diagonalized", pair=n, sides=["A", "B"],
                 node=node.payload)
        for gamma in _s_inf_prefixes(node, ctx.tree):
            comp = valid_computation(gamma.st, ctx.G, n)
            if comp is not None:
                u = len(comp.snapshot) - 1
                if ctx.G.enumerate_bit(u, ctx.stage):
                    ctx.emit("GBitSet", pos=u,
                             node=node.payload)
                gamma.st.challenge = (node.address, n)
                ctx.emit("ChallengeIssued",
                         challenger=node.payload,
                         challengee=gamma.payload, bound=n)
        state.phase = "fired"
        return wait(2)
    state.phase = "succeeded"
    return SUCC


def _extend(node: StrategyNode, ctx) -> bool:
    """The S extension module: try to map pair n; True iff a computation
    was appended (and n incremented)."""
    st = node.st
    n = st.n
    if not ctx.A.has_pair(n):
        return False
    machine = ctx.machines.get(node.index)
    if machine is None:
        return False
    if not machine.by_edge:
        return False
    idx = ctx.age_indexes[node.index]
    cache = st._img_cache
    if cache is not None and cache[0] == ctx.G.version and cache[1] == n:
        image_nodes = cache[2]
    else:
        image_nodes = set()
        for m in range(1, n):
            comp = valid_computation(st, ctx.G, m)
            if comp is not None:
                image_nodes.update(comp.node_map.values())
        st._img_cache = [ctx.G.version, n, image_nodes]
    even = ctx.A.component(n, "even")
    odd = ctx.A.component(n, "odd")
    found = find_oldest_lexleast_pair(
        machine, idx, ctx.G, ctx.stage, (even.shape(), odd.shape()),
        frozenset(image_nodes))
    if found is None:
        return False
    node_map: dict[int, int] = {}
    edges: list[tuple[int, int]] = []
    for comp_a, copy in zip((even, odd), found):
        node_map[comp_a.root] = copy.root
        cycles = {len(c): c for c in copy.cycles}
        for loop in comp_a.loops:
            cyc = cycles[loop.length]
            for x, y in zip(loop.interior, cyc[1:]):
                node_map[x] = y
        edges.extend(copy.edges())
    use = ctx.allocator.fresh(ctx.stage, ctx.G.support_max())
    snapshot = ctx.G.prefix(use + 1)
    l_m = machine.max_valid_use_len(ctx.G, ctx.stage, edges)
    comp = Computation(n, node_map, snapshot, ctx.stage, l_m)
    st.computations.append(comp)
    st.by_pair.setdefault(n, []).append(comp)
    ctx.emit("ComputationDefined", node=node.payload,
             pair=n, use=use, snapshot=snapshot, image_edge_use_max=l_m,
             node_map={str(k): v for k, v in sorted(node_map.items())})
    image_nodes.update(node_map.values())
    st._img_cache = [ctx.G.version, n + 1, image_nodes]
    st.n = n + 1
    return True


def act_S(node: StrategyNode, ctx) -> Outcome:
    if node.kind != "S":
        raise ConstructionError(f"act_S on {node.kind} node")
    st = node.st
    if not st.started:
        st.started = True
        st.n = 1
        return wait(0)
    if st.challenge is not None or least_uncovered(st, ctx.G) < st.n:
        st.n = least_uncovered(st, ctx.G)
    extended = _extend(node, ctx)
    if st.challenge is not None:
        _challenger, bound = st.challenge
        if st.n > bound:
            st.challenge = None
            ctx.emit("ChallengeCleared", node=node.payload,
                     reason="outgrown")
            return INF
        return wait(st.n)
    return INF if extended else wait(st.n)


ACTIONS = {"R": act_R, "P": act_P, "S": act_S}
