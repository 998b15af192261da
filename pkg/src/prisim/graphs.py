"""Loop-bundle graph pairs and the finite-support generic approximation.

The two constructed graphs hold, per pair index n >= 1, an even and an odd
component: a root node carrying directed cycles ("loops") whose length
multiset is one of three legal per-side shapes (base, diagonalized,
homogenized).  The generic approximation is a finite-support bit vector
with full per-stage history and a change log.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConstructionError(Exception):
    """A graph mutation violated its precondition."""


class NodeRegistry:
    """Allocates node ids. An id is handed out exactly once."""

    def __init__(self) -> None:
        self._next = 0

    def fresh(self, count: int = 1) -> list[int]:
        ids = list(range(self._next, self._next + count))
        self._next += count
        return ids

    @property
    def allocated(self) -> int:
        return self._next


@dataclass
class Loop:
    """A directed cycle through ``root``: root -> interior[0] -> ... -> root."""

    length: int
    root: int
    interior: tuple[int, ...]
    created_stage: int
    _edges: list[tuple[int, int]] | None = field(
        default=None, repr=False, compare=False)

    def nodes(self) -> tuple[int, ...]:
        return (self.root,) + self.interior

    def edges(self) -> list[tuple[int, int]]:
        if self._edges is None:
            seq = self.nodes()
            k = len(seq)
            self._edges = [(seq[i], seq[(i + 1) % k]) for i in range(k)]
        return self._edges


@dataclass
class Component:
    pair_index: int
    parity: str  # "even" | "odd"
    side: str  # "A" | "B"
    root: int
    loops: list[Loop] = field(default_factory=list)
    diagonalized: bool = False
    homogenized: bool = False
    created_stage: int = 0

    def shape(self) -> tuple[int, ...]:
        return tuple(sorted(l.length for l in self.loops))

    def nodes(self) -> list[int]:
        out = [self.root]
        for l in self.loops:
            out.extend(l.interior)
        return out

    def edges(self) -> list[tuple[int, int]]:
        out: list[tuple[int, int]] = []
        for l in self.loops:
            out.extend(l.edges())
        return out

    def root_label(self) -> str:
        k = 2 * self.pair_index + (0 if self.parity == "even" else 1)
        return f"{self.side.lower()}{k}"


class BuiltGraph:
    """One of the two constructed graphs, as indexed loop-bundle components."""

    def __init__(self, side: str, registry: NodeRegistry) -> None:
        self.side = side
        self.registry = registry
        self.components: dict[int, dict[str, Component]] = {}

    def has_pair(self, pair: int) -> bool:
        return pair in self.components

    def component(self, pair: int, parity: str) -> Component:
        try:
            return self.components[pair][parity]
        except KeyError:
            raise ConstructionError(
                f"graph {self.side} has no {parity} component for pair {pair}"
            ) from None

    def all_components(self) -> list[Component]:
        out = []
        for pair in sorted(self.components):
            out.append(self.components[pair]["even"])
            out.append(self.components[pair]["odd"])
        return out

    def _add_component(self, pair: int, parity: str, stage: int) -> Component:
        (root,) = self.registry.fresh(1)
        comp = Component(pair, parity, self.side, root, created_stage=stage)
        self.components.setdefault(pair, {})[parity] = comp
        return comp

    def add_loop(self, comp: Component, length: int, stage: int) -> Loop:
        interior = tuple(self.registry.fresh(length - 1))
        loop = Loop(length, comp.root, interior, stage)
        comp.loops.append(loop)
        return loop

    def edges(self) -> list[tuple[int, int]]:
        out: list[tuple[int, int]] = []
        for comp in self.all_components():
            out.extend(comp.edges())
        return out


def add_stage_components(A: BuiltGraph, B: BuiltGraph, s: int) -> None:
    """Create the pair-s components on both sides: shapes {2,5s+1} / {2,5s+2}."""
    if s < 1:
        raise ConstructionError(f"pair index must be >= 1, got {s}")
    if A.has_pair(s) or B.has_pair(s):
        raise ConstructionError(f"pair {s} already present")
    for g in (A, B):
        even = g._add_component(s, "even", s)
        g.add_loop(even, 2, s)
        g.add_loop(even, 5 * s + 1, s)
        odd = g._add_component(s, "odd", s)
        g.add_loop(odd, 2, s)
        g.add_loop(odd, 5 * s + 2, s)


def diagonalize_pair(A: BuiltGraph, B: BuiltGraph, n: int, stage: int = 0) -> None:
    """Add the crosswise diagonalizing loops to pair n on both sides."""
    comps = {
        (g.side, p): g.component(n, p) for g in (A, B) for p in ("even", "odd")
    }
    for comp in comps.values():
        if comp.diagonalized or comp.homogenized:
            raise ConstructionError(f"pair {n} already diagonalized or homogenized")
    additions = {
        ("A", "even"): (5 * n + 2, 5 * n + 3),
        ("A", "odd"): (5 * n + 1, 5 * n + 4),
        ("B", "even"): (5 * n + 2, 5 * n + 4),
        ("B", "odd"): (5 * n + 1, 5 * n + 3),
    }
    for (side, parity), lengths in additions.items():
        g = A if side == "A" else B
        comp = comps[(side, parity)]
        for length in lengths:
            g.add_loop(comp, length, stage)
        comp.diagonalized = True


def homogenize_pair(A: BuiltGraph, B: BuiltGraph, n: int, stage: int = 0) -> str:
    """Bring all four pair-n components to {2, 5n+1, ..., 5n+4}.

    Returns "homogenized", "already" (idempotent repeat), or "noop" for a
    base-shape pair (left unchanged; callers emit a warning event).
    """
    comps = [g.component(n, p) for g in (A, B) for p in ("even", "odd")]
    if all(c.homogenized for c in comps):
        return "already"
    if not any(c.diagonalized for c in comps):
        return "noop"
    target = {2, 5 * n + 1, 5 * n + 2, 5 * n + 3, 5 * n + 4}
    for g in (A, B):
        for parity in ("even", "odd"):
            comp = g.component(n, parity)
            have = {l.length for l in comp.loops}
            for length in sorted(target - have):
                g.add_loop(comp, length, stage)
            comp.homogenized = True
    return "homogenized"


def component_shape(g: BuiltGraph, pair: int, parity: str) -> tuple[int, ...]:
    return g.component(pair, parity).shape()


def pairwise_isomorphic(A: BuiltGraph, B: BuiltGraph) -> bool:
    """True iff per pair the A shape multiset equals the B shape multiset.

    Swapping even/odd within a pair is permitted; loop-bundle components are
    isomorphic exactly when their loop-length multisets agree.
    """
    if set(A.components) != set(B.components):
        return False
    for pair in A.components:
        a_shapes = sorted(
            (A.component(pair, p).shape() for p in ("even", "odd"))
        )
        b_shapes = sorted(
            (B.component(pair, p).shape() for p in ("even", "odd"))
        )
        if a_shapes != b_shapes:
            return False
    return True


def legal_shapes(side: str, n: int) -> set[tuple[int, ...]]:
    """The three legal per-side shape pairs for pair n, keyed (even, odd)."""
    base_even = (2, 5 * n + 1)
    base_odd = (2, 5 * n + 2)
    homog = tuple(sorted({2, 5 * n + 1, 5 * n + 2, 5 * n + 3, 5 * n + 4}))
    if side == "A":
        diag_even = tuple(sorted((2, 5 * n + 1, 5 * n + 2, 5 * n + 3)))
        diag_odd = tuple(sorted((2, 5 * n + 1, 5 * n + 2, 5 * n + 4)))
    else:
        diag_even = tuple(sorted((2, 5 * n + 1, 5 * n + 2, 5 * n + 4)))
        diag_odd = tuple(sorted((2, 5 * n + 1, 5 * n + 2, 5 * n + 3)))
    return {base_even, base_odd, diag_even, diag_odd, homog}


class GenericApprox:
    """Finite-support bit vector with history and change log.

    Positions beyond the stored vector read 0.  ``version`` increments on
    every actual bit change and backs validity caches elsewhere.
    """

    def __init__(self) -> None:
        self.bits: list[int] = []
        self.history: dict[int, str] = {}
        self.change_log: list[tuple[int, int, int, int]] = []  # stage,pos,old,new
        self.version = 0

    def get(self, pos: int) -> int:
        return self.bits[pos] if pos < len(self.bits) else 0

    def prefix(self, n: int) -> str:
        head = "".join(map(str, self.bits[:n]))
        return head + "0" * (n - len(head))

    def canonical(self) -> str:
        return "".join(map(str, self.bits)).rstrip("0")

    def support_max(self) -> int:
        """Highest position currently holding a 1, or -1."""
        for pos in range(len(self.bits) - 1, -1, -1):
            if self.bits[pos]:
                return pos
        return -1

    def set_tail(self, tau: str, stage: int) -> list[int]:
        """Replace the approximation by tau followed by zeros."""
        new = [int(c) for c in tau]
        changed = []
        for pos in range(max(len(new), len(self.bits))):
            old = self.get(pos)
            cur = new[pos] if pos < len(new) else 0
            if old != cur:
                self.change_log.append((stage, pos, old, cur))
                changed.append(pos)
        self.bits = new
        if changed:
            self.version += 1
        return changed

    def enumerate_bit(self, u: int, stage: int) -> bool:
        """Set bit u; returns True (and logs) only if it was 0."""
        if self.get(u):
            return False
        if u >= len(self.bits):
            self.bits.extend([0] * (u + 1 - len(self.bits)))
        self.bits[u] = 1
        self.change_log.append((stage, u, 0, 1))
        self.version += 1
        return True

    def matches(self, snapshot: str) -> bool:
        """True iff the current bits agree with the snapshot on [0, len)."""
        return self.prefix(len(snapshot)) == snapshot

    def end_stage(self, s: int) -> None:
        self.history[s] = self.canonical()


def snapshot_matches(G: GenericApprox, snapshot: str) -> bool:
    return G.matches(snapshot)


def replay_change_log(log: list[tuple[int, int, int, int]], upto_stage: int) -> str:
    """Rebuild the canonical bit string at the end of ``upto_stage`` from a log."""
    bits: dict[int, int] = {}
    for stage, pos, _old, new in log:
        if stage > upto_stage:
            break
        bits[pos] = new
    if not bits:
        return ""
    hi = max(p for p, v in bits.items() if v) if any(bits.values()) else -1
    return "".join(str(bits.get(i, 0)) for i in range(hi + 1))


def to_dot(g: BuiltGraph) -> str:
    """DOT rendering: roots labeled a<k>/b<k>, interiors by raw id."""
    lines = [f"digraph {g.side} {{"]
    for comp in g.all_components():
        lines.append(f'  n{comp.root} [label="{comp.root_label()}"];')
        for loop in comp.loops:
            for node in loop.interior:
                lines.append(f'  n{node} [label="{node}"];')
    for comp in g.all_components():
        for loop in comp.loops:
            for x, y in loop.edges():
                lines.append(f"  n{x} -> n{y};")
    lines.append("}")
    return "\n".join(lines) + "\n"
