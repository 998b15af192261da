"""Coding directed graphs into symmetric irreflexive graphs.

Every source vertex becomes a flag of two triangles sharing one node; every
directed edge becomes a length-3 path between the endpoint flags whose middle
node carries a chordless 4-cycle.  The 4-cycle sits next to the head, so
direction survives the passage to an undirected graph.  Decoding is pure
pattern recognition and therefore works on any node-renamed image; anything
the patterns do not account for is rejected as an invalid encoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class CodingError(Exception):
    """Input outside the coding's domain (self-loop, bad image, non-iso)."""


@dataclass
class Digraph:
    vertices: set[int] = field(default_factory=set)
    edges: set[tuple[int, int]] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.vertices = set(self.vertices)
        self.edges = set(self.edges)
        for u, v in self.edges:
            if u == v:
                raise CodingError(f"self-loop at {u}")
            if u not in self.vertices or v not in self.vertices:
                raise CodingError(f"edge ({u}, {v}) leaves the vertex set")


@dataclass
class SymGraph:
    vertices: set[int] = field(default_factory=set)
    edges: set[frozenset[int]] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.vertices = set(self.vertices)
        self.edges = {frozenset(e) for e in self.edges}
        for e in self.edges:
            if len(e) != 2:
                raise CodingError(f"bad undirected edge {sorted(e)}")
            if not e <= self.vertices:
                raise CodingError(f"edge {sorted(e)} leaves the vertex set")

    def add_edge(self, x: int, y: int) -> None:
        if x == y:
            raise CodingError(f"self-loop at {x}")
        self.vertices.update((x, y))
        self.edges.add(frozenset((x, y)))

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for e in self.edges:
            x, y = sorted(e)
            adj[x].add(y)
            adj[y].add(x)
        return adj


@dataclass
class GadgetRegistry:
    """Which image nodes realize which source vertex/edge.

    Each block is an ordered node tuple: vertex v -> (n_v, t1, t2, t3, t4)
    with triangles n_v-t1-t2 and n_v-t3-t4; edge (u, v) -> (p, c, q1, q2, q3)
    with path n_u-p-c-n_v and 4-cycle c-q1-q2-q3-c.
    """

    vertex_blocks: dict[int, tuple[int, ...]] = field(default_factory=dict)
    edge_blocks: dict[tuple[int, int], tuple[int, ...]] = field(
        default_factory=dict)

    def node_of(self, v: int) -> int:
        return self.vertex_blocks[v][0]


class StreamingEncoder:
    """Append-only encoder: each new source item adds one disjoint block.

    Feeding the same digraph in any enumeration order yields isomorphic
    images; feeding an enlarged digraph extends the earlier output without
    touching the nodes and edges already emitted.
    """

    def __init__(self) -> None:
        self.graph = SymGraph()
        self.registry = GadgetRegistry()
        self._next = 0

    def _fresh(self, count: int) -> list[int]:
        ids = list(range(self._next, self._next + count))
        self._next += count
        return ids

    def add_vertex(self, v: int) -> None:
        if v in self.registry.vertex_blocks:
            return
        nv, t1, t2, t3, t4 = self._fresh(5)
        self.registry.vertex_blocks[v] = (nv, t1, t2, t3, t4)
        g = self.graph
        for x, y in ((nv, t1), (t1, t2), (t2, nv), (nv, t3), (t3, t4), (t4, nv)):
            g.add_edge(x, y)

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise CodingError(f"self-loop at {u} cannot be encoded")
        if (u, v) in self.registry.edge_blocks:
            return
        self.add_vertex(u)
        self.add_vertex(v)
        nu = self.registry.node_of(u)
        nv = self.registry.node_of(v)
        p, c, q1, q2, q3 = self._fresh(5)
        self.registry.edge_blocks[(u, v)] = (p, c, q1, q2, q3)
        g = self.graph
        for x, y in ((nu, p), (p, c), (c, nv),
                     (c, q1), (q1, q2), (q2, q3), (q3, c)):
            g.add_edge(x, y)


def encode(D: Digraph) -> tuple[SymGraph, GadgetRegistry]:
    """Deterministic numbering: vertex blocks in vertex order, then edge
    blocks in lexicographic edge order."""
    enc = StreamingEncoder()
    for v in sorted(D.vertices):
        enc.add_vertex(v)
    for u, v in sorted(D.edges):
        enc.add_edge(u, v)
    return enc.graph, enc.registry


def triangles(S: SymGraph) -> set[frozenset[int]]:
    adj = S.adjacency()
    out: set[frozenset[int]] = set()
    for e in S.edges:
        x, y = sorted(e)
        for z in adj[x] & adj[y]:
            out.add(frozenset((x, y, z)))
    return out


def decode(S: SymGraph) -> tuple[Digraph, GadgetRegistry]:
    """Recognize the gadget patterns in any node-renamed encode image.

    Vertices are the nodes lying in exactly two triangles that share only
    that node; a directed edge x -> y is witnessed by a path x-p-c-y whose
    middle node c carries a chordless 4-cycle and no triangle.  Nodes or
    edges left over after all blocks are accounted for mean the input is
    not an encoding.
    """
    adj = S.adjacency()
    tris = triangles(S)
    tri_at: dict[int, list[frozenset[int]]] = {v: [] for v in S.vertices}
    for t in tris:
        for v in t:
            tri_at[v].append(t)
    registry = GadgetRegistry()
    covered: set[int] = set()
    dnodes: list[int] = []
    for v in sorted(S.vertices):
        owned = tri_at[v]
        if len(owned) != 2:
            continue
        t1, t2 = owned
        if t1 & t2 != {v}:
            raise CodingError(f"node {v} joins overlapping triangles")
        dnodes.append(v)
        block = [v]
        for t in owned:
            for w in sorted(t - {v}):
                if len(tri_at[w]) != 1 or len(adj[w]) != 2:
                    raise CodingError(f"triangle node {w} is malformed")
                block.append(w)
        registry.vertex_blocks[v] = tuple(block)
        covered.update(block)
    dset = set(dnodes)
    for t in tris:
        if len(t & dset) != 1:
            raise CodingError(f"triangle {sorted(t)} has no unique flag node")
    edges: set[tuple[int, int]] = set()
    for c in sorted(S.vertices):
        if tri_at[c] or len(adj[c]) != 4:
            continue
        heads = sorted(adj[c] & dset)
        if len(heads) != 1:
            raise CodingError(f"4-cycle center {c} touches {len(heads)} flags")
        y = heads[0]
        rest = sorted(adj[c] - {y})
        qs = [w for w in rest if len(adj[w]) == 2 and not (adj[w] & dset)]
        ps = [w for w in rest if len(adj[w]) == 2 and adj[w] & dset]
        if len(qs) != 2 or len(ps) != 1:
            raise CodingError(f"node {c} has no valid edge-gadget neighborhood")
        q1, q3 = qs
        (p,) = ps
        mids = sorted((adj[q1] - {c}) & (adj[q3] - {c}))
        if len(mids) != 1 or mids[0] in adj[c] \
                or frozenset((q1, q3)) in S.edges:
            raise CodingError(f"4-cycle at {c} is missing or chorded")
        q2 = mids[0]
        (x,) = sorted(adj[p] - {c})
        if x not in dset:
            raise CodingError(f"path tail {x} at center {c} is not a flag")
        key = (x, y)
        if key in edges:
            raise CodingError(f"duplicate edge gadget for {key}")
        edges.add(key)
        registry.edge_blocks[key] = (p, c, q1, q2, q3)
        covered.update((p, c, q1, q2, q3))
    if covered != S.vertices:
        stray = sorted(S.vertices - covered)
        raise CodingError(f"not a valid encoding: stray nodes {stray}")
    expected = 6 * len(dnodes) + 7 * len(edges)
    if len(S.edges) != expected:
        raise CodingError(
            f"not a valid encoding: {len(S.edges)} edges, expected {expected}")
    return Digraph(dset, edges), registry


def digraph_isomorphism_check(D0: Digraph, D1: Digraph,
                              h: dict[int, int]) -> tuple[int, int] | None:
    """None if h is an isomorphism D0 -> D1, else an offending pair."""
    if set(h) != D0.vertices or set(h.values()) != D1.vertices \
            or len(set(h.values())) != len(h):
        return (-1, -1)
    for u, v in D0.edges:
        if (h[u], h[v]) not in D1.edges:
            return (u, v)
    for u, v in D1.edges:
        inv = {b: a for a, b in h.items()}
        if (inv[u], inv[v]) not in D0.edges:
            return (inv[u], inv[v])
    return None


def canonical_iso_roundtrip(D: Digraph) -> dict[int, int]:
    """The map flag-node -> source vertex, verified to carry
    decode(encode(D)) isomorphically onto D."""
    S, reg = encode(D)
    back, _ = decode(S)
    iso = {reg.node_of(v): v for v in D.vertices}
    if set(iso) != back.vertices:
        raise CodingError("roundtrip lost or invented vertices")
    bad = digraph_isomorphism_check(back, D, iso)
    if bad is not None:
        raise CodingError(f"roundtrip map fails on pair {bad}")
    return iso


def transport_iso(D0: Digraph, D1: Digraph,
                  h: dict[int, int]) -> dict[int, int]:
    """Lift a digraph isomorphism h: D0 -> D1 to an isomorphism of the
    encoded graphs, blockwise in registry order."""
    bad = digraph_isomorphism_check(D0, D1, h)
    if bad is not None:
        raise CodingError(f"not an isomorphism: fails on pair {bad}")
    S0, r0 = encode(D0)
    S1, r1 = encode(D1)
    lift: dict[int, int] = {}
    for v, block in r0.vertex_blocks.items():
        lift.update(zip(block, r1.vertex_blocks[h[v]]))
    for (u, v), block in r0.edge_blocks.items():
        lift.update(zip(block, r1.edge_blocks[(h[u], h[v])]))
    if set(lift) != S0.vertices or set(lift.values()) != S1.vertices:
        raise CodingError("lifted map is not a bijection of image nodes")
    mapped = {frozenset((lift[x], lift[y])) for x, y in map(sorted, S0.edges)}
    if mapped != S1.edges:
        raise CodingError("lifted map does not preserve edges")
    return lift


def format_graph(g: Digraph | SymGraph) -> str:
    """Header ``digraph <n>`` or ``symgraph <n>`` over vertices 0..n-1,
    then one edge per line."""
    if isinstance(g, Digraph):
        kind, pairs = "digraph", sorted(g.edges)
    else:
        kind, pairs = "symgraph", sorted(tuple(sorted(e)) for e in g.edges)
    n = max(g.vertices) + 1 if g.vertices else 0
    lines = [f"{kind} {n}"]
    lines.extend(f"{u} {v}" for u, v in pairs)
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Digraph | SymGraph:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines())
             if ln and not ln.startswith("#")]
    if not lines:
        raise CodingError("empty graph text")
    head = lines[0].split()
    if len(head) != 2 or head[0] not in ("digraph", "symgraph"):
        raise CodingError(f"bad header {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise CodingError(f"bad vertex count {head[1]!r}") from None
    verts = set(range(n))
    pairs = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise CodingError(f"bad edge line {ln!r}")
        u, v = int(parts[0]), int(parts[1])
        if u not in verts or v not in verts:
            raise CodingError(f"edge ({u}, {v}) out of range")
        pairs.append((u, v))
    if head[0] == "digraph":
        return Digraph(verts, set(pairs))
    return SymGraph(verts, {frozenset(p) for p in pairs})


def graph_to_dot(g: Digraph | SymGraph) -> str:
    directed = isinstance(g, Digraph)
    arrow = "->" if directed else "--"
    lines = ["digraph D {" if directed else "graph S {"]
    for v in sorted(g.vertices):
        lines.append(f"  n{v};")
    if directed:
        pairs = sorted(g.edges)
    else:
        pairs = sorted(tuple(sorted(e)) for e in g.edges)
    for u, v in pairs:
        lines.append(f"  n{u} {arrow} n{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
