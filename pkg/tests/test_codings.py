"""Digraph <-> symmetric-graph coding: gadgets, roundtrips, transport."""

import random

import networkx as nx
import pytest

from prisim.codings import (
    CodingError,
    Digraph,
    StreamingEncoder,
    SymGraph,
    canonical_iso_roundtrip,
    decode,
    digraph_isomorphism_check,
    encode,
    format_graph,
    graph_to_dot,
    parse_graph,
    transport_iso,
    triangles,
)


def random_digraph(rng, max_n=8, p=0.3):
    n = rng.randrange(0, max_n + 1)
    verts = set(range(n))
    edges = {(u, v) for u in verts for v in verts
             if u != v and rng.random() < p}
    return Digraph(verts, edges)


def as_nx(d: Digraph) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(d.vertices)
    g.add_edges_from(d.edges)
    return g


def test_gadget_sizes_match_arithmetic():
    S, _ = encode(Digraph({0}, set()))
    assert (len(S.vertices), len(S.edges)) == (5, 6)
    S, _ = encode(Digraph({0, 1}, {(0, 1)}))
    assert (len(S.vertices), len(S.edges)) == (15, 19)
    S, _ = encode(Digraph())
    assert not S.vertices and not S.edges


def test_self_loop_rejected():
    with pytest.raises(CodingError):
        Digraph({0}, {(0, 0)})
    enc = StreamingEncoder()
    with pytest.raises(CodingError):
        enc.add_edge(2, 2)


def test_decode_recovers_direction():
    D = Digraph({0, 1}, {(0, 1)})
    back, _ = decode(encode(D)[0])
    assert len(back.edges) == 1
    iso = canonical_iso_roundtrip(D)
    (u, v) = next(iter(back.edges))
    assert (iso[u], iso[v]) == (0, 1)


def test_directed_3cycle_orientation_preserved():
    D = Digraph({0, 1, 2}, {(0, 1), (1, 2), (2, 0)})
    iso = canonical_iso_roundtrip(D)
    back, _ = decode(encode(D)[0])
    assert {(iso[u], iso[v]) for u, v in back.edges} == D.edges


def test_stray_node_is_residue():
    S, _ = encode(Digraph({0, 1}, {(0, 1)}))
    with pytest.raises(CodingError, match="stray"):
        decode(SymGraph(S.vertices | {777}, S.edges))


def test_extra_edge_rejected():
    S, reg = encode(Digraph({0, 1}, set()))
    S.add_edge(reg.node_of(0), reg.node_of(1))
    with pytest.raises(CodingError):
        decode(S)


def test_rigidity_triangles_are_vertex_flags():
    rng = random.Random(3)
    for _ in range(20):
        D = random_digraph(rng, max_n=5)
        S, reg = encode(D)
        tris = triangles(S)
        assert len(tris) == 2 * len(D.vertices)
        flag_nodes = {reg.node_of(v) for v in D.vertices}
        for t in tris:
            assert len(t & flag_nodes) == 1


def test_roundtrip_against_networkx_oracle():
    rng = random.Random(17)
    for _ in range(60):
        D = random_digraph(rng)
        iso = canonical_iso_roundtrip(D)
        back, _ = decode(encode(D)[0])
        relabeled = nx.relabel_nodes(as_nx(back), iso)
        assert nx.utils.graphs_equal(relabeled, as_nx(D))


def test_decode_accepts_renamed_images():
    rng = random.Random(29)
    for _ in range(30):
        D = random_digraph(rng, max_n=6)
        S, _ = encode(D)
        perm = sorted(S.vertices)
        shuffled = perm[:]
        rng.shuffle(shuffled)
        ren = dict(zip(perm, shuffled))
        S2 = SymGraph(set(shuffled),
                      {frozenset((ren[x], ren[y]))
                       for x, y in map(sorted, S.edges)})
        back, _ = decode(S2)
        assert nx.is_isomorphic(as_nx(back), as_nx(D))


def test_streaming_monotone_extension():
    enc = StreamingEncoder()
    enc.add_edge(0, 1)
    nodes_before = set(enc.graph.vertices)
    edges_before = set(enc.graph.edges)
    enc.add_edge(1, 2)
    enc.add_vertex(5)
    assert nodes_before <= enc.graph.vertices
    assert edges_before <= enc.graph.edges


def test_streaming_order_independent():
    rng = random.Random(41)
    D = Digraph({0, 1, 2, 3}, {(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)})
    reference, _ = encode(D)
    for _ in range(10):
        enc = StreamingEncoder()
        items = [("v", v) for v in D.vertices] + \
                [("e", e) for e in D.edges]
        rng.shuffle(items)
        for kind, item in items:
            if kind == "v":
                enc.add_vertex(item)
            else:
                enc.add_edge(*item)
        # same digraph back, and blockwise renaming onto the reference
        back, _ = decode(enc.graph)
        iso = {enc.registry.node_of(v): v for v in D.vertices}
        assert digraph_isomorphism_check(back, D, iso) is None


def test_transport_identity_and_swap():
    D = Digraph({0, 1}, set())
    lift = transport_iso(D, D, {0: 0, 1: 1})
    assert all(lift[x] == x for x in lift)
    swap = transport_iso(D, D, {0: 1, 1: 0})
    S, reg = encode(D)
    assert swap[reg.node_of(0)] == reg.node_of(1)
    assert set(swap) == S.vertices


def test_transport_rejects_non_iso_with_witness():
    D0 = Digraph({0, 1}, {(0, 1)})
    D1 = Digraph({0, 1}, set())
    with pytest.raises(CodingError, match=r"\(0, 1\)"):
        transport_iso(D0, D1, {0: 0, 1: 1})


def test_transport_random_relabelings():
    rng = random.Random(53)
    for _ in range(25):
        D0 = random_digraph(rng, max_n=6)
        perm = sorted(D0.vertices)
        images = perm[:]
        rng.shuffle(images)
        h = dict(zip(perm, images))
        D1 = Digraph(set(images), {(h[u], h[v]) for u, v in D0.edges})
        lift = transport_iso(D0, D1, h)
        # transport restricted to flag nodes equals h under the registries
        _, r0 = encode(D0)
        _, r1 = encode(D1)
        for v in D0.vertices:
            assert lift[r0.node_of(v)] == r1.node_of(h[v])


def test_decode_invariance_under_automorphisms():
    """Any symgraph automorphism maps flag nodes to flag nodes and induces a
    digraph automorphism (checked on small instances)."""
    for D in (Digraph({0, 1}, set()),
              Digraph({0, 1, 2}, {(0, 1), (1, 2), (2, 0)})):
        S, reg = encode(D)
        g = nx.Graph(tuple(sorted(e)) for e in S.edges)
        flags = {reg.node_of(v): v for v in D.vertices}
        matcher = nx.algorithms.isomorphism.GraphMatcher(g, g)
        count = 0
        for auto in matcher.isomorphisms_iter():
            count += 1
            assert set(map(auto.get, flags)) == set(flags)
            induced = {flags[x]: flags[auto[x]] for x in flags}
            assert digraph_isomorphism_check(D, D, induced) is None
            if count >= 50:
                break
        assert count >= 1


def test_text_format_roundtrip():
    D = Digraph({0, 1, 2}, {(0, 1), (2, 0)})
    assert parse_graph(format_graph(D)) == D
    S, _ = encode(D)
    S2 = parse_graph(format_graph(S))
    assert S2.edges == S.edges
    for bad in ("", "graph 3", "digraph x", "digraph 2\n0 5",
                "digraph 2\n0 1 2"):
        with pytest.raises(CodingError):
            parse_graph(bad)


def test_dot_export_shapes():
    dot_d = graph_to_dot(Digraph({0, 1}, {(0, 1)}))
    assert "n0 -> n1;" in dot_d and dot_d.startswith("digraph")
    dot_s = graph_to_dot(SymGraph({0, 1}, {frozenset((0, 1))}))
    assert "n0 -- n1;" in dot_s and dot_s.startswith("graph")
