import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kfactor.constructions import f_gamma
from kfactor.errors import DimensionError, InputFormatError, ParameterError, SizeLimitError
from kfactor.graph import (Graph, check_regular_pair, count_cliques, count_embeddings, enumerate_cliques,
                           even_trail, format_el, format_sets, graph_classes, is_valid_trail, overlay, parse_el,
                           parse_sets)

from oracles import adjacency_sets, induced_embeddings


@st.composite
def graphs(draw, max_n=10):
    n = draw(st.integers(0, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph.from_edges(n, sorted(chosen))


def test_from_edges_examples():
    tri = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert tri.m == 3 and tri == Graph.complete(3)
    empty = Graph.from_edges(4, [])
    assert empty.m == 0 and empty.min_degree() == 0


@pytest.mark.parametrize("edges, line", [([(0, 1), (0, 1)], 3), ([(0, 4)], 2), ([(2, 1)], 2), ([(1, 1)], 2)])
def test_from_edges_rejects_bad_pairs(edges, line):
    with pytest.raises(InputFormatError) as exc:
        Graph.from_edges(4, edges)
    assert exc.value.line == line


def test_parse_el_errors_name_the_line():
    with pytest.raises(InputFormatError) as exc:
        parse_el("3 2\n0 1\n0 1\n")
    assert exc.value.line == 3
    with pytest.raises(InputFormatError):
        parse_el("3 2\n0 1\n")
    with pytest.raises(InputFormatError):
        parse_el("3 1\n0 1")


def test_size_cap():
    with pytest.raises(SizeLimitError):
        Graph.from_edges(20_001, [])


@given(graphs())
def test_edge_list_round_trip(g):
    assert parse_el(format_el(g)) == g


@given(st.dictionaries(st.from_regex(r"[A-Z][a-z0-9]{0,3}", fullmatch=True),
                       st.frozensets(st.integers(0, 50), max_size=8), max_size=4))
def test_sets_round_trip(sets):
    assert parse_sets(format_sets(sets)) == sets


def test_overlay_examples():
    path = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert overlay(path, Graph.empty(3)) == path
    assert overlay(path, Graph.from_edges(3, [(0, 2)])) == Graph.complete(3)
    assert overlay(path, path) == path
    with pytest.raises(DimensionError):
        overlay(path, Graph.empty(4))


@given(graphs(), graphs())
def test_overlay_commutes_and_is_union(g1, g2):
    if g1.n != g2.n:
        return
    u = overlay(g1, g2)
    assert u == overlay(g2, g1)
    assert set(u.edges()) == set(g1.edges()) | set(g2.edges())


def test_enumerate_cliques_examples():
    assert len(list(enumerate_cliques(Graph.complete(5), 3))) == 10
    c5 = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
    assert list(enumerate_cliques(c5, 3)) == []


def test_clique_count_matches_quadruple_scan():
    g, _ = f_gamma(40, 4, 2, 0.1)
    adj = adjacency_sets(g.n, g.edges())
    brute = sum(1 for q in itertools.combinations(range(40), 4)
                if all(b in adj[a] for a, b in itertools.combinations(q, 2)))
    assert count_cliques(g, 4) == brute


@settings(max_examples=60)
@given(graphs(max_n=11), st.integers(1, 5))
def test_cliques_match_networkx(g, k):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    expected = sorted(tuple(sorted(c)) for c in nx.enumerate_all_cliques(h) if len(c) == k)
    got = list(enumerate_cliques(g, k))
    assert got == sorted(got) == expected


def test_count_embeddings_examples():
    k2, k3 = Graph.complete(2), Graph.complete(3)
    assert count_embeddings(k2, k3) == 6
    h = Graph.from_edges(5, [(0, 1), (2, 3)])
    assert count_embeddings(Graph.empty(1), h) == 5
    p3 = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert count_embeddings(p3, Graph.complete(4)) == 0
    with pytest.raises(SizeLimitError):
        count_embeddings(Graph.empty(7), Graph.complete(8))


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=4), graphs(max_n=7))
def test_count_embeddings_matches_permutation_scan(f, h):
    if f.n > h.n:
        return
    expected = induced_embeddings(adjacency_sets(f.n, f.edges()), adjacency_sets(h.n, h.edges()))
    assert count_embeddings(f, h) == expected


def test_graph_classes_counts():
    # number of unlabelled graphs on k vertices
    assert [len(graph_classes(k)) for k in range(1, 6)] == [1, 2, 4, 11, 34]


def test_even_trail_examples():
    tri = Graph.complete(3)
    assert even_trail(tri, 0, 0) == [0]
    walk = even_trail(tri, 0, 1)
    assert walk == [0, 2, 1]
    path = Graph.from_edges(2, [(0, 1)])
    assert even_trail(path, 0, 1) is None


@settings(max_examples=60)
@given(graphs(max_n=9), st.data())
def test_even_trail_is_valid_when_present(g, data):
    if g.n == 0:
        return
    u = data.draw(st.integers(0, g.n - 1))
    v = data.draw(st.integers(0, g.n - 1))
    walk = even_trail(g, u, v)
    if walk is not None:
        assert walk[0] == u and walk[-1] == v
        assert (len(walk) - 1) % 2 == 0 and len(walk) - 1 <= 8
        assert is_valid_trail(g, walk)


def test_regular_pair_examples():
    n = 16
    left, right = range(8), range(8, 16)
    kbip = Graph.from_edges(n, [(a, b) for a in left for b in right])
    assert check_regular_pair(kbip, left, right, 0.25, 1.0).regular
    assert check_regular_pair(Graph.empty(n), left, right, 0.25, 0.0).regular
    # left is complete to the first half of right and empty to the second
    half = Graph.from_edges(n, [(a, b) for a in left for b in range(8, 12)])
    verdict = check_regular_pair(half, left, right, 0.25, 0.5)
    assert not verdict.regular and verdict.mode == "exhaustive"
    x1, x2 = verdict.witness
    assert abs(half.edges_between(sum(1 << v for v in x1), sum(1 << v for v in x2)) / (len(x1) * len(x2)) - 0.5) >= 0.25
    with pytest.raises(ParameterError):
        check_regular_pair(kbip, range(4), range(3, 8), 0.25, 1.0)
