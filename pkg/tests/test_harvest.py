import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kfactor.bounds import harvest_moments, p_s
from kfactor.errors import ParameterError, RejectedInput
from kfactor.graph import Graph, mask_of, overlay
from kfactor.harvest import (HarvestInstance, candidate_book, find_clique, harvest, intersection_profile,
                             thin_gprime, verify_copies)
from kfactor.perturbation import PerturbationPlan, derive_seed, random_edges


def regular(n, d, seed):
    h = nx.random_regular_graph(d, n, seed=seed)
    return Graph.from_edges(n, sorted(tuple(sorted(e)) for e in h.edges()))


def test_clique_host_without_random_edges():
    for s in (2, 3):
        host = Graph.complete(3 * (s + 1))
        res = harvest(HarvestInstance(host, 1, s, 0.0, PerturbationPlan(0)))
        assert res.ok and len(res.copies) == 1 and host.is_clique(res.copies[0])


def test_precondition_and_parameter_errors():
    host = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    with pytest.raises(RejectedInput):
        harvest(HarvestInstance(host, 2, 2, 0.5, PerturbationPlan(0)))
    with pytest.raises(ParameterError):
        harvest(HarvestInstance(Graph.complete(5), 1, 2, 0.5, PerturbationPlan(0), regime="bogus"))


def test_regular_host_triangles():
    n = 300
    host = regular(n, 10, 7)
    p = 20 * math.log(n) / n
    wins = 0
    for i in range(20):
        res = harvest(HarvestInstance(host, 10, 2, p, PerturbationPlan(derive_seed(1, i))))
        assert res.regime == "small-g"
        wins += res.ok
    assert wins >= 19


def test_small_g_threshold():
    n = 100
    # ln(100)^2 is about 21.2
    host = regular(n, 24, 2)
    below = harvest(HarvestInstance(host, 21, 2, 0.3, PerturbationPlan(1)))
    above = harvest(HarvestInstance(host, 22, 2, 0.3, PerturbationPlan(1), delta=1.0))
    assert below.regime == "small-g"
    assert above.regime != "small-g"


@pytest.mark.parametrize("regime", ["greedy-large-g", "main-WF"])
def test_forced_regimes_return_verified_copies(regime):
    n = 90
    host = regular(n, 30, 4)
    p = 3 * p_s(n, 2)
    res = harvest(HarvestInstance(host, 30, 2, p, PerturbationPlan(6), regime=regime, delta=1.0))
    assert res.regime == regime
    combined = overlay(host, random_edges(n, p, PerturbationPlan(6)))
    assert verify_copies(combined, res.copies, 3)
    used = [v for c in res.copies for v in c]
    assert len(used) == len(set(used))


def test_main_regime_copies_contain_one_thinned_edge():
    n, g, s = 150, 40, 2
    host = regular(n, g, 1)
    res = harvest(HarvestInstance(host, g, s, 2 * p_s(n, s), PerturbationPlan(3), regime="main-WF", delta=1.0))
    assert res.diagnostics["W_tilde"] >= res.diagnostics["survivors"] >= len(res.copies)
    for c in res.copies:
        assert sum(host.has_edge(u, v) for u, v in itertools.combinations(c, 2)) >= 1


def test_w_tilde_tracks_first_moment():
    n, g, s, c = 150, 40, 2, 2.0
    host = regular(n, g, 1)
    observed, predicted = [], []
    for i in range(200):
        res = harvest(HarvestInstance(host, g, s, c * p_s(n, s), PerturbationPlan(derive_seed(3, i)),
                                      regime="main-WF", delta=1.0))
        observed.append(res.diagnostics["W_tilde"])
        predicted.append(harvest_moments(n, g, s, c, w_size=res.diagnostics["W"]).mu)
    diff = np.array(observed) - np.array(predicted)
    assert abs(diff.mean()) <= 3 * diff.std(ddof=1) / math.sqrt(len(diff))


def test_candidate_book_counts():
    host = regular(30, 10, 9)
    A, B, D = list(range(10)), list(range(10, 20)), list(range(20, 30))
    g, s = 10, 3
    book = candidate_book(host, A, B, D, s, g)
    assert len(book.W) == len(book.gprime_edges) * math.comb(10, s - 1)
    assert len(set(book.W)) == len(book.W)
    d_set = set(D)
    for k in book.W:
        outside = [v for v in k if v not in d_set]
        assert len(outside) == 2 and tuple(sorted(outside)) in set(book.gprime_edges)
    # cherries: ordered pairs of distinct G'-neighbours around each centre, by triple scan
    rows = thin_gprime(host, A, mask_of(B), math.ceil(g / 5))
    adj = [set(v for v in range(30) if rows[u] >> v & 1) for u in range(30)]
    triples = sum(1 for x in range(30) for y in adj[x] for z in adj[x] if y != z)
    assert book.cherries == triples
    assert book.cherries_A == sum(len(adj[u]) * (len(adj[u]) - 1) for u in A)


def test_candidate_book_exact_degree_and_empty():
    host = Graph.complete(15)
    A, B, D = range(5), range(5, 10), range(10, 15)
    book = candidate_book(host, A, B, D, 2, 10)
    d0 = 2
    assert book.cherries_A == 5 * d0 * (d0 - 1)
    empty = Graph.empty(15)
    assert candidate_book(empty, A, B, D, 2, 10).W == []
    with pytest.raises(ParameterError):
        candidate_book(host, range(6), range(5, 10), D, 2, 10)


@settings(max_examples=30)
@given(st.lists(st.frozensets(st.integers(0, 12), min_size=3, max_size=3), max_size=25, unique=True))
def test_intersection_profile_matches_pair_scan(sets):
    members = [mask_of(s) for s in sets]
    got = intersection_profile(members, 3)
    brute = {1: 0, 2: 0}
    for a, b in itertools.combinations(sets, 2):
        k = len(a & b)
        if k:
            brute[k] += 1
    assert got == brute


def test_find_clique_lowest_first():
    g = Graph.complete(6)
    assert find_clique(g.rows, g.all_mask, 3) == (0, 1, 2)
    assert find_clique(g.rows, 0b111000, 3) == (3, 4, 5)
    assert find_clique(Graph.empty(6).rows, 0b111111, 2) is None
