import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kfactor.constructions import hs_tight, q_graph
from kfactor.errors import ParameterError, SizeLimitError
from kfactor.factor import (ABSENT, BUDGET, FOUND, count_factors, has_factor, has_family_factor,
                            max_disjoint_cliques, verify_factor)
from kfactor.graph import Graph
from kfactor.perturbation import PerturbationPlan, derive_seed, random_edges

from oracles import (adjacency_sets, count_clique_partitions, has_clique_partition, max_disjoint,
                     tutte_rank_perfect_matching)


def gnp(n, p, seed):
    return random_edges(n, p, PerturbationPlan(seed))


def test_small_examples():
    res = has_factor(Graph.complete(6), 3)
    assert res.status == FOUND and len(res.parts) == 2
    assert verify_factor(Graph.complete(6), res.parts, 3)
    g, _ = hs_tight(12, 3)
    assert has_factor(g, 3).status == ABSENT
    assert has_factor(Graph.complete(7), 3).reason == "divisibility"
    with pytest.raises(ParameterError):
        has_factor(Graph.complete(4), 1)


@pytest.mark.parametrize("method", ["search", "milp", "auto"])
def test_methods_agree_with_partition_scan(method):
    for i in range(30):
        g = gnp(12, 0.9, derive_seed(77, i))
        expected = has_clique_partition(adjacency_sets(12, g.edges()), 4)
        res = has_factor(g, 4, method=method)
        assert res.found == expected
        if res.found:
            assert verify_factor(g, res.parts, 4)


def test_budget_is_a_third_verdict():
    g = gnp(30, 0.45, 0)
    assert has_factor(g, 3, budget=3, method="search").status == BUDGET
    assert has_factor(g, 3).status == FOUND


def test_count_factors_examples():
    c6 = Graph.from_edges(6, [(i, (i + 1) % 6) if i < 5 else (0, 5) for i in range(6)])
    assert count_factors(Graph.complete(6), 3) == 10
    assert count_factors(Graph.complete(4), 2) == 3
    assert count_factors(c6, 2) == 2
    with pytest.raises(SizeLimitError):
        count_factors(Graph.complete(17), 2)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 63), st.integers(2, 4), st.sampled_from([6, 8, 9, 12]), st.floats(0.3, 0.95))
def test_count_and_decision_match_oracle(seed, r, n, p):
    g = gnp(n, p, seed)
    adj = adjacency_sets(n, g.edges())
    cnt = count_factors(g, r)
    assert cnt == count_clique_partitions(adj, r)
    res = has_factor(g, r)
    assert res.found == (cnt > 0)
    if res.found:
        assert verify_factor(g, res.parts, r)


def test_matching_agrees_with_tutte_oracle():
    rng = np.random.default_rng(5)
    for i in range(1000):
        n = int(rng.integers(1, 41)) * 2 if i % 50 else 200
        p = min(1.0, float(rng.uniform(0.5, 4.0)) * np.log(n + 1) / n)
        g = gnp(n, p, derive_seed(13, i))
        assert has_factor(g, 2).found == tutte_rank_perfect_matching(n, list(g.edges()), seed=i)


def test_max_disjoint_cliques_examples():
    two = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert max_disjoint_cliques(two, 3, target=2).size == 2
    assert max_disjoint_cliques(Graph.complete(5), 3, target=2).size == 1


def test_max_disjoint_cliques_exact_mode_matches_oracle():
    for i in range(5):
        g = gnp(16, 0.7, derive_seed(3, i))
        res = max_disjoint_cliques(g, 4, target=16)
        if res.mode == "greedy":
            continue
        cliques = [tuple(c) for c in nx.enumerate_all_cliques(_nx(g)) if len(c) == 4]
        assert res.size == max_disjoint(cliques)
        used = [v for c in res.cliques for v in c]
        assert len(used) == len(set(used)) and all(g.is_clique(c) for c in res.cliques)


def _nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


def test_family_factor_examples():
    c5 = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
    k1, k2 = Graph.empty(1), Graph.complete(2)
    assert has_family_factor(c5, [k1]).found
    res = has_family_factor(c5, [k1, k2])
    assert res.found
    assert sorted(len(emb) for _, emb in res.parts) == [1, 2, 2]
    q, *_ = q_graph(5, 3)
    res = has_family_factor(q, [q])
    assert res.found and len(res.parts) == 1
    with pytest.raises(SizeLimitError):
        has_family_factor(q, [Graph.empty(11)])


def test_family_copies_span_and_contain_members():
    q, *_ = q_graph(3, 2)
    for i in range(20):
        g = gnp(10, 0.5, derive_seed(21, i))
        fam = [Graph.empty(1), Graph.complete(2), q]
        res = has_family_factor(g, fam)
        assert res.found
        covered = [v for _, emb in res.parts for v in emb.values()]
        assert sorted(covered) == list(range(10))
        for idx, emb in res.parts:
            assert all(g.has_edge(emb[a], emb[b]) for a, b in fam[idx].edges())


def test_factor_monotone_in_added_edges():
    for i in range(50):
        g = gnp(12, 0.7, derive_seed(8, i))
        if not has_factor(g, 3).found:
            continue
        missing = [e for e in itertools.combinations(range(12), 2) if not g.has_edge(*e)]
        assert has_factor(g.with_edges(missing[:5]), 3).found
