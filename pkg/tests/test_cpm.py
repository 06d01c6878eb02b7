import random
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupdyn.cpm import (CliquePercolation, KClique, detect, enumerate_k_cliques, maximal_cliques,
                          one_way_acyclic, percolate, read_groups, write_groups)
from groupdyn.graph import Snapshot

from oracles import brute_force_communities, brute_force_k_cliques


def both_ways(edges):
    arcs = {}
    for u, v in edges:
        arcs[(u, v)] = arcs[(v, u)] = 1
    return Snapshot(0, arcs)


def test_k4_has_four_triangles():
    snap = both_ways(combinations("abcd", 2))
    assert len(enumerate_k_cliques(snap, 3, "undirected")) == 4


def test_directed_three_cycle_has_no_clique():
    snap = Snapshot(0, {("a", "b"): 1, ("b", "c"): 1, ("c", "a"): 1})
    assert enumerate_k_cliques(snap, 3, "directed") == []
    assert len(enumerate_k_cliques(snap, 3, "undirected")) == 1


def test_transitive_triangle_is_directed_clique():
    snap = Snapshot(0, {("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 1})
    assert enumerate_k_cliques(snap, 3, "directed") == [KClique(("a", "b", "c"))]


def test_reciprocal_pair_imposes_no_order():
    # a<->b plus the cycle-looking b->c->a is acyclic once a<->b is ignored
    snap = Snapshot(0, {("a", "b"): 1, ("b", "a"): 1, ("b", "c"): 1, ("c", "a"): 1})
    assert len(enumerate_k_cliques(snap, 3, "directed")) == 1


@pytest.mark.parametrize("k", [3, 4, 5])
def test_empty_graph(k):
    assert enumerate_k_cliques(Snapshot(0, {}), k) == []
    assert detect(Snapshot(0, {}), k) == []


def test_two_triangles_sharing_edge():
    snap = both_ways([("a", "b"), ("b", "c"), ("a", "c"), ("b", "d"), ("c", "d")])
    comms = detect(snap, 3, "undirected")
    assert [c.members for c in comms] == [frozenset("abcd")]


def test_two_disjoint_triangles():
    snap = both_ways([("a", "b"), ("b", "c"), ("a", "c"), ("x", "y"), ("y", "z"), ("x", "z")])
    assert len(detect(snap, 3, "undirected")) == 2


def test_chain_of_three_triangles():
    cliques = [KClique.of("abc"), KClique.of("bcd"), KClique.of("cde")]
    comms = percolate(cliques, 3)
    assert [c.members for c in comms] == [frozenset("abcde")]


def test_triangles_sharing_one_node_stay_apart():
    snap = both_ways([("a", "b"), ("b", "c"), ("a", "c"), ("c", "d"), ("d", "e"), ("c", "e")])
    comms = detect(snap, 3, "undirected")
    assert sorted(len(c) for c in comms) == [3, 3]
    assert comms[0].members & comms[1].members == {"c"}


def test_k5_complete():
    snap = both_ways(combinations("abcde", 2))
    assert [c.members for c in detect(snap, 5)] == [frozenset("abcde")]


def test_overlapping_communities_sharing_two_nodes():
    left = list("abcdxy")
    right = list("xyefgh")
    snap = both_ways(list(combinations(left, 2)) + list(combinations(right, 2)))
    comms = detect(snap, 4)
    assert {c.members for c in comms} == {frozenset(left), frozenset(right)}


def test_k_validation():
    with pytest.raises(ValueError):
        detect(Snapshot(0, {}), 2)
    with pytest.raises(ValueError):
        detect(Snapshot(0, {}), 3, "sideways")


def test_one_way_acyclic():
    assert one_way_acyclic("abc", {("a", "b"), ("b", "c"), ("a", "c")})
    assert not one_way_acyclic("abc", {("a", "b"), ("b", "c"), ("c", "a")})


def test_maximal_cliques():
    adj = {"a": {"b", "c"}, "b": {"a", "c"}, "c": {"a", "b", "d"}, "d": {"c"}}
    assert sorted(map(sorted, maximal_cliques(adj))) == [["a", "b", "c"], ["c", "d"]]


def random_digraph(rng, n, p):
    nodes = [f"n{i:02d}" for i in range(n)]
    arcs = {(u, v): 1 for u in nodes for v in nodes if u != v and rng.random() < p}
    return nodes, arcs


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(4, 14), st.floats(0.1, 0.7), st.sampled_from([3, 4]),
       st.sampled_from(["directed", "undirected"]))
def test_matches_brute_force(seed, n, p, k, mode):
    nodes, arcs = random_digraph(random.Random(seed), n, p)
    snap = Snapshot(0, arcs)
    got = {frozenset(c.nodes) for c in enumerate_k_cliques(snap, k, mode)}
    assert got == {frozenset(c) for c in brute_force_k_cliques(nodes, arcs, k, mode)}
    assert {c.members for c in detect(snap, k, mode)} == brute_force_communities(nodes, arcs, k, mode)


def test_deterministic_output_order():
    nodes, arcs = random_digraph(random.Random(3), 20, 0.5)
    shuffled = dict(sorted(arcs.items(), key=lambda _: random.random()))
    a = detect(Snapshot(0, arcs), 3)
    b = detect(Snapshot(0, shuffled), 3)
    assert [c.members for c in a] == [c.members for c in b]
    assert [c.id for c in a] == [f"0:{i}" for i in range(len(a))]


def test_estimator_api():
    snap = both_ways(list(combinations("abcd", 2)) + [("d", "e")])
    est = CliquePercolation(k=3, mode="undirected")
    assert est.get_params() == {"k": 3, "mode": "undirected"}
    assert est.fit_predict(snap) == [frozenset("abcd")]
    assert est.n_communities_ == 1 and est.membership_["a"] == [0]
    assert list(est.sizes()) == [4]


def test_estimator_accepts_edge_array():
    edges = np.array([[0, 1], [1, 0], [1, 2], [2, 1], [0, 2], [2, 0]])
    assert len(CliquePercolation(k=3).fit(edges).communities_) == 1


def test_groups_roundtrip(tmp_path):
    comms = detect(both_ways(combinations("abcd", 2)), 3)
    path = write_groups(comms, tmp_path, 0)
    assert read_groups(path, 3) == comms
