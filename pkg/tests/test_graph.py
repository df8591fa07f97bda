import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcsflock import graph
from tcsflock.errors import GraphError, NoSpanningTreeError


def _closure(adj: np.ndarray) -> np.ndarray:
    """Warshall closure: reach[s, t] is True when t is reachable from s."""
    n = adj.shape[0]
    reach = adj.T.astype(bool) | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    return reach


def _brute_depth(g: graph.Digraph) -> int | None:
    """Depth by repeated relaxation (Bellman-Ford style), independent of BFS."""
    n = g.n
    best = None
    for r in range(n):
        dist = [np.inf] * n
        dist[r] = 0
        for _ in range(n):
            for s, t in g.arcs():
                dist[t] = min(dist[t], dist[s] + 1)
        if max(dist) < np.inf:
            best = max(dist) if best is None else min(best, max(dist))
    return best


def _random_graph(rng, n, p):
    adj = (rng.random((n, n)) < p).astype(float)
    np.fill_diagonal(adj, 1.0)
    return graph.from_adjacency(adj)


class TestConstruction:
    def test_single_vertex(self):
        g = graph.from_edge_list(1, [])
        assert g.adjacency.tolist() == [[1.0]]

    def test_edge_placement(self):
        g = graph.from_edge_list(3, [(0, 1), (1, 2)])
        expected = np.eye(3)
        expected[1, 0] = expected[2, 1] = 1.0
        np.testing.assert_array_equal(g.adjacency, expected)

    def test_duplicate_edges_idempotent(self):
        assert graph.from_edge_list(2, [(0, 1), (0, 1)]) == graph.from_edge_list(2, [(0, 1)])

    @pytest.mark.parametrize("edge", [(0, 3), (-1, 0), (2, 5)])
    def test_out_of_range(self, edge):
        with pytest.raises(GraphError):
            graph.from_edge_list(3, [edge])

    def test_adjacency_is_read_only(self):
        g = graph.complete(3)
        with pytest.raises(ValueError):
            g.adjacency[0, 1] = 0.0

    def test_zero_diagonal_rejected(self):
        with pytest.raises(GraphError):
            graph.Digraph(2, np.array([[0.0, 1.0], [1.0, 1.0]]))


class TestReachability:
    def test_path_forward_and_back(self):
        g = graph.path(3)
        assert graph.is_reachable(g, 0, 2)
        assert not graph.is_reachable(g, 2, 0)

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_self_reachable(self, n):
        g = graph.from_edge_list(n, [])
        assert all(graph.is_reachable(g, i, i) for i in range(n))

    @pytest.mark.parametrize(
        "g, expected",
        [(graph.path(3), [0]), (graph.complete(3), [0, 1, 2]), (graph.from_edge_list(2, []), [])],
        ids=["path", "complete", "isolated"],
    )
    def test_roots(self, g, expected):
        assert graph.roots(g) == expected

    def test_roots_match_transitive_closure(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            g = _random_graph(rng, n, rng.uniform(0.0, 0.7))
            reach = _closure(g.adjacency)
            assert graph.roots(g) == [r for r in range(n) if reach[r].all()]


class TestSmallestDepth:
    @pytest.mark.parametrize(
        "g, gamma",
        [(graph.path(3), 2), (graph.complete(4), 1), (graph.cycle(5), 4), (graph.from_edge_list(1, []), 0)],
        ids=["path3", "complete4", "cycle5", "single"],
    )
    def test_examples(self, g, gamma):
        assert graph.smallest_depth(g) == gamma

    def test_cycle_matches_relaxation_oracle(self):
        assert _brute_depth(graph.cycle(5)) == 4

    def test_no_spanning_tree_raises(self):
        g = graph.from_edge_list(3, [(0, 1)])
        with pytest.raises(NoSpanningTreeError):
            graph.smallest_depth(g)
        assert not graph.has_spanning_tree(g)

    def test_error_iff_no_roots_and_oracle_agreement(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            n = int(rng.integers(1, 9))
            g = _random_graph(rng, n, rng.uniform(0.0, 0.6))
            oracle = _brute_depth(g)
            if graph.roots(g):
                assert graph.smallest_depth(g) == oracle
                assert 0 <= oracle <= n - 1
            else:
                assert oracle is None
                with pytest.raises(NoSpanningTreeError):
                    graph.smallest_depth(g)

    def test_adding_arcs_never_increases_depth(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(300):
            n = int(rng.integers(2, 9))
            g = _random_graph(rng, n, rng.uniform(0.2, 0.7))
            if not graph.roots(g):
                continue
            s, t = (int(v) for v in rng.integers(0, n, 2))
            bigger = g.with_arc(s, t)
            assert graph.smallest_depth(bigger) <= graph.smallest_depth(g)
            assert graph.smallest_depth(bigger) == _brute_depth(bigger)
            checked += 1
        assert checked > 100


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 7), data=st.data())
def test_generated_edge_lists(n, data):
    pairs = list(itertools.product(range(n), repeat=2))
    edges = data.draw(st.lists(st.sampled_from(pairs), max_size=12))
    g = graph.from_edge_list(n, edges)
    assert np.all(np.diag(g.adjacency) == 1.0)
    for s, t in edges:
        assert g.adjacency[t, s] == 1.0
        assert graph.is_reachable(g, s, t)


def test_random_digraph_is_seeded_and_rooted():
    a = graph.random_digraph(6, 0.3, seed=5)
    b = graph.random_digraph(6, 0.3, seed=5)
    assert a == b
    assert graph.roots(a)


def test_random_digraph_gives_up():
    with pytest.raises(NoSpanningTreeError):
        graph.random_digraph(4, 0.0, seed=1, max_attempts=5)
