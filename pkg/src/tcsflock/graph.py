"""Directed interaction topology.

Convention: ``adjacency[i, j] == 1`` means vertex ``j`` transmits to vertex ``i``
(an arc ``j -> i``). Self-loops are always present.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphError, NoSpanningTreeError

MAX_RANDOM_ATTEMPTS = 200


@dataclass(frozen=True, eq=False)
class Digraph:
    n: int
    adjacency: np.ndarray

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise GraphError(f"vertex count must be an integer >= 1, got {self.n!r}")
        adj = np.array(self.adjacency, dtype=float)
        if adj.shape != (self.n, self.n):
            raise GraphError(f"adjacency must be {self.n}x{self.n}, got shape {adj.shape}")
        if not np.all((adj == 0.0) | (adj == 1.0)):
            raise GraphError("adjacency entries must be exactly 0 or 1")
        if not np.all(np.diag(adj) == 1.0):
            raise GraphError("all self-loops must be present (diagonal of 1s)")
        adj.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "adjacency", adj)

    def __eq__(self, other):
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.n, self.adjacency.tobytes()))

    def __repr__(self):
        return f"Digraph(n={self.n}, arcs={self.arcs()})"

    @property
    def edge_count(self) -> int:
        """Number of arcs, not counting self-loops."""
        return int(self.adjacency.sum()) - self.n

    def arcs(self) -> list[tuple[int, int]]:
        """Arcs as ``(source, target)`` pairs, self-loops excluded, sorted."""
        targets, sources = np.nonzero(self.adjacency)
        return sorted((int(s), int(t)) for t, s in zip(targets, sources) if s != t)

    def out_neighbors(self, v: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.adjacency[:, v]) if i != v]

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.adjacency, self.adjacency.T))

    def with_arc(self, source: int, target: int) -> "Digraph":
        return from_edge_list(self.n, self.arcs() + [(source, target)])


def from_edge_list(n: int, edges: Iterable[Sequence[int]]) -> Digraph:
    """Build a digraph from ``(source, target)`` arcs; duplicates are idempotent."""
    if int(n) != n or n < 1:
        raise GraphError(f"vertex count must be an integer >= 1, got {n!r}")
    adj = np.eye(n)
    for edge in edges:
        if len(edge) != 2:
            raise GraphError(f"edge must be a (source, target) pair, got {edge!r}")
        source, target = edge
        for v in (source, target):
            if int(v) != v or not 0 <= v < n:
                raise GraphError(f"vertex {v!r} out of range for n={n}")
        adj[int(target), int(source)] = 1.0
    return Digraph(int(n), adj)


def from_adjacency(matrix) -> Digraph:
    """Support digraph G(A): arc ``j -> i`` iff ``A[i, j] > 0``; self-loops forced."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphError(f"adjacency source must be square, got shape {a.shape}")
    adj = (a > 0).astype(float)
    np.fill_diagonal(adj, 1.0)
    return Digraph(a.shape[0], adj)


def complete(n: int) -> Digraph:
    return Digraph(n, np.ones((n, n)))


def path(n: int) -> Digraph:
    """Directed path 0 -> 1 -> ... -> n-1."""
    return from_edge_list(n, [(k, k + 1) for k in range(n - 1)])


def cycle(n: int) -> Digraph:
    """Directed cycle 0 -> 1 -> ... -> n-1 -> 0."""
    if n == 1:
        return from_edge_list(1, [])
    return from_edge_list(n, [(k, (k + 1) % n) for k in range(n)])


def random_digraph(n: int, p: float, seed: int, max_attempts: int = MAX_RANDOM_ATTEMPTS) -> Digraph:
    """Erdos-Renyi digraph, redrawn until it has a spanning tree."""
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"arc probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        adj = (rng.random((n, n)) < p).astype(float)
        np.fill_diagonal(adj, 1.0)
        g = Digraph(n, adj)
        if roots(g):
            return g
    raise NoSpanningTreeError(
        f"no spanning tree after {max_attempts} random draws (n={n}, p={p}, seed={seed})"
    )


def _check_vertex(g: Digraph, v: int) -> None:
    if int(v) != v or not 0 <= v < g.n:
        raise GraphError(f"vertex {v!r} out of range for n={g.n}")


def bfs_distances(g: Digraph, source: int) -> np.ndarray:
    """Shortest arc-count distances from ``source``; -1 marks unreachable vertices."""
    _check_vertex(g, source)
    dist = np.full(g.n, -1, dtype=int)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in g.out_neighbors(v):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def is_reachable(g: Digraph, source: int, target: int) -> bool:
    _check_vertex(g, target)
    return bool(bfs_distances(g, source)[target] >= 0)


def roots(g: Digraph) -> list[int]:
    """All vertices from which every vertex is reachable (empty iff no spanning tree)."""
    return [r for r in range(g.n) if np.all(bfs_distances(g, r) >= 0)]


def smallest_depth(g: Digraph) -> int:
    """Minimum over roots of the maximal shortest-path distance from that root."""
    rs = roots(g)
    if not rs:
        raise NoSpanningTreeError("digraph has no spanning tree; smallest depth undefined")
    return int(min(bfs_distances(g, r).max() for r in rs))


def has_spanning_tree(g: Digraph) -> bool:
    return bool(roots(g))
