"""Undirected simple graphs in CSR form, with removal expressed as boolean masks.

A :class:`Graph` never changes after construction. "Removing" nodes means
passing a boolean ``removed`` array (a node mask) to the query functions, so
many randomized trials can share one graph.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from . import _kernels


class ConvergenceError(RuntimeError):
    """Power iteration hit its iteration cap."""


class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    ``indptr``/``indices`` follow the scipy CSR convention; each neighbor list
    is sorted. Use :meth:`from_edges` unless the arrays are already canonical.
    """

    __slots__ = ("indptr", "indices")

    def __init__(self, indptr: np.ndarray, indices: np.ndarray):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        if indptr.ndim != 1 or indptr.shape[0] < 1 or indptr[0] != 0 or indptr[-1] != indices.shape[0]:
            raise ValueError("malformed CSR arrays")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        self.indptr = indptr
        self.indices = indices

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Graph":
        """Build from ``(u, v)`` pairs. Duplicates collapse; self-loops are rejected."""
        if n < 0:
            raise ValueError("node count must be non-negative")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError(f"edge endpoint outside [0, {n})")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        both = np.concatenate([e, e[:, ::-1]])
        if both.size:
            both = np.unique(both, axis=0)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(both[:, 0], minlength=n), out=indptr[1:])
        return cls(indptr, both[:, 1].copy())

    @property
    def n(self) -> int:
        return self.indptr.shape[0] - 1

    @property
    def num_edges(self) -> int:
        return self.indices.shape[0] // 2

    def neighbors(self, v: int) -> np.ndarray:
        _check_node(self, v)
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """Edge array of shape (m, 2) with ``u < v``, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        upper = rows < self.indices
        return np.column_stack([rows[upper], self.indices[upper]])

    def induced(self, keep: np.ndarray) -> "Graph":
        """Fresh graph on the kept nodes, relabelled in increasing id order."""
        keep = np.asarray(keep, dtype=bool)
        new_id = np.cumsum(keep) - 1
        e = self.edges()
        e = e[keep[e[:, 0]] & keep[e[:, 1]]]
        return Graph.from_edges(int(keep.sum()), new_id[e])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.indptr, other.indptr) and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.indptr.tobytes(), self.indices.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"


NodeMask = np.ndarray


def _check_node(g: Graph, v) -> int:
    v = int(v)
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range [0, {g.n})")
    return v


def _alive(g: Graph, removed: Optional[NodeMask]) -> np.ndarray:
    if removed is None:
        return np.ones(g.n, dtype=bool)
    removed = np.asarray(removed, dtype=bool)
    if removed.shape != (g.n,):
        raise ValueError(f"mask length {removed.shape} does not match n={g.n}")
    return ~removed


def remove_nodes(g: Graph, nodes: Iterable[int]) -> NodeMask:
    """Mask with exactly ``nodes`` removed (duplicates are harmless)."""
    idx = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= g.n):
        raise IndexError(f"node id outside [0, {g.n})")
    mask = np.zeros(g.n, dtype=bool)
    mask[idx] = True
    return mask


def degree(g: Graph, v: int) -> int:
    v = _check_node(g, v)
    return int(g.indptr[v + 1] - g.indptr[v])


def residual_degrees(g: Graph, removed: Optional[NodeMask] = None) -> np.ndarray:
    """Degrees in the induced subgraph; removed nodes report 0."""
    return _kernels.residual_degrees(g.indptr, g.indices, _alive(g, removed))


def max_degree(g: Graph, removed: Optional[NodeMask] = None) -> int:
    d = residual_degrees(g, removed)
    return int(d.max()) if d.size else 0


def neighbor_degree_sums(g: Graph, removed: Optional[NodeMask] = None) -> np.ndarray:
    alive = _alive(g, removed)
    d = _kernels.residual_degrees(g.indptr, g.indices, alive)
    return _kernels.masked_spmv(g.indptr, g.indices, alive, d)


def neighbor_degree_sum(g: Graph, v: int, removed: Optional[NodeMask] = None) -> int:
    """Sum of residual degrees over the surviving neighbors of ``v``."""
    v = _check_node(g, v)
    alive = _alive(g, removed)
    if not alive[v]:
        raise ValueError(f"node {v} has been removed")
    return int(neighbor_degree_sums(g, removed)[v])


def spectral_radius(
    g: Graph, removed: Optional[NodeMask] = None, tol: float = 1e-9, max_iter: Optional[int] = None
) -> float:
    """Largest adjacency eigenvalue of the induced subgraph.

    Power iteration on ``A + I`` from the all-ones vector; the shift keeps the
    top eigenvalue strictly dominant on bipartite graphs. Stops when two
    successive Rayleigh quotients differ by less than ``tol``; gives up after
    ``max_iter`` products (default ``10 n + 1000``).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    alive = _alive(g, removed)
    if max_degree(g, removed) == 0:
        return 0.0
    x = alive.astype(np.float64)
    x /= np.linalg.norm(x)
    cap = 10 * g.n + 1000 if max_iter is None else max_iter
    prev = -np.inf
    for _ in range(cap):
        ax = _kernels.masked_spmv(g.indptr, g.indices, alive, x)
        rq = float(x @ ax)
        if abs(rq - prev) < tol:
            return rq
        prev = rq
        y = ax + x
        x = y / np.linalg.norm(y)
    raise ConvergenceError(f"power iteration did not settle within {cap} iterations")


def walk_vectors(g: Graph, removed: Optional[NodeMask] = None) -> np.ndarray:
    """Array of shape (5, n); row k counts length-k walks starting at each node."""
    return _kernels.walk_vectors(g.indptr, g.indices, _alive(g, removed))


def count_walks4(g: Graph, removed: Optional[NodeMask] = None) -> int:
    """Number of length-4 walks (ordered 5-node sequences) in the induced subgraph."""
    w2 = walk_vectors(g, removed)[2]
    return int(w2 @ w2)


def walk_hitting_utilities(g: Graph, removed: Optional[NodeMask] = None) -> np.ndarray:
    """Per-node count of 4-walks through the node, one count per visit.

    A walk visiting ``v`` at positions i and j counts twice. The vector sums to
    ``5 * count_walks4``.
    """
    w = walk_vectors(g, removed)
    return 2 * w[4] + 2 * w[1] * w[3] + w[2] * w[2]


def walks4_through(g: Graph, v: int, removed: Optional[NodeMask] = None) -> int:
    v = _check_node(g, v)
    if not _alive(g, removed)[v]:
        raise ValueError(f"node {v} has been removed")
    return int(walk_hitting_utilities(g, removed)[v])
