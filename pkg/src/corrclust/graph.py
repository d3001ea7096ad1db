"""Signed graphs with implicit negative edges, clusterings and their cost."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class SignedGraph:
    """Complete signed graph on nodes ``0..n-1`` stored by its positive edges.

    Every pair that is not a positive edge is an (implicit) negative edge.
    Adjacency is kept in CSR form with sorted neighbor lists; ``edge_u`` and
    ``edge_v`` list each positive edge once with ``edge_u < edge_v``.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    # edge id of every CSR entry, aligned with ``indices``
    edge_ids: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges, *, check: bool = True) -> "SignedGraph":
        n = int(n)
        if n < 0:
            raise InvalidInputError(f"node count must be non-negative, got {n}")
        arr = np.asarray(edges, dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, 2), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise InvalidInputError("edges must be a sequence of (u, v) pairs")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        if check:
            if np.any(lo == hi):
                i = int(np.flatnonzero(lo == hi)[0])
                raise InvalidInputError(f"self-loop at node {int(lo[i])}")
            if len(arr) and (lo.min() < 0 or hi.max() >= n):
                raise InvalidInputError(f"edge endpoint outside [0, {n})")
        order = np.lexsort((hi, lo))
        lo, hi = lo[order], hi[order]
        if check and len(lo) > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if dup.any():
                i = int(np.flatnonzero(dup)[0])
                raise InvalidInputError(f"duplicate edge ({int(lo[i])}, {int(hi[i])})")
        return cls._build(n, lo, hi)

    @classmethod
    def _build(cls, n, lo, hi):
        m = len(lo)
        eids = np.arange(m, dtype=np.int64)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        ids = np.concatenate([eids, eids])
        order = np.lexsort((dst, src))
        src, dst, ids = src[order], dst[order], ids[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(
            n,
            indptr,
            np.ascontiguousarray(dst, dtype=np.int64),
            np.ascontiguousarray(lo, dtype=np.int64),
            np.ascontiguousarray(hi, dtype=np.int64),
            np.ascontiguousarray(ids, dtype=np.int64),
        )

    @property
    def m(self) -> int:
        return len(self.edge_u)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def edges(self) -> np.ndarray:
        return np.stack([self.edge_u, self.edge_v], axis=1)

    def adjacency_sets(self) -> list[set[int]]:
        return [set(self.neighbors(u).tolist()) for u in range(self.n)]

    def dense(self) -> np.ndarray:
        """Boolean positive-adjacency matrix; only sensible for small n."""
        a = np.zeros((self.n, self.n), dtype=bool)
        a[self.edge_u, self.edge_v] = True
        a[self.edge_v, self.edge_u] = True
        return a

    def __repr__(self) -> str:
        return f"SignedGraph(n={self.n}, m={self.m})"


def disjoint_union(*graphs: SignedGraph) -> SignedGraph:
    offset = 0
    parts = []
    for g in graphs:
        parts.append(g.edges() + offset)
        offset += g.n
    edges = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
    return SignedGraph.from_edges(offset, edges)


@dataclass(frozen=True, eq=False)
class Clustering:
    """A partition of the nodes, one cluster id per node."""

    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1:
            raise InvalidInputError("cluster assignment must be one-dimensional")
        if len(a) and a.min() < 0:
            raise InvalidInputError("cluster ids must be non-negative")
        object.__setattr__(self, "assignment", a)

    @classmethod
    def from_clusters(cls, n: int, clusters) -> "Clustering":
        a = np.full(n, -1, dtype=np.int64)
        for cid, members in enumerate(clusters):
            for u in members:
                if a[u] != -1:
                    raise InvalidInputError(f"node {u} appears in two clusters")
                a[u] = cid
        if np.any(a < 0):
            raise InvalidInputError("clusters do not cover every node")
        return cls(a)

    @classmethod
    def singletons(cls, n: int) -> "Clustering":
        return cls(np.arange(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.assignment)

    def canonical(self) -> np.ndarray:
        """Relabel clusters 0..k-1 in order of first appearance."""
        _, first, inverse = np.unique(self.assignment, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        return rank[inverse.reshape(-1)]

    @property
    def num_clusters(self) -> int:
        return len(np.unique(self.assignment))

    def clusters(self) -> list[list[int]]:
        canon = self.canonical()
        out: list[list[int]] = [[] for _ in range(int(canon.max()) + 1 if len(canon) else 0)]
        for u, c in enumerate(canon.tolist()):
            out[c].append(u)
        return out

    def same_partition(self, other: "Clustering") -> bool:
        return self.n == other.n and bool(np.array_equal(self.canonical(), other.canonical()))

    def __eq__(self, other):
        if not isinstance(other, Clustering):
            return NotImplemented
        return self.same_partition(other)

    __hash__ = None


def disagreements(graph: SignedGraph, clustering: Clustering) -> int:
    """Cut positive edges plus non-edge pairs placed in a common cluster.

    Negative pairs are never enumerated: a cluster of size ``s`` holding ``k``
    positive edges contributes ``s*(s-1)/2 - k``.
    """
    labels = clustering.assignment
    if len(labels) != graph.n:
        raise InvalidInputError(
            f"clustering covers {len(labels)} nodes but graph has {graph.n}"
        )
    if graph.n == 0:
        return 0
    _, dense = np.unique(labels, return_inverse=True)
    dense = dense.reshape(-1)
    lu = dense[graph.edge_u]
    lv = dense[graph.edge_v]
    inside = lu == lv
    cut = int(graph.m - np.count_nonzero(inside))
    sizes = np.bincount(dense)
    internal_pos = np.bincount(lu[inside], minlength=len(sizes))
    neg = int(np.sum(sizes * (sizes - 1) // 2 - internal_pos))
    return cut + neg


def read_graph(path) -> SignedGraph:
    """Parse ``n m`` followed by ``m`` lines ``u v`` (0-based, u < v)."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise InvalidInputError(f"{path}: missing 'n m' header")
    try:
        n, m = int(lines[0][0]), int(lines[0][1])
        edges = [(int(a), int(b)) for a, b in lines[1:]]
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    if len(edges) != m:
        raise InvalidInputError(f"{path}: header announces {m} edges, found {len(edges)}")
    for u, v in edges:
        if u >= v:
            raise InvalidInputError(f"{path}: edge ({u}, {v}) must satisfy u < v")
    return SignedGraph.from_edges(n, edges)


def write_graph(graph: SignedGraph, path) -> None:
    rows = [f"{graph.n} {graph.m}"]
    rows.extend(f"{u} {v}" for u, v in zip(graph.edge_u.tolist(), graph.edge_v.tolist()))
    Path(path).write_text("\n".join(rows) + "\n")
