"""Ground-truth oracles: exhaustive optimum and bad-triangle lower bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .graph import Clustering, SignedGraph

DEFAULT_MAX_N = 11


@dataclass(frozen=True, order=True)
class BadTriangle:
    """Triple with two positive edges and one negative pair.

    ``apex`` is the node incident to both positive edges; ``u < w`` are the
    endpoints of the negative pair.
    """

    apex: int
    u: int
    w: int

    @classmethod
    def checked(cls, graph: SignedGraph, apex: int, u: int, w: int) -> "BadTriangle":
        u, w = min(u, w), max(u, w)
        if len({apex, u, w}) != 3:
            raise InvalidInputError("bad triangle needs three distinct nodes")
        if not (graph.has_edge(apex, u) and graph.has_edge(apex, w)) or graph.has_edge(u, w):
            raise InvalidInputError(f"({apex}, {u}, {w}) is not a bad triangle")
        return cls(apex, u, w)

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset((self.apex, self.u, self.w))

    def pairs(self):
        a, u, w = self.apex, self.u, self.w
        return ((min(a, u), max(a, u)), (min(a, w), max(a, w)), (u, w))


def enumerate_bad_triangles(graph: SignedGraph) -> list[BadTriangle]:
    """All bad triangles, each reported once (the apex is unique)."""
    adj = graph.adjacency_sets()
    out = []
    for a in range(graph.n):
        nbrs = graph.neighbors(a).tolist()
        for i, u in enumerate(nbrs):
            au = adj[u]
            for w in nbrs[i + 1 :]:
                if w not in au:
                    out.append(BadTriangle(a, u, w))
    return out


def triangle_packing_lower_bound(graph: SignedGraph, seed=None) -> int:
    """Size of a greedy pair-disjoint packing of bad triangles.

    Each packed triangle forces its own disagreement, so the count never
    exceeds the optimum.  Candidates are scanned in a seeded random order.
    """
    rng = np.random.default_rng(seed)
    tris = enumerate_bad_triangles(graph)
    used: set[tuple[int, int]] = set()
    count = 0
    for idx in rng.permutation(len(tris)):
        pairs = tris[idx].pairs()
        if any(p in used for p in pairs):
            continue
        used.update(pairs)
        count += 1
    return count


def restricted_growth_strings(n: int) -> np.ndarray:
    """Every set partition of ``n`` items as a restricted growth string.

    Row ``r`` assigns item ``i`` to block ``rgs[r, i]``; block ids appear in
    order of first use, so each partition occurs exactly once.
    """
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rgs = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)  # largest block id used so far
    for _ in range(1, n):
        blocks, tops = [], []
        for b in range(int(top.max()) + 2):
            keep = top >= b - 1
            ext = np.concatenate([rgs[keep], np.full((int(keep.sum()), 1), b, np.int8)], axis=1)
            blocks.append(ext)
            tops.append(np.maximum(top[keep], b))
        rgs = np.concatenate(blocks)
        top = np.concatenate(tops).astype(np.int8)
    return rgs


def brute_force_opt(graph: SignedGraph, max_n: int = DEFAULT_MAX_N) -> tuple[int, Clustering]:
    """Exact minimum disagreements by enumerating every partition."""
    n = graph.n
    if n > max_n:
        raise InvalidInputError(
            f"brute_force_opt refuses n={n} > max_n={max_n} (Bell-number blow-up)"
        )
    rgs = restricted_growth_strings(n)
    cost = np.zeros(len(rgs), dtype=np.int64)
    adj = graph.dense()
    for u in range(n):
        for v in range(u + 1, n):
            together = rgs[:, u] == rgs[:, v]
            if adj[u, v]:
                cost += ~together
            else:
                cost += together
    best = int(np.argmin(cost))
    return int(cost[best]), Clustering(rgs[best].astype(np.int64))
