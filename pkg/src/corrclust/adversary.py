"""Stream orders that try to maximize the number of stored edge slots."""

from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .graph import SignedGraph
from .pivot import Permutation, TruncationParams
from .stream import EdgeSource, PublicState


def alive_capacity(deg: np.ndarray, rank: np.ndarray, K: float) -> np.ndarray:
    """Most incident edges a node can see while still interesting.

    Largest ``d <= deg`` with ``rank * d < K``.
    """
    deg = np.asarray(deg, dtype=np.int64)
    if math.isinf(K):
        return deg.copy()
    d = np.ceil(K / rank.astype(np.float64)) - 1
    d = np.clip(d, 0, deg).astype(np.int64)
    while True:
        up = (d < deg) & ((rank * (d + 1)).astype(np.float64) < K)
        down = (d > 0) & ((rank * d).astype(np.float64) >= K)
        if not (up.any() or down.any()):
            return d
        d = d + up - down


class FixedPermutationAdversary(EdgeSource):
    """Order built offline from the known permutation.

    For a rank cutoff ``P``, nodes ranked above ``P`` that can be dropped
    are pushed past their deletion threshold first, using edges among
    themselves.  Then every surviving node is filled to one edge below its
    threshold: edges to dropped nodes cost the dropped side nothing, edges
    between survivors need room on both sides.  The remaining edges follow,
    those between low-rank nodes last.  Several cutoffs are tried and the
    one storing the most slots at the end of the fill is kept; that count
    is exact, since no survivor crosses its threshold during the fill.
    """

    CUTOFFS = (1.0, 0.75, 0.5, 0.35, 0.25, 0.15)

    def __init__(self, graph: SignedGraph, perm: Permutation, params: TruncationParams,
                 cutoffs=CUTOFFS):
        self.graph = graph
        self.perm = perm
        self.params = params
        self.cutoffs = tuple(cutoffs)
        self.total = graph.m
        self.chosen_cutoff = None
        self.planned_peak = None
        self._done = False

    def _fill(self, revealed, room, unlimited, order):
        g = self.graph
        return kernels.greedy_fill(g.indptr, g.indices, g.edge_ids, revealed, room,
                                   unlimited.astype(np.uint8), order)

    def _revealed_degrees(self, revealed: np.ndarray) -> np.ndarray:
        g = self.graph
        mask = revealed.astype(bool)
        return (np.bincount(g.edge_u[mask], minlength=g.n)
                + np.bincount(g.edge_v[mask], minlength=g.n)).astype(np.int64)

    def _plan_for(self, cutoff: int, cap, deg, K):
        g = self.graph
        rank = self.perm.rank
        revealed = np.zeros(g.m, dtype=np.uint8)
        none = np.zeros(g.n, dtype=bool)
        by_rank_desc = np.argsort(-rank, kind="stable").astype(np.int64)
        victims = (rank > cutoff) & (cap < deg)
        parts = []
        if victims.any():
            room = np.where(victims, cap + 1, 0).astype(np.int64)
            parts.append(self._fill(revealed, room, none, by_rank_desc))
            rdeg = self._revealed_degrees(revealed)
            dead = (rank * rdeg).astype(np.float64) >= K
            room = np.where(victims & ~dead, cap + 1 - rdeg, 0).astype(np.int64)
            parts.append(self._fill(revealed, room, dead, by_rank_desc))
        rdeg = self._revealed_degrees(revealed)
        dead = (rank * rdeg).astype(np.float64) >= K
        keep = ~dead & ~victims
        room = np.where(keep, cap - rdeg, 0).astype(np.int64)
        parts.append(self._fill(revealed, room, none, by_rank_desc))
        parts.append(self._fill(revealed, room, dead, by_rank_desc))
        rdeg = self._revealed_degrees(revealed)
        dead = (rank * rdeg).astype(np.float64) >= K
        stored = int(rdeg[~dead].sum())
        rest = np.flatnonzero(revealed == 0)
        low = np.minimum(rank[g.edge_u[rest]], rank[g.edge_v[rest]])
        parts.append(rest[np.argsort(-low, kind="stable")])
        return np.concatenate(parts).astype(np.int64), stored

    def plan(self) -> np.ndarray:
        g = self.graph
        K = self.params.budget(g.n)
        deg = g.degrees
        cap = alive_capacity(deg, self.perm.rank, K)
        best = None
        for frac in self.cutoffs:
            cutoff = max(1, int(round(frac * g.n)))
            order, stored = self._plan_for(cutoff, cap, deg, K)
            if best is None or stored > best[1]:
                best = (order, stored, cutoff)
        order, self.planned_peak, self.chosen_cutoff = best
        return order

    def next_batch(self, public: PublicState):
        if self._done:
            return None
        self._done = True
        order = self.plan()
        return self.graph.edge_u[order], self.graph.edge_v[order]


class AdaptiveAdversary(EdgeSource):
    """Plays against the public state only (degrees and interesting status).

    Each round it first packs edges that keep live nodes inside their
    current degree class (partners either live with room, or already
    dropped), then pushes every full live node across its class boundary
    with a single edge, forcing a fresh coin.  When no live node has an
    unrevealed edge left, the remainder is emitted in one batch.
    """

    def __init__(self, graph: SignedGraph, params: TruncationParams, seed=None):
        self.graph = graph
        self.params = params
        self.theta0 = params.theta0(graph.n)
        self.total = graph.m
        self._revealed = np.zeros(graph.m, dtype=np.uint8)
        self._order = np.random.default_rng(seed).permutation(graph.n).astype(np.int64)
        self._finished = False
        self.rounds = 0

    def class_bound(self, deg: np.ndarray) -> np.ndarray:
        """Upper end ``theta0 * 2**j`` of the class containing each degree."""
        bound = np.full(len(deg), self.theta0, dtype=np.int64)
        while True:
            over = deg > bound
            if not over.any():
                return bound
            bound[over] *= 2

    def _emit(self, ids: np.ndarray):
        return self.graph.edge_u[ids], self.graph.edge_v[ids]

    def next_batch(self, public: PublicState):
        if self._finished:
            return None
        g = self.graph
        self.rounds += 1
        deg = public.degrees()
        alive = public.interesting()
        dead = (~alive).astype(np.uint8)
        room = np.where(alive, self.class_bound(deg) - deg, 0).astype(np.int64)
        order = self._order[alive[self._order]]
        fill = kernels.greedy_fill(g.indptr, g.indices, g.edge_ids, self._revealed, room, dead, order)
        if len(fill):
            return self._emit(fill)

        hidden = self._revealed == 0
        pending = np.zeros(g.n, dtype=bool)
        pending[g.edge_u[hidden]] = True
        pending[g.edge_v[hidden]] = True
        cand = order[pending[order] & (room[order] == 0)]
        if len(cand):
            cross = kernels.cross_edges(g.indptr, g.indices, g.edge_ids, self._revealed, room, dead, cand)
            if len(cross):
                return self._emit(cross)
        self._finished = True
        rest = np.flatnonzero(self._revealed == 0)
        self._revealed[rest] = 1
        return self._emit(rest)


def greedy_memory_adversary(
    graph: SignedGraph,
    params: TruncationParams,
    perm: Permutation | None = None,
    seed=None,
) -> EdgeSource:
    """Memory-maximizing edge source.

    With ``perm`` the adversary plans against that fixed permutation;
    without it, it adapts to the public state of the run it is fed into.
    Poll it through ``next_event(public)`` or ``next_batch(public)``.
    """
    if perm is not None:
        return FixedPermutationAdversary(graph, perm, params)
    return AdaptiveAdversary(graph, params, seed=seed)
