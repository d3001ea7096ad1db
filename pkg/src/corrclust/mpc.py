"""Round-by-round simulator of linear-space MPC Truncated-Pivot.

Each node lives on one machine together with its adjacency list.  A run
executes ``trials`` independent permutations in the same six rounds:

1. every machine derives the shared per-trial permutations, flags its
   interesting nodes, and ships their adjacency rows (the G_store rows) to
   the trial's leader;
2. each leader runs the greedy MIS on the rows it received and broadcasts
   the pivot ids;
3. machines label their own nodes (earliest adjacent pivot, subject to the
   join guard) and send each label to the machines that own a neighbor
   with a smaller id;
4. machines count cut edges they own (an edge belongs to its lower-id
   endpoint) plus per-cluster size and internal-edge partials, and send
   them to the leader, which turns sizes into negative-pair counts;
5. leaders send trial costs to the selector (machine 0);
6. the selector broadcasts the winning trial.

Words: one per node id, label, count or adjacency entry.  Resident memory
at a round boundary is the machine's shard, the state it retains, and the
payload it received in that round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import CapacityError, InvalidInputError, InvalidTopologyError
from .graph import Clustering, SignedGraph
from .pivot import Permutation, TruncationParams, interesting_mask

ROUNDS = 6
SELECTOR = 0
PLACEMENTS = ("contiguous", "hashed")


@dataclass(frozen=True)
class MpcTopology:
    """``machines`` machines with ``words`` words each.

    ``single_leader`` sends every trial to machine 0 instead of spreading
    trials over machines round-robin.
    """

    machines: int
    words: int
    placement: str = "contiguous"
    single_leader: bool = False

    def __post_init__(self):
        if self.machines < 1:
            raise InvalidTopologyError(f"need at least one machine, got {self.machines}")
        if self.words < 1:
            raise InvalidTopologyError(f"word budget must be positive, got {self.words}")
        if self.placement not in PLACEMENTS:
            raise InvalidTopologyError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")

    def owners(self, n: int) -> np.ndarray:
        ids = np.arange(n, dtype=np.int64)
        if self.placement == "contiguous":
            return ids * self.machines // max(n, 1)
        return ((ids * 2654435761) % (1 << 32)) % self.machines

    def leader(self, trial: int) -> int:
        return 0 if self.single_leader else trial % self.machines

    @classmethod
    def linear(cls, n: int, params: TruncationParams, machines: int, factor: float = 64.0,
               **kw) -> "MpcTopology":
        """Budget ``factor * (c/eps) * n * log2 n`` words per machine."""
        return cls(machines, int(math.ceil(factor * params.budget(n))), **kw)


@dataclass(frozen=True)
class MpcMessage:
    round: int
    src: int
    dst: int
    trial: int
    kind: str
    words: int


@dataclass(eq=False)
class MpcRunReport:
    rounds: int
    machines: int
    budget: int
    trial_costs: np.ndarray
    trial_cut: np.ndarray
    trial_negative: np.ndarray
    trial_labels: np.ndarray
    gstore_words: np.ndarray
    selected_trial: int
    clustering: Clustering
    shard_words: np.ndarray
    retained: np.ndarray
    resident: np.ndarray
    ledger: list[MpcMessage] = field(repr=False)

    @property
    def peak_words(self) -> int:
        return int(self.resident.max()) if self.resident.size else 0

    @property
    def selected_cost(self) -> int:
        return int(self.trial_costs[self.selected_trial])

    def recount_resident(self) -> np.ndarray:
        """Resident words per (round, machine), rebuilt from the ledger alone."""
        received = np.zeros_like(self.resident)
        for msg in self.ledger:
            received[msg.round - 1, msg.dst] += msg.words
        return self.shard_words[None, :] + self.retained + received

    def audit(self) -> list[tuple[int, int, int]]:
        """``(round, machine, words)`` for every boundary above the budget."""
        res = self.recount_resident()
        return [(r + 1, m, int(res[r, m])) for r, m in zip(*np.nonzero(res > self.budget))]

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "machines": self.machines,
            "budget": self.budget,
            "peak_words": self.peak_words,
            "trial_costs": self.trial_costs.tolist(),
            "gstore_words": self.gstore_words.tolist(),
            "selected_trial": self.selected_trial,
            "selected_cost": self.selected_cost,
        }


def measure_gstore(graph: SignedGraph, perm: Permutation, params: TruncationParams) -> int:
    """Number of edges with at least one interesting endpoint."""
    if perm.n != graph.n:
        raise InvalidInputError(f"permutation over {perm.n} nodes, graph has {graph.n}")
    inter = interesting_mask(graph.degrees, perm.rank, params.budget(graph.n))
    return int(np.count_nonzero(inter[graph.edge_u] | inter[graph.edge_v]))


def trial_permutations(n: int, trials: int, seed) -> list[Permutation]:
    """The shared per-trial permutations every machine derives from ``seed``."""
    rng = np.random.default_rng(seed)
    return [Permutation.random(n, rng) for _ in range(trials)]


def _store_csr(graph: SignedGraph, interesting: np.ndarray):
    deg = graph.degrees
    row = np.repeat(np.arange(graph.n), deg)
    keep = interesting[row]
    counts = np.where(interesting, deg, 0)
    indptr = np.zeros(graph.n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, np.ascontiguousarray(graph.indices[keep])


def _labels_from_pivots(graph, rank, deg, is_pivot, K) -> np.ndarray:
    """Each machine's local rule: earliest adjacent pivot if the guard allows."""
    n = graph.n
    row = np.repeat(np.arange(n), deg)
    hit = is_pivot[graph.indices]
    r, p = row[hit], graph.indices[hit]
    best_rank = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(best_rank, r, rank[p])
    labels = np.arange(n, dtype=np.int64)
    has = (best_rank < np.iinfo(np.int64).max) & ~is_pivot
    order = np.argsort(rank)
    cand = np.where(has, order[np.minimum(best_rank, n) - 1], -1)
    join = has & ((best_rank * deg).astype(np.float64) < K)
    labels[join] = cand[join]
    return labels


def mpc_truncated_pivot(
    graph: SignedGraph,
    topo: MpcTopology,
    params: TruncationParams,
    trials: int,
    seed=None,
    *,
    perms: list[Permutation] | None = None,
) -> MpcRunReport:
    """Simulate the six-round protocol; see the module docstring."""
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    n, M, S = graph.n, topo.machines, topo.words
    if perms is None:
        perms = trial_permutations(n, trials, seed)
    if len(perms) != trials or any(p.n != n for p in perms):
        raise InvalidInputError("need one permutation over the graph's nodes per trial")
    K = params.budget(n)
    deg = graph.degrees
    owner = topo.owners(n)
    owned = np.bincount(owner, minlength=M).astype(np.int64)
    shard = np.bincount(owner, weights=1 + deg, minlength=M).astype(np.int64)
    if shard.max(initial=0) > S:
        m = int(np.argmax(shard))
        raise InvalidTopologyError(
            f"machine {m} shard needs {int(shard[m])} words, budget is {S}"
        )

    ledger: list[MpcMessage] = []
    retained = np.zeros((ROUNDS, M), dtype=np.int64)
    received = np.zeros((ROUNDS, M), dtype=np.int64)

    def send(rnd, src, dst, trial, kind, words):
        words = int(words)
        if words > 0:
            ledger.append(MpcMessage(rnd, int(src), int(dst), trial, kind, words))
            received[rnd - 1, dst] += words

    def barrier(rnd, trial_of_load=None):
        res = shard + retained[rnd - 1] + received[rnd - 1]
        over = np.flatnonzero(res > S)
        if len(over):
            m = int(over[0])
            trial = None if trial_of_load is None else trial_of_load.get(m)
            raise CapacityError(
                f"round {rnd}: machine {m} holds {int(res[m])} words, budget {S}"
                + ("" if trial is None else f" (overflow reached at trial {trial})"),
                trial=trial, machine=m, load=int(res[m]), budget=S,
            )

    eu, ev = graph.edge_u, graph.edge_v
    leaders = [topo.leader(t) for t in range(trials)]

    # Round 1: G_store rows to leaders.
    interesting = [interesting_mask(deg, p.rank, K) for p in perms]
    gstore = np.zeros(trials, dtype=np.int64)
    first_over: dict[int, int] = {}
    for t, inter in enumerate(interesting):
        per_machine = np.bincount(owner[inter], weights=(1 + deg)[inter], minlength=M)
        gstore[t] = int(deg[inter].sum())
        for m in np.flatnonzero(per_machine):
            send(1, m, leaders[t], t, "gstore", per_machine[m])
        ld = leaders[t]
        if ld not in first_over and shard[ld] + received[0, ld] > S:
            first_over[ld] = t
    barrier(1, first_over)

    # Round 2: leaders run the greedy MIS and broadcast pivots.
    pivots = []
    for t, (perm, inter) in enumerate(zip(perms, interesting)):
        indptr, indices = _store_csr(graph, inter)
        _, is_pivot = kernels.pivot_assign(
            indptr, indices, perm.order, perm.rank, deg, inter.astype(np.uint8), K
        )
        is_pivot = is_pivot.astype(bool)
        pivots.append(is_pivot)
        for m in range(M):
            send(2, leaders[t], m, t, "pivots", is_pivot.sum())
    barrier(2)

    # Round 3: local labels, then labels to lower-id neighbors' machines.
    labels = np.stack(
        [_labels_from_pivots(graph, p.rank, deg, piv, K) for p, piv in zip(perms, pivots)]
    ) if trials else np.zeros((0, n), dtype=np.int64)
    cross = owner[eu] != owner[ev]
    pairs = np.unique(ev[cross] * M + owner[eu[cross]])
    src3 = owner[pairs // M]
    dst3 = pairs % M
    flow = np.zeros((M, M), dtype=np.int64)
    np.add.at(flow, (src3, dst3), 2)
    retained[2] = trials * owned
    for t in range(trials):
        for a, b in zip(*np.nonzero(flow)):
            send(3, a, b, t, "labels", flow[a, b])
    barrier(3)

    # Round 4: cost partials to leaders.
    cut_total = np.zeros(trials, dtype=np.int64)
    neg_total = np.zeros(trials, dtype=np.int64)
    lo_owner = owner[eu]
    for t in range(trials):
        lab = labels[t]
        same = lab[eu] == lab[ev]
        cut_per_m = np.bincount(lo_owner[~same], minlength=M)
        keys, inv = np.unique(owner * n + lab, return_inverse=True)
        part_size = np.bincount(inv, minlength=len(keys))
        part_inner = np.zeros(len(keys), dtype=np.int64)
        inner_keys = lo_owner[same] * n + lab[eu[same]]
        np.add.at(part_inner, np.searchsorted(keys, inner_keys), 1)
        part_machine = keys // n
        part_label = keys % n
        words = 1 + 3 * np.bincount(part_machine, minlength=M)
        for m in range(M):
            send(4, m, leaders[t], t, "partials", words[m])
        # Leader-side aggregation.
        size = np.bincount(part_label, weights=part_size, minlength=n).astype(np.int64)
        inner = np.bincount(part_label, weights=part_inner, minlength=n).astype(np.int64)
        cut_total[t] = int(cut_per_m.sum())
        neg_total[t] = int((size * (size - 1) // 2 - inner).sum())
    retained[3] = trials * owned
    barrier(4)

    # Round 5: trial costs to the selector.
    costs = cut_total + neg_total
    for t in range(trials):
        send(5, leaders[t], SELECTOR, t, "cost", 2)
    retained[4] = trials * owned
    barrier(5)

    # Round 6: broadcast the winner.
    best = int(np.argmin(costs))
    for m in range(M):
        send(6, SELECTOR, m, best, "winner", 1)
    retained[5] = owned
    barrier(6)

    return MpcRunReport(
        rounds=ROUNDS,
        machines=M,
        budget=S,
        trial_costs=costs,
        trial_cut=cut_total,
        trial_negative=neg_total,
        trial_labels=labels,
        gstore_words=gstore,
        selected_trial=best,
        clustering=Clustering(labels[best].copy()),
        shard_words=shard,
        retained=retained,
        resident=shard[None, :] + retained + received,
        ledger=ledger,
    )
