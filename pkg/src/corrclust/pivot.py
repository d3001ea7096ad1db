"""PIVOT and Truncated-Pivot clustering (parallel and sequential forms).

All threshold tests are evaluated in multiplied-out form: ``rank >= tau``
becomes ``rank * deg >= K`` and ``deg >= K / i`` becomes ``deg * i >= K``,
with ``K = (c / epsilon) * n * log2(n)``.  The two forms agree over the
reals; the product form keeps every code path on the same rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .errors import InvalidInputError
from .graph import Clustering, SignedGraph


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijective ranks ``1..n``; ``rank[u]`` is node ``u``'s position."""

    rank: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rank, dtype=np.int64)
        n = len(r)
        if r.ndim != 1 or not np.array_equal(np.sort(r), np.arange(1, n + 1)):
            raise InvalidInputError("ranks must be a bijection onto 1..n")
        object.__setattr__(self, "rank", r)

    @classmethod
    def from_order(cls, order) -> "Permutation":
        order = np.asarray(order, dtype=np.int64)
        rank = np.empty(len(order), dtype=np.int64)
        rank[order] = np.arange(1, len(order) + 1)
        return cls(rank)

    @classmethod
    def random(cls, n: int, rng) -> "Permutation":
        return cls.from_order(np.random.default_rng(rng).permutation(n))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(1, n + 1, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.rank)

    @property
    def order(self) -> np.ndarray:
        """Nodes listed by increasing rank."""
        return np.argsort(self.rank, kind="stable")

    def dumps(self) -> str:
        return " ".join(map(str, self.rank.tolist()))

    @classmethod
    def loads(cls, text: str) -> "Permutation":
        try:
            return cls(np.array([int(t) for t in text.split()], dtype=np.int64))
        except ValueError as exc:
            raise InvalidInputError(f"bad rank list: {exc}") from None

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.rank, other.rank)

    __hash__ = None


@dataclass(frozen=True)
class TruncationParams:
    """Truncation constants.  Logarithms are base 2 throughout."""

    epsilon: float = 0.2
    c: float = 8.0
    log_base: int = 2

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.25):
            raise InvalidInputError(f"epsilon must lie in (0, 1/4), got {self.epsilon}")
        if not self.c > 0:
            raise InvalidInputError(f"c must be positive, got {self.c}")
        if self.log_base != 2:
            raise InvalidInputError("only base-2 logarithms are supported")

    @classmethod
    def desk_scale(cls, epsilon: float = 0.2, c: float = 0.05) -> "TruncationParams":
        """Small ``c`` so truncation actually fires at laptop-sized ``n``."""
        return cls(epsilon=epsilon, c=c)

    @classmethod
    def untruncated(cls, epsilon: float = 0.2) -> "TruncationParams":
        return cls(epsilon=epsilon, c=math.inf)

    def budget(self, n: int) -> float:
        """``K = (c/eps) * n * log2 n``; node ``u`` is uninteresting iff ``rank*deg >= K``."""
        if n < 2 or math.isinf(self.c):
            return math.inf
        return self.c / self.epsilon * n * math.log2(n)

    def theta0(self, n: int) -> int:
        """Upper end of the first degree class, ``ceil((4c/eps) * log2 n)``."""
        if n < 2:
            return 1
        if math.isinf(self.c):
            return n + 1
        return max(1, math.ceil(4 * self.c / self.epsilon * math.log2(n)))


def tau(graph: SignedGraph, params: TruncationParams, u: int) -> float:
    """Truncation threshold of node ``u``; infinite for isolated nodes."""
    if not 0 <= u < graph.n:
        raise InvalidInputError(f"node {u} outside [0, {graph.n})")
    d = graph.degree(u)
    if d == 0:
        return math.inf
    return params.budget(graph.n) / d


def interesting_mask(deg: np.ndarray, rank: np.ndarray, K: float) -> np.ndarray:
    return (deg == 0) | ((rank * deg).astype(np.float64) < K)


def singleton_iteration(deg: int, K: float) -> float:
    """Smallest integer ``i >= 1`` with ``deg * i >= K`` (``inf`` if none)."""
    if deg == 0 or math.isinf(K):
        return math.inf
    i = max(1, math.ceil(K / deg))
    while i > 1 and deg * (i - 1) >= K:
        i -= 1
    while deg * i < K:
        i += 1
    return i


@dataclass(frozen=True, eq=False)
class PivotOutcome:
    """Result of a pivot run.

    ``pivots``, ``uninteresting`` and ``singletons`` are boolean node masks.
    ``iteration`` (sequential runs only) gives, per node, the iteration in
    which its cluster was created.
    """

    clustering: Clustering
    pivots: np.ndarray
    uninteresting: np.ndarray
    singletons: np.ndarray
    iteration: np.ndarray | None = None

    @property
    def pivot_nodes(self) -> set[int]:
        return set(np.flatnonzero(self.pivots).tolist())

    @property
    def singleton_nodes(self) -> set[int]:
        return set(np.flatnonzero(self.singletons).tolist())

    def to_dict(self) -> dict:
        out = {
            "clusters": self.clustering.assignment.tolist(),
            "pivot": self.pivots.astype(int).tolist(),
            "singleton": self.singletons.astype(int).tolist(),
            "uninteresting": self.uninteresting.astype(int).tolist(),
        }
        if self.iteration is not None:
            out["iteration"] = self.iteration.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PivotOutcome":
        it = data.get("iteration")
        return cls(
            Clustering(np.array(data["clusters"], dtype=np.int64)),
            np.array(data["pivot"], dtype=bool),
            np.array(data["uninteresting"], dtype=bool),
            np.array(data["singleton"], dtype=bool),
            None if it is None else np.array(it, dtype=np.int64),
        )


def _check_perm(graph: SignedGraph, perm: Permutation) -> None:
    if perm.n != graph.n:
        raise InvalidInputError(f"permutation over {perm.n} nodes, graph has {graph.n}")


def _assign(indptr, indices, perm, deg, interesting, K) -> PivotOutcome:
    labels, is_pivot = kernels.pivot_assign(
        indptr, indices, perm.order, perm.rank, deg, interesting.astype(np.uint8), K
    )
    is_pivot = is_pivot.astype(bool)
    n = len(labels)
    singletons = (labels == np.arange(n)) & ~is_pivot
    return PivotOutcome(Clustering(labels), is_pivot, ~interesting, singletons)


def classic_pivot(graph: SignedGraph, perm: Permutation) -> PivotOutcome:
    """Randomized greedy-MIS PIVOT: every node ends up in a pivot cluster."""
    _check_perm(graph, perm)
    everyone = np.ones(graph.n, dtype=bool)
    return _assign(graph.indptr, graph.indices, perm, graph.degrees, everyone, math.inf)


def truncated_pivot_parallel(
    graph: SignedGraph, perm: Permutation, params: TruncationParams
) -> PivotOutcome:
    """Greedy MIS on the interesting nodes, guarded joins, rest singletons."""
    _check_perm(graph, perm)
    K = params.budget(graph.n)
    deg = graph.degrees
    interesting = interesting_mask(deg, perm.rank, K)
    return _assign(graph.indptr, graph.indices, perm, deg, interesting, K)


def truncated_pivot_sequential(
    graph: SignedGraph, perm: Permutation, params: TruncationParams
) -> PivotOutcome:
    """Iterate the permutation, retiring high-degree nodes as singletons first.

    At iteration ``i`` every active node with ``deg * i >= K`` becomes a
    singleton; then the ``i``-th node, if still active, forms a cluster with
    its active neighbors.  Degrees are the initial degrees throughout.
    """
    _check_perm(graph, perm)
    n = graph.n
    K = params.budget(n)
    deg = graph.degrees.tolist()
    due: dict[int, list[int]] = {}
    for v in range(n):
        i = singleton_iteration(deg[v], K)
        if i <= n:
            due.setdefault(int(i), []).append(v)
    indptr = graph.indptr.tolist()
    indices = graph.indices.tolist()
    active = [True] * n
    labels = list(range(n))
    iteration = [0] * n
    is_pivot = [False] * n
    single = [False] * n
    for i, u in enumerate(perm.order.tolist(), start=1):
        for v in due.get(i, ()):
            if active[v]:
                active[v] = False
                single[v] = True
                iteration[v] = i
        if not active[u]:
            continue
        active[u] = False
        is_pivot[u] = True
        iteration[u] = i
        for w in indices[indptr[u] : indptr[u + 1]]:
            if active[w]:
                active[w] = False
                labels[w] = u
                iteration[w] = i
    rank = perm.rank
    uninteresting = ~interesting_mask(graph.degrees, rank, K)
    return PivotOutcome(
        Clustering(np.array(labels, dtype=np.int64)),
        np.array(is_pivot),
        uninteresting,
        np.array(single),
        np.array(iteration, dtype=np.int64),
    )


def classify_singleton_edges(
    graph: SignedGraph, outcome: PivotOutcome
) -> tuple[set[tuple[int, int]], set[tuple[int, int]]]:
    """Split positive edges at singleton clusters into (good, bad).

    An edge at singleton ``u`` (created in iteration ``i``) is good when its
    other endpoint joined a pivot cluster in an iteration ``j < i``.
    """
    if outcome.iteration is None:
        raise InvalidInputError("outcome lacks iteration records; use truncated_pivot_sequential")
    it = outcome.iteration
    single = outcome.singletons
    good: set[tuple[int, int]] = set()
    bad: set[tuple[int, int]] = set()
    for u, v in zip(graph.edge_u.tolist(), graph.edge_v.tolist()):
        su, sv = single[u], single[v]
        if not (su or sv):
            continue
        if su and sv:
            bad.add((u, v))
        elif su:
            (good if it[v] < it[u] else bad).add((u, v))
        else:
            (good if it[u] < it[v] else bad).add((u, v))
    return good, bad


def monte_carlo_costs(
    graph: SignedGraph, orders: np.ndarray, params: TruncationParams | None = None
) -> np.ndarray:
    """Disagreements for each permutation (row of node orders) in one kernel call."""
    K = math.inf if params is None else params.budget(graph.n)
    orders = np.ascontiguousarray(orders, dtype=np.int64)
    return kernels.batch_pivot_costs(
        graph.indptr, graph.indices, graph.edge_u, graph.edge_v, graph.degrees, orders, K
    )


def write_permutation(perm: Permutation, path) -> None:
    Path(path).write_text(perm.dumps() + "\n")


def read_permutation(path) -> Permutation:
    return Permutation.loads(Path(path).read_text())
