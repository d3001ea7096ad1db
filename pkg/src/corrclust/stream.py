"""Single-pass streaming Truncated-Pivot.

Two variants share one slot store (``kernels.StreamState``):

* ``stream_fixed_permutation``: ranks are fixed up front; a node stops
  storing edges the moment ``rank * running_degree >= K``.
* ``stream_adaptive``: ranks are unknown during the stream.  Each node
  moves through geometric degree classes ``[0, theta0], (theta0, 2*theta0], ...``
  and every class switch reveals one fair bit of its rank; a 1 bit drops
  the node (it joins the "tails" set).  Ranks are completed after the pass.

Edges come from a source object that is polled with a read-only
``PublicState`` and answers with a batch of edges, or ``None`` when done.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from ._backend import kernels
from .errors import InvalidInputError, StreamConsumedError
from .graph import Clustering, SignedGraph
from .pivot import Permutation, TruncationParams, interesting_mask

log = logging.getLogger(__name__)

AUDIT_SAMPLES = 100
DEFAULT_RANK_BITS_FACTOR = 3

_FIXED, _ADAPTIVE = 0, 1


@dataclass(frozen=True)
class StreamEvent:
    edge: tuple[int, int]
    index: int


class PublicState:
    """What an adaptive adversary may observe: running degrees and status.

    Coin flips become visible only through status changes after the edge
    that induced them; hidden rank bits are never exposed.
    """

    def __init__(self, state, theta0: int | None = None):
        self._state = state
        self.theta0 = theta0

    @property
    def n(self) -> int:
        return self._state.n

    @property
    def num_events(self) -> int:
        return self._state.num_events

    def degree(self, u: int) -> int:
        return int(self._state.degree(u))

    def is_interesting(self, u: int) -> bool:
        return not self._state.is_dead(u)

    def degrees(self) -> np.ndarray:
        return self._state.degrees()

    def interesting(self) -> np.ndarray:
        return ~self._state.dead()


class EdgeSource:
    """Base class for anything that feeds edges to a streaming run.

    ``total`` is the number of edges the source will emit (if known), used
    only to place memory audits.
    """

    total: int | None = None

    def next_batch(self, public: PublicState) -> tuple[np.ndarray, np.ndarray] | None:
        raise NotImplementedError

    def next_event(self, public: PublicState) -> StreamEvent | None:
        """One edge at a time, for callers that want strict turn-by-turn play."""
        buf = getattr(self, "_buffer", None)
        if not buf:
            batch = self.next_batch(public)
            if batch is None:
                return None
            buf = list(zip(batch[0].tolist(), batch[1].tolist()))
            buf.reverse()
            self._buffer = buf
            if not buf:
                return self.next_event(public)
        self._emitted = getattr(self, "_emitted", 0) + 1
        return StreamEvent(buf.pop(), self._emitted)


class EdgeStream(EdgeSource):
    """A recorded edge sequence that can be read exactly once."""

    def __init__(self, eu, ev):
        self._eu = np.ascontiguousarray(eu, dtype=np.int64)
        self._ev = np.ascontiguousarray(ev, dtype=np.int64)
        if self._eu.shape != self._ev.shape or self._eu.ndim != 1:
            raise InvalidInputError("edge endpoint arrays must be 1-d and equally long")
        self.total = len(self._eu)
        self._consumed = False

    @classmethod
    def from_events(cls, events: Iterable) -> "EdgeStream":
        """Accept ``StreamEvent`` objects or plain ``(u, v)`` pairs."""
        pairs = [e.edge if isinstance(e, StreamEvent) else tuple(e) for e in events]
        if not pairs:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64))
        arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    def __len__(self) -> int:
        return self.total

    @property
    def consumed(self) -> bool:
        return self._consumed

    def _take(self):
        if self._consumed:
            raise StreamConsumedError("edge stream already read; streams are single-pass")
        self._consumed = True
        return self._eu, self._ev

    def next_batch(self, public):
        if self._consumed:
            return None
        return self._take()

    def __iter__(self) -> Iterator[StreamEvent]:
        eu, ev = self._take()
        for i, (u, v) in enumerate(zip(eu.tolist(), ev.tolist()), start=1):
            yield StreamEvent((u, v), i)


def random_order(graph: SignedGraph, seed=None) -> EdgeStream:
    """Uniform shuffle of the edge list."""
    perm = np.random.default_rng(seed).permutation(graph.m)
    return EdgeStream(graph.edge_u[perm], graph.edge_v[perm])


def fixed_order(events) -> EdgeStream:
    """Replay a recorded order: a path to a stream file, events, or ``(eu, ev)``."""
    if isinstance(events, (str, Path)):
        return read_stream(events)[1]
    if isinstance(events, tuple) and len(events) == 2 and isinstance(events[0], np.ndarray):
        return EdgeStream(events[0].copy(), events[1].copy())
    return EdgeStream.from_events(events)


def sorted_order(graph: SignedGraph) -> EdgeStream:
    """Edges in lexicographic ``(u, v)`` order."""
    return EdgeStream(graph.edge_u.copy(), graph.edge_v.copy())


def _as_source(stream) -> EdgeSource:
    if isinstance(stream, EdgeSource):
        return stream
    return EdgeStream.from_events(stream)


@dataclass(frozen=True, eq=False)
class MemoryTrace:
    """Stored edge slots after every event.

    ``deletions`` lists ``(node, event, slots_freed)``; events are 1-based.
    ``audit_mismatches`` lists ``(event, running_count, recount)`` and is
    empty in a correct run.
    """

    counts: np.ndarray
    peak: int
    final: int
    deletions: list[tuple[int, int, int]]
    audits: int
    audit_mismatches: list[tuple[int, int, int]]

    def freed_per_event(self) -> np.ndarray:
        freed = np.zeros(len(self.counts), dtype=np.int64)
        for _, event, cnt in self.deletions:
            freed[event - 1] += cnt
        return freed

    def added_per_event(self) -> np.ndarray:
        prev = np.concatenate([[0], self.counts[:-1]])
        return self.counts - prev + self.freed_per_event()


@dataclass(frozen=True, eq=False)
class DegreeClassState:
    """End-of-stream degree-class bookkeeping of the adaptive variant."""

    theta0: int
    degree: np.ndarray
    class_index: np.ndarray
    partial_rank: list[str]
    tails: np.ndarray

    def expected_class(self, deg: int) -> int:
        """Smallest ``j`` with ``deg <= theta0 * 2**j``."""
        j, bound = 0, self.theta0
        while deg > bound:
            j += 1
            bound *= 2
        return j


@dataclass(frozen=True, eq=False)
class StreamOutcome:
    clustering: Clustering
    permutation: Permutation
    uninteresting: np.ndarray
    trace: MemoryTrace
    pivots: np.ndarray
    singletons: np.ndarray
    events: tuple[np.ndarray, np.ndarray]
    variant: str
    seed: int | None = None
    tails: np.ndarray | None = None
    containment_violations: list[int] = field(default_factory=list)
    tie_breaks: int = 0
    degree_classes: DegreeClassState | None = None

    @property
    def containment_held(self) -> bool:
        return not self.containment_violations

    @property
    def peak(self) -> int:
        return self.trace.peak

    def replay_record(self, params: TruncationParams, a: int | None = None) -> dict:
        return {
            "variant": self.variant,
            "n": int(len(self.uninteresting)),
            "seed": self.seed,
            "params": {"epsilon": params.epsilon, "c": params.c, "a": a},
            "permutation": self.permutation.rank.tolist(),
            "stream": np.stack(self.events, axis=1).tolist(),
            "containment_violations": list(self.containment_violations),
        }


def _audit_events(total: int | None, rng: np.random.Generator, samples: int) -> np.ndarray:
    if not total or samples <= 0:
        return np.zeros(0, dtype=np.int64)
    k = min(samples, total)
    return np.sort(rng.choice(total, size=k, replace=False) + 1).astype(np.int64)


def _drive(state, source: EdgeSource, public: PublicState) -> None:
    while True:
        batch = source.next_batch(public)
        if batch is None:
            return
        eu, ev = batch
        if len(eu):
            state.push_many(
                np.ascontiguousarray(eu, dtype=np.int64), np.ascontiguousarray(ev, dtype=np.int64)
            )


def _trace(state) -> MemoryTrace:
    return MemoryTrace(
        counts=state.trace(),
        peak=int(state.peak),
        final=int(state.slots),
        deletions=[tuple(int(x) for x in d) for d in state.deletions()],
        audits=int(state.audits_done),
        audit_mismatches=[tuple(int(x) for x in d) for d in state.audit_mismatches()],
    )


def _cluster_from_store(state, perm: Permutation, interesting: np.ndarray, K: float):
    indptr, indices = state.stored_csr()
    deg = state.degrees()
    labels, is_pivot = kernels.pivot_assign(
        indptr, indices, perm.order, perm.rank, deg, interesting.astype(np.uint8), K
    )
    is_pivot = is_pivot.astype(bool)
    singletons = (labels == np.arange(len(labels))) & ~is_pivot
    return Clustering(labels), is_pivot, singletons


def stream_fixed_permutation(
    stream,
    n: int,
    perm: Permutation,
    params: TruncationParams,
    *,
    audit_samples: int = AUDIT_SAMPLES,
    seed=None,
) -> StreamOutcome:
    """One pass with the permutation known in advance.

    ``stream`` is an ``EdgeSource`` (an ``EdgeStream``, an adversary) or an
    iterable of ``StreamEvent`` / ``(u, v)``.  ``seed`` only places audits.
    """
    if perm.n != n:
        raise InvalidInputError(f"permutation over {perm.n} nodes, stream has {n}")
    source = _as_source(stream)
    K = params.budget(n)
    audits = _audit_events(source.total, np.random.default_rng(seed), audit_samples)
    state = kernels.StreamState(n, _FIXED, K=K, rank=perm.rank, audit_events=audits)
    _drive(state, source, PublicState(state))
    interesting = ~state.dead()
    clustering, pivots, singletons = _cluster_from_store(state, perm, interesting, K)
    return StreamOutcome(
        clustering=clustering,
        permutation=perm,
        uninteresting=~interesting,
        trace=_trace(state),
        pivots=pivots,
        singletons=singletons,
        events=state.events(),
        variant="fixed",
        seed=seed if isinstance(seed, (int, type(None))) else None,
    )


def rank_bit_length(n: int, a: int) -> int:
    return a * math.ceil(math.log2(n)) if n > 1 else 0


def _draw_bits(rng: np.random.Generator, n: int, L: int) -> np.ndarray:
    if L == 0:
        return np.zeros(n, dtype=np.uint64)
    raw = rng.integers(0, np.iinfo(np.uint64).max, size=n, dtype=np.uint64, endpoint=True)
    return raw >> np.uint64(64 - L)


def complete_ranks(bits: np.ndarray, rng: np.random.Generator) -> tuple[Permutation, int]:
    """Order nodes by their rank bit strings.

    Nodes with identical strings get fresh random extension bits; an exact
    tie beyond that (probability ~2**-63) falls back to node id.  Returns the
    permutation and the number of nodes that needed the extension.
    """
    n = len(bits)
    _, inverse, counts = np.unique(bits, return_inverse=True, return_counts=True)
    tied = counts[inverse] > 1
    ext = np.zeros(n, dtype=np.int64)
    n_tied = int(tied.sum())
    if n_tied:
        ext[tied] = rng.integers(0, 2**63 - 1, size=n_tied, dtype=np.int64)
        log.info("rank tie-break fired for %d nodes", n_tied)
    order = np.lexsort((np.arange(n), ext, bits))
    return Permutation.from_order(order), n_tied


def stream_adaptive(
    stream_source,
    n: int,
    params: TruncationParams,
    a: int = DEFAULT_RANK_BITS_FACTOR,
    seed=None,
    *,
    audit_samples: int = AUDIT_SAMPLES,
) -> StreamOutcome:
    """One pass with ranks revealed bit by bit at degree-class switches.

    Every node's full rank string (``a * ceil(log2 n)`` bits) is drawn up
    front but kept inside the slot store, which reads bit ``j`` only at the
    ``j``-th class switch; the adversary sees status only.  This is
    distributionally identical to flipping the coin at switch time.
    """
    if a < 1:
        raise InvalidInputError(f"rank bit factor a must be a positive integer, got {a}")
    L = rank_bit_length(n, a)
    if L > 64:
        raise InvalidInputError(f"rank strings of {L} bits exceed 64; lower a or n")
    ss = np.random.SeedSequence(seed)
    bit_rng, tie_rng, audit_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    bits = _draw_bits(bit_rng, n, L)
    source = _as_source(stream_source)
    K = params.budget(n)
    theta0 = params.theta0(n)
    audits = _audit_events(source.total, audit_rng, audit_samples)
    state = kernels.StreamState(
        n, _ADAPTIVE, K=K, bits=bits, rank_bits=L, theta0=theta0, audit_events=audits
    )
    _drive(state, source, PublicState(state, theta0))

    perm, n_tied = complete_ranks(bits, tie_rng)
    deg = state.degrees()
    v_un = ~interesting_mask(deg, perm.rank, K)
    tails = state.dead()
    violations = np.flatnonzero(tails & ~v_un).tolist()
    if violations:
        log.warning("tails set not contained in uninteresting set: %d nodes", len(violations))
    interesting = ~(v_un | tails)
    clustering, pivots, singletons = _cluster_from_store(state, perm, interesting, K)

    switches = state.switches()
    partial = [
        format(int(b) >> (L - int(j)), f"0{int(j)}b") if j else ""
        for b, j in zip(bits.tolist(), switches.tolist())
    ]
    classes = DegreeClassState(theta0, deg, switches, partial, tails)
    return StreamOutcome(
        clustering=clustering,
        permutation=perm,
        uninteresting=v_un | tails,
        trace=_trace(state),
        pivots=pivots,
        singletons=singletons,
        events=state.events(),
        variant="adaptive",
        seed=seed if isinstance(seed, (int, type(None))) else None,
        tails=tails,
        containment_violations=violations,
        tie_breaks=n_tied,
        degree_classes=classes,
    )


def write_stream(n: int, events, path) -> None:
    """Header ``n m`` then one ``u v`` line per edge in stream order."""
    if isinstance(events, tuple) and len(events) == 2 and isinstance(events[0], np.ndarray):
        eu, ev = events
    else:
        s = EdgeStream.from_events(events)
        eu, ev = s._eu, s._ev
    lines = [f"{n} {len(eu)}"]
    lines.extend(f"{u} {v}" for u, v in zip(eu.tolist(), ev.tolist()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_stream(path) -> tuple[int, EdgeStream]:
    rows = Path(path).read_text().split("\n")
    try:
        n, m = (int(t) for t in rows[0].split())
        body = [r for r in rows[1:] if r.strip()]
        if len(body) != m:
            raise InvalidInputError(f"stream header says {m} edges, found {len(body)}")
        pairs = [tuple(int(t) for t in r.split()) for r in body]
    except ValueError as exc:
        raise InvalidInputError(f"malformed stream file {path}: {exc}") from None
    if any(len(p) != 2 for p in pairs):
        raise InvalidInputError(f"malformed stream file {path}: expected two ids per line")
    stream = EdgeStream.from_events(pairs)
    if m and (min(stream._eu.min(), stream._ev.min()) < 0 or max(stream._eu.max(), stream._ev.max()) >= n):
        raise InvalidInputError(f"stream file {path} references a node outside [0, {n})")
    return n, stream


def write_replay(record: dict, path) -> None:
    Path(path).write_text(json.dumps(record, sort_keys=True) + "\n")


def read_replay(path) -> dict:
    return json.loads(Path(path).read_text())


def replay(record: dict) -> StreamOutcome:
    """Re-run a recorded streaming run from its order, seed and params."""
    p = record["params"]
    params = TruncationParams(epsilon=p["epsilon"], c=p["c"])
    n = record["n"]
    stream = fixed_order(record["stream"])
    if record["variant"] == "adaptive":
        return stream_adaptive(stream, n, params, a=p.get("a") or DEFAULT_RANK_BITS_FACTOR, seed=record["seed"])
    perm = Permutation(np.array(record["permutation"], dtype=np.int64))
    return stream_fixed_permutation(stream, n, perm, params, seed=record["seed"])
