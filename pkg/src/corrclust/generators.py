"""Random and structured graph generators."""

from __future__ import annotations

import numpy as np

from .errors import SpecError
from .graph import Clustering, SignedGraph, read_graph

# Above this many candidate pairs, sample edges sparsely instead of
# flipping a coin per pair.
_DENSE_PAIRS = 4_000_000


def _from_pairs(n: int, lo: np.ndarray, hi: np.ndarray) -> SignedGraph:
    return SignedGraph.from_edges(n, np.stack([lo, hi], axis=1), check=False)


def _dense_upper(rng, n: int, p: float):
    iu, iv = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return iu[keep].astype(np.int64), iv[keep].astype(np.int64)


def _sparse_pairs(rng, n: int, count: int, reject=None):
    """``count`` distinct unordered pairs, uniform among the allowed ones.

    ``reject(lo, hi)`` masks disallowed pairs.  Draws with replacement,
    dedupes, and tops up until enough distinct pairs exist; a uniform subset
    of the distinct survivors is uniform over all allowed pairs.
    """
    keys = np.zeros(0, dtype=np.int64)
    while len(keys) < count:
        need = int((count - len(keys)) * 1.1) + 16
        u = rng.integers(0, n, size=need, dtype=np.int64)
        v = rng.integers(0, n, size=need, dtype=np.int64)
        ok = u != v
        lo, hi = np.minimum(u, v)[ok], np.maximum(u, v)[ok]
        if reject is not None:
            keep = ~reject(lo, hi)
            lo, hi = lo[keep], hi[keep]
        keys = np.unique(np.concatenate([keys, lo * n + hi]))
    keys = rng.choice(keys, size=count, replace=False)
    return keys // n, keys % n


def _check_p(name: str, p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise SpecError(f"{name} must lie in [0, 1], got {p}")


def _check_n(n: int) -> None:
    if n < 0:
        raise SpecError(f"node count must be non-negative, got {n}")


def er(n: int, p: float, seed=None) -> SignedGraph:
    """Each pair is a positive edge independently with probability ``p``."""
    _check_n(n)
    _check_p("p", p)
    rng = np.random.default_rng(seed)
    pairs = n * (n - 1) // 2
    if pairs <= _DENSE_PAIRS:
        return _from_pairs(n, *_dense_upper(rng, n, p))
    count = int(rng.binomial(pairs, p))
    return _from_pairs(n, *_sparse_pairs(rng, n, count))


def planted(n: int, k: int, q: float, seed=None) -> tuple[SignedGraph, Clustering]:
    """``k`` equal ground-truth clusters; each pair disagrees with them w.p. ``q``.

    Returns the graph and the ground-truth clustering.
    """
    _check_n(n)
    _check_p("q", q)
    if k < 1 or n % k:
        raise SpecError(f"cluster count k={k} must be positive and divide n={n}")
    rng = np.random.default_rng(seed)
    label = np.arange(n, dtype=np.int64) // (n // k)
    truth = Clustering(label)
    if n * (n - 1) // 2 <= _DENSE_PAIRS:
        iu, iv = np.triu_indices(n, k=1)
        same = label[iu] == label[iv]
        prob = np.where(same, 1.0 - q, q)
        keep = rng.random(len(iu)) < prob
        return _from_pairs(n, iu[keep].astype(np.int64), iv[keep].astype(np.int64)), truth
    size = n // k
    su, sv = np.triu_indices(size, k=1)
    blocks_u, blocks_v = [], []
    for b in range(k):
        keep = rng.random(len(su)) < 1.0 - q
        blocks_u.append(su[keep] + b * size)
        blocks_v.append(sv[keep] + b * size)
    inter = n * (n - 1) // 2 - k * len(su)
    count = int(rng.binomial(inter, q))
    lo, hi = _sparse_pairs(rng, n, count, reject=lambda a, b: label[a] == label[b])
    blocks_u.append(lo)
    blocks_v.append(hi)
    lo = np.concatenate(blocks_u).astype(np.int64)
    hi = np.concatenate(blocks_v).astype(np.int64)
    return _from_pairs(n, lo, hi), truth


def complete(n: int) -> SignedGraph:
    _check_n(n)
    iu, iv = np.triu_indices(n, k=1)
    return _from_pairs(n, iu.astype(np.int64), iv.astype(np.int64))


def star(n: int) -> SignedGraph:
    """Node 0 joined to every other node."""
    _check_n(n)
    leaves = np.arange(1, max(n, 1), dtype=np.int64)
    return _from_pairs(n, np.zeros(len(leaves), dtype=np.int64), leaves)


GENERATORS = ("er", "planted", "complete", "star", "file")


def generate(kind: str, seed=None, **kw) -> SignedGraph:
    """Dispatch by name; ``planted`` drops its ground truth here."""
    try:
        if kind == "er":
            return er(int(kw["n"]), float(kw["p"]), seed)
        if kind == "planted":
            return planted(int(kw["n"]), int(kw["k"]), float(kw["q"]), seed)[0]
        if kind == "complete":
            return complete(int(kw["n"]))
        if kind == "star":
            return star(int(kw["n"]))
        if kind == "file":
            return read_graph(kw["path"])
    except KeyError as exc:
        raise SpecError(f"generator {kind!r} needs parameter {exc.args[0]!r}") from None
    raise SpecError(f"unknown generator {kind!r}; choose from {', '.join(GENERATORS)}")
