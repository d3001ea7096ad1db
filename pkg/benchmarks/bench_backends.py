"""Time the compiled kernels against their pure-Python twins.

    python3 benchmarks/bench_backends.py --n 2000 --d 40 --repeat 3
"""

import argparse
import time

import numpy as np

from corrclust import _fallback
from corrclust.generators import er
from corrclust.pivot import Permutation, TruncationParams

try:
    from corrclust import _core
except ImportError:
    _core = None


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(graph, params, trials, seed):
    rng = np.random.default_rng(seed)
    perm = Permutation.random(graph.n, rng)
    K = params.budget(graph.n)
    deg = graph.degrees
    inter = ((deg == 0) | (perm.rank * deg < K)).astype(np.uint8)
    orders = np.stack([rng.permutation(graph.n) for _ in range(trials)]).astype(np.int64)
    stream_order = rng.permutation(graph.m)
    eu, ev = graph.edge_u[stream_order], graph.edge_v[stream_order]

    def pivot(k):
        return lambda: k.pivot_assign(graph.indptr, graph.indices, perm.order, perm.rank, deg, inter, K)

    def costs(k):
        return lambda: k.batch_pivot_costs(graph.indptr, graph.indices, graph.edge_u, graph.edge_v,
                                           deg, orders, K)

    def stream(k):
        def go():
            st = k.StreamState(graph.n, 0, K=K, rank=perm.rank)
            st.push_many(eu, ev)
        return go

    def fill(k):
        def go():
            k.greedy_fill(graph.indptr, graph.indices, graph.edge_ids, np.zeros(graph.m, np.uint8),
                          np.full(graph.n, 10, np.int64), np.zeros(graph.n, np.uint8),
                          np.arange(graph.n, dtype=np.int64))
        return go

    return {"pivot_assign": pivot, "batch_pivot_costs": costs, "stream_push": stream, "greedy_fill": fill}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=float, default=40.0, help="expected degree")
    ap.add_argument("--trials", type=int, default=20, help="permutations for batch_pivot_costs")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    graph = er(args.n, min(1.0, args.d / max(args.n - 1, 1)), args.seed)
    params = TruncationParams(epsilon=0.2, c=0.05)
    print(f"graph n={graph.n} m={graph.m}")
    print(f"{'kernel':<20}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for name, make in cases(graph, params, args.trials, args.seed).items():
        py = _best(make(_fallback), args.repeat)
        if _core is None:
            print(f"{name:<20}{py:>12.4f}{'n/a':>12}{'':>10}")
            continue
        cc = _best(make(_core), args.repeat)
        print(f"{name:<20}{py:>12.4f}{cc:>12.4f}{py / cc:>9.1f}x")


if __name__ == "__main__":
    main()
