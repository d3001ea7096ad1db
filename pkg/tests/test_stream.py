import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph_and_perm, path3
from corrclust._backend import kernels
from corrclust.adversary import greedy_memory_adversary
from corrclust.errors import InvalidInputError, StreamConsumedError
from corrclust.generators import complete, er, planted
from corrclust.graph import SignedGraph
from corrclust.pivot import Permutation, TruncationParams, classic_pivot, truncated_pivot_parallel
from corrclust.stream import (
    EdgeStream,
    PublicState,
    StreamEvent,
    complete_ranks,
    fixed_order,
    random_order,
    read_replay,
    read_stream,
    replay,
    sorted_order,
    stream_adaptive,
    stream_fixed_permutation,
    write_replay,
    write_stream,
)

DESK = TruncationParams(epsilon=0.2, c=0.05)
params_st = st.builds(TruncationParams, epsilon=st.sampled_from([0.05, 0.2, 0.24]),
                      c=st.sampled_from([0.005, 0.05, 0.5, 8.0]))


def check_trace(out, n):
    tr = out.trace
    added = tr.added_per_event()
    assert set(np.unique(added).tolist()) <= {0, 1, 2}
    assert tr.final == tr.counts[-1] if len(tr.counts) else tr.final == 0
    assert tr.peak == (tr.counts.max() if len(tr.counts) else 0)
    nodes = [d[0] for d in tr.deletions]
    assert len(nodes) == len(set(nodes))
    assert tr.audit_mismatches == []


def test_huge_c_stores_everything():
    g = er(40, 0.3, 1)
    perm = Permutation.random(40, 1)
    out = stream_fixed_permutation(random_order(g, 2), 40, perm, TruncationParams.untruncated())
    assert out.trace.deletions == [] and out.trace.final == 2 * g.m
    assert (out.trace.added_per_event() == 2).all()
    assert out.clustering == classic_pivot(g, perm).clustering


@pytest.mark.parametrize("params", [DESK, TruncationParams(epsilon=0.2, c=0.01), TruncationParams()])
def test_path_all_perms_and_orders(params):
    g = path3()
    for order in itertools.permutations(range(3)):
        perm = Permutation.from_order(order)
        ref = truncated_pivot_parallel(g, perm, params).clustering
        for events in ([(0, 1), (1, 2)], [(2, 1), (1, 0)]):
            out = stream_fixed_permutation(fixed_order(events), 3, perm, params)
            assert out.clustering == ref


@settings(max_examples=80)
@given(graph_and_perm(max_n=14), params_st, st.integers(0, 1000))
def test_fixed_stream_equals_parallel(gp, params, seed):
    g, perm = gp
    ref = truncated_pivot_parallel(g, perm, params)
    sources = [random_order(g, seed), sorted_order(g),
               greedy_memory_adversary(g, params, perm=perm),
               greedy_memory_adversary(g, params, seed=seed)]
    for src in sources:
        out = stream_fixed_permutation(src, g.n, perm, params, seed=seed)
        assert out.clustering == ref.clustering
        assert np.array_equal(out.uninteresting, ref.uninteresting)
        assert np.array_equal(out.pivots, ref.pivots)
        check_trace(out, g.n)


@settings(max_examples=80)
@given(graph_and_perm(max_n=14), params_st, st.integers(0, 1000))
def test_adaptive_replay_equals_parallel(gp, params, seed):
    g, _ = gp
    for src in (random_order(g, seed), greedy_memory_adversary(g, params, seed=seed)):
        out = stream_adaptive(src, g.n, params, seed=seed)
        check_trace(out, g.n)
        if out.containment_held:
            assert out.clustering == truncated_pivot_parallel(g, out.permutation, params).clustering


def test_adaptive_nonvacuous_replay():
    # Small c makes class switches and tails frequent.
    params = TruncationParams(epsilon=0.2, c=0.01)
    held = 0
    for s in range(30):
        g = er(120, 0.3, s)
        out = stream_adaptive(greedy_memory_adversary(g, params, seed=s), g.n, params, seed=s)
        assert out.tails.any()
        if out.containment_held:
            held += 1
            assert out.clustering == truncated_pivot_parallel(g, out.permutation, params).clustering
        else:
            assert set(out.containment_violations) == set(np.flatnonzero(out.tails & ~_v_un(g, out, params)).tolist())
    assert held > 0


def _v_un(g, out, params):
    K = params.budget(g.n)
    return (g.degrees > 0) & (out.permutation.rank * g.degrees >= K)


def test_degree_class_state_invariants():
    params = TruncationParams(epsilon=0.2, c=0.01)
    g = er(200, 0.2, 3)
    out = stream_adaptive(random_order(g, 3), g.n, params, seed=3)
    dc = out.degree_classes
    assert dc.theta0 == params.theta0(g.n)
    assert np.array_equal(dc.degree, g.degrees)
    for u in range(g.n):
        assert dc.class_index[u] == dc.expected_class(int(dc.degree[u]))
        assert len(dc.partial_rank[u]) == dc.class_index[u]
        assert bool(dc.tails[u]) == ("1" in dc.partial_rank[u])
    assert dc.class_index.max() > 0
    # Dropped nodes hold no slots; everyone else holds every incident edge.
    assert out.trace.final == int(g.degrees[~dc.tails].sum())


def test_low_degree_graph_has_no_coin_flips():
    g = er(60, 0.03, 0)
    params = DESK
    assert g.degrees.max() <= params.theta0(g.n)
    for src in (random_order(g, 1), greedy_memory_adversary(g, params, seed=1)):
        out = stream_adaptive(src, g.n, params, seed=9)
        assert not out.tails.any() and (out.degree_classes.class_index == 0).all()
        assert out.trace.deletions == []


def test_fixed_errors():
    perm = Permutation.identity(3)
    with pytest.raises(InvalidInputError):
        stream_fixed_permutation([(0, 3)], 3, perm, DESK)
    with pytest.raises(InvalidInputError):
        stream_fixed_permutation([(0, 1), (1, 0)], 3, perm, DESK)
    with pytest.raises(InvalidInputError):
        stream_fixed_permutation([(0, 1)], 4, perm, DESK)
    with pytest.raises(InvalidInputError):
        stream_adaptive([(0, 1), (0, 1)], 3, DESK, seed=0)
    with pytest.raises(InvalidInputError):
        stream_adaptive([(0, 1)], 3, DESK, a=0)
    with pytest.raises(InvalidInputError):
        stream_adaptive([(0, 1)], 2**22, DESK, a=4)


def test_edge_stream_is_single_pass():
    s = EdgeStream.from_events([(0, 1), (1, 2)])
    assert [e.edge for e in s] == [(0, 1), (1, 2)]
    with pytest.raises(StreamConsumedError):
        list(s)
    s2 = fixed_order([StreamEvent((0, 1), 1)])
    stream_fixed_permutation(s2, 2, Permutation.identity(2), DESK)
    assert s2.consumed
    with pytest.raises(StreamConsumedError):
        next(iter(s2))


def test_audits_sampled_and_clean():
    g = er(300, 0.1, 5)
    out = stream_fixed_permutation(random_order(g, 5), g.n, Permutation.random(g.n, 5), DESK, seed=1)
    assert out.trace.audits == 100 and out.trace.audit_mismatches == []
    small = path3()
    out = stream_fixed_permutation(random_order(small, 0), 3, Permutation.identity(3), DESK)
    assert out.trace.audits == 2


def test_both_interesting_edge_takes_two_slots():
    g = SignedGraph.from_edges(4, [(0, 1), (2, 3)])
    out = stream_fixed_permutation(sorted_order(g), 4, Permutation.identity(4), TruncationParams())
    assert out.trace.counts.tolist() == [2, 4]
    tiny = TruncationParams(epsilon=0.2, c=0.2 * 3.5 / (4 * 2))
    out = stream_fixed_permutation(sorted_order(g), 4, Permutation.identity(4), tiny)
    # ranks 1..3 stay interesting at degree 1, rank 4 does not.
    assert out.trace.counts.tolist() == [2, 3]
    assert out.trace.deletions == [(3, 2, 0)]


def test_random_order_is_seeded_shuffle():
    g = er(50, 0.2, 0)
    a = random_order(g, 7)
    b = random_order(g, 7)
    ea, eb = [e.edge for e in a], [e.edge for e in b]
    assert ea == eb
    assert sorted(ea) == [tuple(e) for e in g.edges().tolist()]
    assert [e.edge for e in random_order(g, 8)] != ea


def test_stream_file_roundtrip_is_byte_identical(tmp_path):
    g = er(30, 0.2, 1)
    out = stream_fixed_permutation(random_order(g, 1), 30, Permutation.random(30, 1), DESK)
    p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
    write_stream(30, out.events, p1)
    n, s = read_stream(p1)
    write_stream(n, [e.edge for e in s], p2)
    assert p1.read_bytes() == p2.read_bytes()
    replayed = stream_fixed_permutation(fixed_order(p1), 30, out.permutation, DESK)
    assert replayed.clustering == out.clustering


@pytest.mark.parametrize("text", ["3 2\n0 1\n", "3 1\n0 5\n", "3 1\n0 1 2\n", "a b\n"])
def test_stream_file_rejects_bad_input(tmp_path, text):
    p = tmp_path / "s.txt"
    p.write_text(text)
    with pytest.raises(InvalidInputError):
        read_stream(p)


def test_adaptive_deterministic_per_seed_and_replayable(tmp_path):
    params = TruncationParams(epsilon=0.2, c=0.01)
    g = er(150, 0.2, 2)
    a = stream_adaptive(greedy_memory_adversary(g, params, seed=1), g.n, params, seed=11)
    b = stream_adaptive(greedy_memory_adversary(g, params, seed=1), g.n, params, seed=11)
    assert a.permutation == b.permutation and a.clustering == b.clustering
    assert np.array_equal(a.trace.counts, b.trace.counts)
    c = stream_adaptive(greedy_memory_adversary(g, params, seed=1), g.n, params, seed=12)
    assert c.permutation != a.permutation
    path = tmp_path / "replay.json"
    write_replay(a.replay_record(params, 3), path)
    r = replay(read_replay(path))
    assert r.permutation == a.permutation and r.clustering == a.clustering
    assert r.containment_violations == a.containment_violations
    fx = stream_fixed_permutation(random_order(g, 0), g.n, a.permutation, params, seed=4)
    assert replay(fx.replay_record(params)).clustering == fx.clustering


def test_complete_ranks_breaks_ties():
    bits = np.array([5, 3, 5, 5, 0], dtype=np.uint64)
    perm, tied = complete_ranks(bits, np.random.default_rng(0))
    assert tied == 3
    assert perm.rank[4] == 1 and perm.rank[1] == 2
    assert sorted(perm.rank[[0, 2, 3]].tolist()) == [3, 4, 5]
    seen = set()
    for s in range(40):
        p, _ = complete_ranks(bits, np.random.default_rng(s))
        seen.add(tuple(p.rank.tolist()))
    assert len(seen) == 6


def test_turn_by_turn_matches_batches():
    params = TruncationParams(epsilon=0.2, c=0.01)
    g = er(80, 0.3, 1)
    theta0 = params.theta0(g.n)
    bits = np.zeros(g.n, dtype=np.uint64)
    L = 3 * math.ceil(math.log2(g.n))
    ref = stream_adaptive(greedy_memory_adversary(g, params, seed=3), g.n, params, seed=0)
    state = kernels.StreamState(g.n, 1, K=params.budget(g.n), bits=_bits_of(ref, L), rank_bits=L,
                                theta0=theta0)
    public = PublicState(state, theta0)
    adv = greedy_memory_adversary(g, params, seed=3)
    while (ev := adv.next_event(public)) is not None:
        state.push(*ev.edge)
        assert ev.index == state.num_events
    assert np.array_equal(state.events()[0], ref.events[0])
    assert np.array_equal(state.events()[1], ref.events[1])


def _bits_of(outcome, L):
    # Rebuild the hidden strings from the seed exactly as the engine does.
    from corrclust.stream import _draw_bits

    ss = np.random.SeedSequence(outcome.seed)
    return _draw_bits(np.random.default_rng(ss.spawn(3)[0]), len(outcome.uninteresting), L)


def test_adversary_runs_on_planted_graph():
    g, _ = planted(200, 10, 0.05, 0)
    out = stream_adaptive(greedy_memory_adversary(g, DESK, seed=0), g.n, DESK, seed=0)
    assert len(out.events[0]) == g.m
