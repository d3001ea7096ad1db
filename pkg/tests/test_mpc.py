import math

import numpy as np
import pytest

from corrclust.errors import CapacityError, InvalidInputError, InvalidTopologyError
from corrclust.generators import er, planted
from corrclust.graph import SignedGraph, disagreements
from corrclust.mpc import ROUNDS, MpcTopology, measure_gstore, mpc_truncated_pivot, trial_permutations
from corrclust.pivot import Permutation, TruncationParams, interesting_mask, truncated_pivot_parallel

DESK = TruncationParams(epsilon=0.24, c=0.048)


def test_single_machine_matches_pivot_engine():
    g = er(300, 0.1, 1)
    perms = trial_permutations(g.n, 4, 9)
    rep = mpc_truncated_pivot(g, MpcTopology(1, 10**8), DESK, 4, perms=perms)
    for t, p in enumerate(perms):
        ref = truncated_pivot_parallel(g, p, DESK)
        assert np.array_equal(rep.trial_labels[t], ref.clustering.assignment)
    assert rep.selected_cost == min(rep.trial_costs)
    assert rep.clustering.assignment.tolist() == rep.trial_labels[rep.selected_trial].tolist()


@pytest.mark.parametrize("placement", ["contiguous", "hashed"])
@pytest.mark.parametrize("machines", [2, 5, 16])
@pytest.mark.parametrize("single", [False, True])
def test_costs_match_reference_and_conserve(placement, machines, single):
    for s in range(4):
        g = er(200 + 50 * s, 0.08, s)
        perms = trial_permutations(g.n, 3, s)
        topo = MpcTopology(machines, 10**8, placement, single)
        rep = mpc_truncated_pivot(g, topo, DESK, 3, perms=perms)
        assert rep.rounds == ROUNDS
        for t, p in enumerate(perms):
            ref = truncated_pivot_parallel(g, p, DESK)
            central = disagreements(g, ref.clustering)
            assert rep.trial_costs[t] == central
            assert rep.trial_cut[t] + rep.trial_negative[t] == central
        assert np.array_equal(rep.recount_resident(), rep.resident)
        assert rep.audit() == []


def test_seeded_runs_reproducible():
    g = er(150, 0.1, 0)
    a = mpc_truncated_pivot(g, MpcTopology(4, 10**7), DESK, 5, seed=3)
    b = mpc_truncated_pivot(g, MpcTopology(4, 10**7), DESK, 5, seed=3)
    assert np.array_equal(a.trial_costs, b.trial_costs) and a.ledger == b.ledger


def test_rounds_constant_across_sizes():
    rounds = set()
    for n in (256, 512, 1024, 2048):
        g, _ = planted(n, n // 32, 0.01, n)
        topo = MpcTopology.linear(n, DESK, 8)
        rounds.add(mpc_truncated_pivot(g, topo, DESK, math.ceil(math.log2(n)), seed=1).rounds)
    assert rounds == {ROUNDS}


def test_shard_overflow_is_topology_error():
    g = er(100, 0.5, 0)
    with pytest.raises(InvalidTopologyError):
        mpc_truncated_pivot(g, MpcTopology(2, 500), DESK, 1, seed=0)


def test_leader_overflow_names_trial():
    g = er(200, 0.3, 0)
    params = TruncationParams.untruncated()
    shard = max(np.bincount(MpcTopology(4, 1).owners(200), weights=1 + g.degrees))
    topo = MpcTopology(4, int(shard) + 1000, single_leader=True)
    with pytest.raises(CapacityError) as info:
        mpc_truncated_pivot(g, topo, params, 5, seed=0)
    err = info.value
    assert err.trial == 0 and err.machine == 0 and err.load > err.budget


def test_topology_validation():
    for kw in ({"machines": 0, "words": 10}, {"machines": 1, "words": 0},
               {"machines": 1, "words": 10, "placement": "random"}):
        with pytest.raises(InvalidTopologyError):
            MpcTopology(**kw)
    with pytest.raises(InvalidInputError):
        mpc_truncated_pivot(er(10, 0.5, 0), MpcTopology(1, 1000), DESK, 0)


def test_measure_gstore():
    g = er(200, 0.1, 2)
    assert measure_gstore(g, Permutation.random(200, 0), TruncationParams.untruncated()) == g.m
    assert measure_gstore(SignedGraph.from_edges(30, []), Permutation.identity(30), DESK) == 0
    perm = Permutation.random(200, 1)
    inter = interesting_mask(g.degrees, perm.rank, DESK.budget(200))
    brute = sum(1 for u, v in g.edges().tolist() if inter[u] or inter[v])
    assert measure_gstore(g, perm, DESK) == brute


def test_owners_cover_all_machines():
    topo = MpcTopology(7, 100)
    own = topo.owners(100)
    assert own.min() == 0 and own.max() == 6 and (np.diff(own) >= 0).all()
    hashed = MpcTopology(7, 100, "hashed").owners(100)
    assert set(hashed.tolist()) == set(range(7))
