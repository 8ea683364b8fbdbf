import math

import numpy as np
import pytest

from halosim.batching import (
    Batch,
    estimate_batch_memory,
    estimate_memory,
    plan_cobatch,
    plan_minibatch_baseline,
)
from halosim.costmodel import ModelSpec
from halosim.errors import CapacityError, InputError
from halosim.extract import SamplingConfig, extract_full, extract_sampled
from halosim.graph import build_graph, gen_planted_partition_graph, gen_random_graph
from halosim.partition import Partition, hierarchical_partition

from conftest import all_pairs_hops

MODEL1 = ModelSpec(layers=1, hidden_dim=64, feature_dim=64)


def mfg_oracle(dist, targets, layers):
    """Per-layer counts from distances: layer l needs vertices within L-l hops."""
    d = dist[targets].min(axis=0) if len(targets) else np.full(dist.shape[0], np.inf)
    return tuple(int(np.count_nonzero(d <= layers - l)) for l in range(layers + 1))


def check_plan(plan, targets, layers):
    got = np.sort(np.concatenate([b.target_vertices for b in plan.batches]))
    assert np.array_equal(got, np.sort(targets))
    assert len(plan.batches) == plan.R
    for b in plan.batches:
        c = b.mfg_vertices_per_layer
        assert len(c) == layers + 1
        assert all(x >= y for x, y in zip(c, c[1:]))
        assert c[-1] == b.target_vertices.size


def test_memory_formula():
    m = ModelSpec(layers=3, hidden_dim=64, feature_dim=64)
    assert estimate_memory((100, 100, 100, 100), m) == 102_400
    assert estimate_memory((0, 0, 0, 0), m) == 0
    wide = ModelSpec(layers=3, hidden_dim=128, feature_dim=64)
    assert estimate_memory((100,) * 4, wide) - 100 * 64 * 4 == 2 * (102_400 - 100 * 64 * 4)
    b = Batch(np.array([], dtype=np.int64), np.array([], dtype=np.int64),
              np.array([], dtype=np.int64), (0, 0, 0, 0), 0)
    assert estimate_batch_memory(b, m) == 0


def path_server():
    g = build_graph([(0, 1), (1, 2), (2, 3)], 4)
    sp = Partition(np.array([0, 0, 1, 1]), 2)
    return g, sp, extract_full(g, sp, 0, 1)


def test_fits_gives_single_batch():
    g, _, sub = path_server()
    plan = plan_cobatch(sub, g, 1, None, math.inf, MODEL1)
    assert plan.R == 1
    assert plan.batches[0].vertices.tolist() == [0, 1, 2]
    assert plan.batches[0].mfg_vertices_per_layer == (3, 2)


def test_tight_budget_splits_path_server():
    g, _, sub = path_server()
    full = plan_cobatch(sub, g, 1, None, math.inf, MODEL1).max_memory_bytes
    assert full == 5 * 256
    # singleton batches need (2 + 1) and (3 + 1) vectors
    plan = plan_cobatch(sub, g, 1, None, 4 * 256, MODEL1)
    assert plan.R == 2
    assert sorted(b.target_vertices.tolist() for b in plan.batches) == [[0], [1]]
    with pytest.raises(CapacityError) as err:
        plan_cobatch(sub, g, 1, None, full / 2, MODEL1)
    assert err.value.vertex == 1


def test_cobatch_counts_match_oracle():
    g = gen_random_graph(300, 5, 1)
    sp, _ = hierarchical_partition(g, 2, 2)
    dist = all_pairs_hops(g)
    L = 2
    model = ModelSpec(layers=L, hidden_dim=16, feature_dim=8)
    sub = extract_full(g, sp, 0, L)
    plan = plan_cobatch(sub, g, L, None, 20_000, model)
    check_plan(plan, sub.inner_vertices, L)
    for b in plan.batches:
        # unsampled closure inside the L-hop server subgraph equals the global one
        assert b.mfg_vertices_per_layer == mfg_oracle(dist, b.target_vertices, L)
        assert b.est_memory_bytes <= 20_000
    assert plan.R > 1


def test_monotone_R():
    g = gen_random_graph(400, 6, 2)
    sp, _ = hierarchical_partition(g, 2, 1)
    model = ModelSpec(layers=2, hidden_dim=16, feature_dim=16)
    sub = extract_full(g, sp, 1, 2)
    last = 0
    for budget in (1e9, 4e5, 2e5, 1e5, 5e4, 3e4):
        R = plan_cobatch(sub, g, 2, None, budget, model).R
        assert R >= last
        last = R


def test_forced_batches_and_bad_budget():
    g, _, sub = path_server()
    assert plan_cobatch(sub, g, 1, None, math.inf, MODEL1, batches=2).R == 2
    with pytest.raises(InputError):
        plan_cobatch(sub, g, 1, None, 0, MODEL1)
    with pytest.raises(InputError):
        plan_cobatch(sub, g, 1, None, math.inf, MODEL1, batches=3)


def test_sampled_batches_stay_inside_server_subgraph():
    g = gen_random_graph(500, 8, 3)
    sp, _ = hierarchical_partition(g, 2, 2)
    cfg = SamplingConfig(1, 3, 7)
    sub = extract_sampled(g, sp, 0, cfg)
    plan = plan_cobatch(sub, g, 3, cfg, 1e5, ModelSpec(layers=3, hidden_dim=16, feature_dim=16))
    allowed = set(sub.vertices.tolist())
    for b in plan.batches:
        assert set(b.vertices.tolist()) <= allowed
    check_plan(plan, sub.inner_vertices, 3)


def test_baseline_unlimited_is_closure():
    g = gen_random_graph(200, 4, 4)
    _, gp = hierarchical_partition(g, 2, 2)
    dist = all_pairs_hops(g)
    plan = plan_minibatch_baseline(g, gp, 1, 2, None, math.inf, ModelSpec(layers=2))
    assert plan.R == 1
    assert plan.batches[0].mfg_vertices_per_layer == mfg_oracle(dist, gp.members(1), 2)
    check_plan(plan, gp.members(1), 2)


def test_baseline_fanout_one_bound():
    g = gen_random_graph(300, 10, 5)
    _, gp = hierarchical_partition(g, 1, 2)
    plan = plan_minibatch_baseline(g, gp, 0, 1, 1, 20_000, ModelSpec(layers=1))
    assert plan.R > 1
    for b in plan.batches:
        assert b.mfg_vertices_per_layer[0] <= 2 * b.target_vertices.size


def test_redundancy_on_shared_cluster():
    g = gen_planted_partition_graph(400, 2, 0.15, 0.005, 8)
    sp, gp = hierarchical_partition(g, 2, 2)
    L = 2
    model = ModelSpec(layers=L)
    sub = extract_full(g, sp, 0, L)
    coop = plan_cobatch(sub, g, L, None, math.inf, model)
    split = [plan_minibatch_baseline(g, gp, d, L, None, math.inf, model) for d in (0, 1)]
    assert sum(p.layer0_total() for p in split) > coop.layer0_total()
