import numpy as np
import pytest

from halosim.errors import ContractError, InputError
from halosim.extract import SamplingConfig, extract_full, extract_sampled
from halosim.graph import build_graph, gen_random_graph
from halosim.partition import Partition, partition_random
from halosim.reference import (
    LayerWeights,
    equivalence_check,
    forward_full,
    forward_server_local,
    make_features,
    make_weights,
)

from conftest import all_pairs_hops


def test_isolated_vertex_identity():
    g = build_graph([], 1)
    w = LayerWeights((np.eye(2),))
    out = forward_full(g, np.array([[1.0, -2.0]]), w, 1)
    assert out.tolist() == [[1.0, 0.0]]


def test_edge_pair_scalar():
    g = build_graph([(0, 1)], 2)
    out = forward_full(g, np.array([[1.0], [2.0]]), LayerWeights((np.array([[1.0]]),)), 1)
    assert out.ravel().tolist() == [3.0, 3.0]


def test_zero_layers_is_identity():
    g = gen_random_graph(20, 3, 1)
    x = make_features(20, 4, 1)
    assert np.array_equal(forward_full(g, x, make_weights(0, 4, 4, 0), 0), x)
    sp = partition_random(g, 2, 0)
    sub = extract_full(g, sp, 0, 0)
    assert np.array_equal(forward_server_local(sub, g, x, make_weights(0, 4, 4, 0), 0),
                          x[sub.inner_vertices])


def test_shape_errors():
    g = gen_random_graph(10, 2, 1)
    with pytest.raises(InputError):
        forward_full(g, np.zeros((9, 3)), make_weights(1, 3, 3, 0), 1)
    with pytest.raises(InputError):
        forward_full(g, np.zeros((10, 3)), make_weights(1, 4, 3, 0), 1)
    with pytest.raises(InputError):
        forward_full(g, np.zeros((10, 3)), make_weights(1, 3, 3, 0), 2)


def test_exactness_contract():
    g = gen_random_graph(60, 4, 2)
    sp = partition_random(g, 2, 0)
    x, w = make_features(60, 4, 0), make_weights(3, 4, 4, 1)
    with pytest.raises(ContractError):
        forward_server_local(extract_full(g, sp, 0, 2), g, x, w, 3)
    with pytest.raises(ContractError):
        forward_server_local(extract_sampled(g, sp, 0, SamplingConfig(3, 2)), g, x, w, 3)


def test_unsampled_is_bit_exact():
    for seed in range(6):
        g = gen_random_graph(120, 5, seed)
        sp = partition_random(g, 3, seed)
        for L in (1, 3, 5):
            assert equivalence_check(g, sp, L, seed, hidden_dim=6, feature_dim=5).max_deviation == 0


def test_degenerate_sampling_is_exact():
    g = gen_random_graph(150, 6, 3)
    sp = partition_random(g, 2, 3)
    assert equivalence_check(g, sp, 3, 0, cfg=SamplingConfig(3, None)).max_deviation == 0


def test_heavy_sampling_deviates():
    g = gen_random_graph(120, 20, 4)
    sp = partition_random(g, 4, 4)
    rep = equivalence_check(g, sp, 3, 0, cfg=SamplingConfig(1, 1, 0))
    assert rep.max_deviation > 0


def test_locality():
    g = gen_random_graph(300, 3, 5)
    sp = partition_random(g, 4, 5)
    L = 2
    dist = all_pairs_hops(g)
    x, w = make_features(300, 4, 1), make_weights(L, 4, 4, 2)
    base = forward_full(g, x, w, L)
    far = np.flatnonzero(dist[sp.members(0)].min(axis=0) > L)
    assert far.size
    y = x.copy()
    y[far] += 100.0
    out = forward_full(g, y, w, L)
    assert np.array_equal(out[sp.members(0)], base[sp.members(0)])


def test_permutation_safety():
    g = gen_random_graph(80, 4, 6)
    r = np.random.default_rng(0)
    perm = r.permutation(80)  # old id -> new id
    rows, cols = g.edge_array()
    h = build_graph(list(zip(perm[rows].tolist(), perm[cols].tolist())), 80)
    x, w = make_features(80, 3, 2), make_weights(2, 3, 3, 3)
    xp = np.empty_like(x)
    xp[perm] = x
    a = forward_full(g, x, w, 2)
    b = forward_full(h, xp, w, 2)
    # summation order changes under relabeling, so only near-equality holds
    assert np.allclose(b[perm], a, rtol=1e-9, atol=1e-12)
