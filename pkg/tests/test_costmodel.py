import math

import pytest

from halosim.costmodel import (
    ClusterSpec,
    ModelSpec,
    WorkloadSpec,
    check_validity,
    crossover_layer,
    speedup_threshold,
    t_preload,
    t_prev,
    t_prev_terms,
    t_sampling,
)
from halosim.errors import InputError
from halosim.extract import SamplingConfig

W = WorkloadSpec(1000, 10000)
C = ClusterSpec(2, 2, 1000, 1e6, 1e5)


def test_single_worker_no_comm():
    c = ClusterSpec(1, 1, 1000, 1e6, 1e5)
    assert t_prev(WorkloadSpec(1000, 0), c) == 1.0
    terms = t_prev_terms(WorkloadSpec(1000, 5000), c)
    assert terms["internal"] == 0 and terms["external"] == 0


def test_t_prev_example():
    assert t_prev(W, C) == pytest.approx(0.263125, rel=1e-12)
    terms = t_prev_terms(W, C)
    assert terms["compute"] == pytest.approx(0.25)
    assert terms["internal"] == pytest.approx(0.000625)
    assert terms["external"] == pytest.approx(0.0125)
    faster = ClusterSpec(2, 2, 1000, 1e6, 2e5)
    assert t_prev_terms(W, faster)["external"] == pytest.approx(terms["external"] / 2, rel=1e-15)


def test_t_preload_example():
    m = ModelSpec(layers=3, d_alpha=2.0)
    assert t_preload(W, C, m) == pytest.approx(1.5075, rel=1e-12)
    assert t_preload(W, ClusterSpec(2, 2, 1000, 1e6, 1.0), m) == t_preload(W, C, m)


def test_t_preload_unit_growth():
    m = ModelSpec(layers=1, d_alpha=1.0)
    assert t_preload(W, C, m) == pytest.approx(0.25 + 10000 / 4 * 0.5 / 1e6)


def test_t_sampling_example():
    cfg = SamplingConfig(1, 15)
    assert t_sampling(W, C, cfg, 0.3) == pytest.approx(3.8625, rel=1e-12)
    unit = t_sampling(W, C, SamplingConfig(1, 1), 0.77)
    assert unit == pytest.approx(1000 / 4000 + 10000 / 4 * 3 / 1e6)
    with pytest.raises(InputError):
        t_sampling(W, C, SamplingConfig(0, 15), 0.3)
    with pytest.raises(InputError):
        t_sampling(W, C, SamplingConfig(1, None), 0.3)


def test_speedup_threshold_examples():
    assert speedup_threshold(10, 2, 3) == 0.5
    assert speedup_threshold(7.3, 1, 1) == 0
    assert speedup_threshold(10, 1.5, 4) == 0.5
    with pytest.raises(InputError):
        speedup_threshold(0, 2, 3)


def test_validity():
    c16 = ClusterSpec(4, 4, 1, 1, 1)
    assert check_validity(W, c16, ModelSpec(layers=3, d_alpha=2)).valid
    bad = check_validity(W, c16, ModelSpec(layers=10, d_alpha=2))
    assert bad.names() == ["preload_factor_exceeds_gpus"]
    warn = check_validity(W, c16, ModelSpec(layers=3, d_alpha=2), SamplingConfig(1, 15), 0.3)
    assert "sampling_exceeds_preload" in warn.names()
    assert "sampling factor exceeds preload factor" in warn.violations[-1].message
    low = check_validity(W, c16, ModelSpec(layers=1, d_alpha=1))
    assert low.names() == ["preload_factor_too_small"]


def test_crossover():
    assert crossover_layer(W, ClusterSpec(2, 2, 1000, 1e6, 1e-6), 2.0) is None
    assert crossover_layer(W, C, 2.0) == 1
    fast = ClusterSpec(2, 2, 1e6, 1e4, 1e4)
    L = crossover_layer(W, fast, 1.5)
    assert L is not None and L <= 4
    m = ModelSpec(layers=L, d_alpha=1.5)
    assert t_preload(W, fast, m) > t_prev(W, fast)
    if L > 1:
        assert t_preload(W, fast, ModelSpec(layers=L - 1, d_alpha=1.5)) <= t_prev(W, fast)


def test_monotone_in_rates():
    m = ModelSpec(layers=4, d_alpha=1.7)
    cfg = SamplingConfig(2, 5)
    base = ClusterSpec(2, 4, 1e5, 1e6, 1e5)
    for field in ("compute_vps", "internal_bw_vps", "external_bw_vps"):
        d = base.to_dict()
        d[field] *= 1.5
        up = ClusterSpec.from_dict(d)
        assert t_prev(W, up) < t_prev(W, base)
        if field != "external_bw_vps":
            assert t_preload(W, up, m) < t_preload(W, base, m)
            assert t_sampling(W, up, cfg, 0.4) < t_sampling(W, base, cfg, 0.4)


def test_cluster_spec_validation(tmp_path):
    with pytest.raises(InputError):
        ClusterSpec(0, 1, 1, 1, 1)
    with pytest.raises(InputError):
        ClusterSpec(1, 1, 1, -1, 1)
    with pytest.raises(InputError):
        ClusterSpec.from_dict({"num_servers": 1})
    f = tmp_path / "c.json"
    f.write_text('{"num_servers": 2, "gpus_per_server": 4, "compute_vps": 1e6, '
                 '"internal_bw_vps": 1e7, "external_bw_vps": 1e6}')
    c = ClusterSpec.from_json(f)
    assert c.num_gpus == 8 and math.isinf(c.gpu_mem_bytes)
    with pytest.raises(InputError):
        ModelSpec(layers=0)
    with pytest.raises(InputError):
        ModelSpec(layers=2, d_alpha=0.5)
