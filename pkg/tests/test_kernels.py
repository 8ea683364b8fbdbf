"""Compiled kernels against the NumPy fallback, and both against a plain-Python hash."""

import os
import subprocess
import sys

import numpy as np
import pytest

from halosim import _pycore, kernels
from halosim.graph import gen_random_graph

from conftest import key

try:
    from halosim import _core
except ImportError:  # pragma: no cover
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def test_edge_keys_match_plain_python():
    v = np.array([0, 1, 7, 123456, 2**40])
    u = np.array([5, 0, 7, 3, 2**33])
    for seed in (0, 1, -3, 2**63 + 5):
        got = _pycore.edge_keys(seed, v, u)
        want = [key(seed, int(a), int(b)) for a, b in zip(v, u)]
        assert got.tolist() == want


@needs_core
def test_edge_keys_backends_agree():
    r = np.random.default_rng(0)
    v = r.integers(0, 10**6, 500)
    u = r.integers(0, 10**6, 500)
    assert np.array_equal(_core.edge_keys(11, v, u), _pycore.edge_keys(11, v, u))


def _closure_cases():
    r = np.random.default_rng(7)
    for i in range(40):
        n = int(r.integers(5, 300))
        g = gen_random_graph(n, float(r.uniform(0.5, 12)), i)
        src = (r.random(n) < r.uniform(0.05, 0.5)).astype(np.uint8)
        exclude = src if i % 2 else None
        allowed = (r.random(n) < 0.8).astype(np.uint8) if i % 3 == 0 else None
        fanout = int(r.choice([-1, 0, 1, 2, 5]))
        yield g, src, exclude, allowed, int(r.integers(0, 5)), fanout, i


@needs_core
def test_closure_hops_backends_agree():
    for g, src, ex, al, m, k, seed in _closure_cases():
        a = _core.closure_hops(g.row_offsets, g.col_indices, src, ex, al, m, k, seed)
        b = _pycore.closure_hops(g.row_offsets, g.col_indices, src, ex, al, m, k, seed)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])


@needs_core
def test_partition_kernels_backends_agree():
    r = np.random.default_rng(3)
    for i in range(15):
        n = int(r.integers(10, 400))
        g = gen_random_graph(n, float(r.uniform(1, 10)), 100 + i)
        parts = int(r.integers(2, 6))
        sizes = np.full(parts, n // parts)
        sizes[: n % parts] += 1
        a = _core.grow_regions(g.row_offsets, g.col_indices, sizes)
        b = _pycore.grow_regions(g.row_offsets, g.col_indices, sizes)
        assert np.array_equal(a, b)
        cap = int(sizes.max()) + 2
        ra = _core.refine(g.row_offsets, g.col_indices, a, parts, cap, int(sizes.min()) - 2, 10)
        rb = _pycore.refine(g.row_offsets, g.col_indices, b, parts, cap, int(sizes.min()) - 2, 10)
        assert np.array_equal(ra[0], rb[0]) and ra[1] == rb[1]


def test_env_var_forces_fallback():
    env = dict(os.environ, HALOSIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import halosim.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
