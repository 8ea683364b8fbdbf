"""Time the compiled kernels against the NumPy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 50000] [--degree 10] [--repeat 3]

Both backends are imported directly, so the env switch is not needed here.
Each row reports the best of ``--repeat`` runs and checks the outputs match.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from halosim import _pycore
from halosim.extract import UNLIMITED
from halosim.graph import gen_random_graph
from halosim.partition import max_part_size

try:
    from halosim import _core
except ImportError:  # not built
    _core = None


def best_of(repeat: int, fn):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, np.asarray(b))
    return a == b


def cases(g, parts: int):
    n = g.num_vertices
    ip, ix = g.row_offsets, g.col_indices
    src = np.zeros(n, dtype=np.uint8)
    src[: n // parts] = 1
    sizes = np.full(parts, n // parts, dtype=np.int64)
    sizes[: n % parts] += 1
    rows, cols = g.edge_array()
    cap = max_part_size(n, parts, 0.05)
    floor_size = max(1, n // parts - (cap - math.ceil(n / parts)))
    start = _pycore.grow_regions(ip, ix, sizes)
    return {
        "edge_keys": lambda m: m.edge_keys(11, rows, cols),
        "closure_hops L=3": lambda m: m.closure_hops(ip, ix, src, None, None, 3, UNLIMITED, 0),
        "closure_hops sampled": lambda m: m.closure_hops(ip, ix, src, src, None, 2, 5, 7),
        "grow_regions": lambda m: m.grow_regions(ip, ix, sizes),
        "refine": lambda m: m.refine(ip, ix, start.copy(), parts, cap, floor_size, 8),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50_000)
    ap.add_argument("--degree", type=float, default=10.0)
    ap.add_argument("--parts", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled core not built; run pip install -e . --no-build-isolation")

    g = gen_random_graph(args.n, args.degree, 0)
    print(f"graph: {g.num_vertices} vertices, {g.num_edges} edges")
    print(f"{'kernel':<22}{'python s':>11}{'cython s':>11}{'speedup':>10}  match")
    for name, run in cases(g, args.parts).items():
        tp, a = best_of(args.repeat, lambda: run(_pycore))
        tc, b = best_of(args.repeat, lambda: run(_core))
        print(f"{name:<22}{tp:>11.4f}{tc:>11.4f}{tp / max(tc, 1e-9):>9.1f}x  {same(a, b)}")


if __name__ == "__main__":
    main()
