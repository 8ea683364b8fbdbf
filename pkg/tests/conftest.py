import collections

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from halosim.graph import build_graph, gen_random_graph

M64 = (1 << 64) - 1


def splitmix(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def key(seed: int, v: int, u: int) -> int:
    return splitmix(splitmix(splitmix(seed & M64) ^ v) ^ u)


def all_pairs_hops(g) -> np.ndarray:
    """Unweighted distance matrix; dist[i, j] = hops from i to j along dependencies."""
    rows, cols = g.edge_array()
    # row v of the CSR lists what v depends on, so the walk goes v -> col
    adj = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(g.num_vertices,) * 2)
    return shortest_path(adj, unweighted=True, directed=True)


def closure_oracle(dist: np.ndarray, inner: np.ndarray, layers: int) -> dict[int, int]:
    """halo vertex -> hop, from a union of per-inner-vertex searches."""
    if inner.size == 0:
        return {}
    d = dist[inner].min(axis=0)
    member = set(inner.tolist())
    return {v: int(d[v]) for v in range(d.size)
            if v not in member and 1 <= d[v] <= layers}


def sampled_oracle(g, inner, max_hop, fanout, seed) -> tuple[dict[int, int], dict[int, int]]:
    """Straight-line rendering of boundary-sampled halo growth."""
    inner_set = set(int(v) for v in inner)
    hop = {}
    contrib = collections.Counter()
    frontier = sorted(inner_set)
    for h in range(1, max_hop + 1):
        nxt = []
        for v in frontier:
            cands = [int(u) for u in g.neighbors(v) if int(u) not in inner_set]
            if fanout is not None:
                cands = sorted(cands, key=lambda u: (key(seed, v, u), u))[:fanout]
            for u in cands:
                if u not in hop:
                    hop[u] = h
                    contrib[v] += 1
                    nxt.append(u)
        frontier = sorted(nxt)
    return hop, dict(contrib)


@pytest.fixture
def path4():
    return build_graph([(0, 1), (1, 2), (2, 3)], 4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_graphs(count: int, n_max: int, deg_max: float, seed: int):
    r = np.random.default_rng(seed)
    for i in range(count):
        n = int(r.integers(8, n_max + 1))
        deg = float(r.uniform(0.5, deg_max))
        yield gen_random_graph(n, deg, seed * 1000 + i)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
