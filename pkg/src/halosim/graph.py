"""Immutable CSR graphs, synthetic generators and edge-list I/O.

Row ``v`` of the CSR holds the vertices ``v`` depends on: its neighbors in
undirected mode, its in-neighbors (sources of edges ``u -> v``) in directed
mode. Neighbor slices are sorted ascending and free of duplicates and
self-loops.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, ParseError


@dataclass(frozen=True)
class GraphStats:
    avg_degree: float
    max_degree: int
    num_isolated: int


@dataclass(frozen=True, eq=False)
class Graph:
    num_vertices: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    undirected: bool = True
    feature_dim: int = 0

    @property
    def num_edges(self) -> int:
        """Number of directed CSR entries (an undirected pair counts twice)."""
        return int(self.row_offsets[-1])

    def neighbors(self, v: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[v] : self.row_offsets[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    def stats(self) -> GraphStats:
        deg = self.degrees()
        return GraphStats(
            avg_degree=self.num_edges / self.num_vertices,
            max_degree=int(deg.max()) if deg.size else 0,
            num_isolated=int(np.count_nonzero(deg == 0)),
        )

    def edge_array(self) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) arrays of every CSR entry, in storage order."""
        rows = np.repeat(np.arange(self.num_vertices, dtype=np.int64), self.degrees())
        return rows, self.col_indices

    def induced(self, vertices: np.ndarray) -> Graph:
        """Subgraph on ``vertices`` (ascending global ids become local ids 0..)."""
        vertices = np.asarray(vertices, dtype=np.int64)
        local = np.full(self.num_vertices, -1, dtype=np.int64)
        local[vertices] = np.arange(vertices.size)
        rows, cols = self.edge_array()
        keep = (local[rows] >= 0) & (local[cols] >= 0)
        r, c = local[rows[keep]], local[cols[keep]]
        # rows ascend and, within a row, cols keep their ascending order
        offsets = np.zeros(vertices.size + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=vertices.size), out=offsets[1:])
        return Graph(int(vertices.size), offsets, c, self.undirected, self.feature_dim)

    def same_as(self, other: Graph) -> bool:
        return (
            self.num_vertices == other.num_vertices
            and self.undirected == other.undirected
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    def __repr__(self) -> str:
        kind = "undirected" if self.undirected else "directed"
        return f"Graph(n={self.num_vertices}, entries={self.num_edges}, {kind})"


def _from_arrays(src: np.ndarray, dst: np.ndarray, n: int, undirected: bool,
                 feature_dim: int = 0) -> Graph:
    if n <= 0:
        raise InputError("num_vertices must be >= 1")
    src = np.asarray(src, dtype=np.int64).ravel()
    dst = np.asarray(dst, dtype=np.int64).ravel()
    if src.shape != dst.shape:
        raise InputError("edge endpoint arrays differ in length")
    if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
        raise InputError(f"vertex id out of range [0, {n})")
    keep = src != dst
    src, dst = src[keep], dst[keep]
    # row = dependent vertex (edge target), col = dependency (edge source)
    rows, cols = dst, src
    if undirected:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
    keys = np.unique(rows * n + cols)
    rows, cols = keys // n, keys % n
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
    return Graph(n, offsets, cols.astype(np.int64), undirected, feature_dim)


def build_graph(edges: Iterable[Sequence[int]], num_vertices: int, undirected: bool = True,
                feature_dim: int = 0) -> Graph:
    """Canonical CSR from ``(u, v)`` pairs; duplicates and self-loops are dropped."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("edges must be (u, v) pairs")
    return _from_arrays(arr[:, 0], arr[:, 1], num_vertices, undirected, feature_dim)


def _vertex_rng(seed: int, v: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF, v])


def _bernoulli_positions(rng: np.random.Generator, count: int, p: float) -> np.ndarray:
    """Indices in ``[0, count)`` kept by independent Bernoulli(p) trials."""
    if count <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(count, dtype=np.int64)
    mean = count * p
    chunk = int(mean + 5 * math.sqrt(mean) + 16)
    pos = np.cumsum(rng.geometric(p, size=chunk)) - 1
    while pos[-1] < count - 1:
        more = np.cumsum(rng.geometric(p, size=chunk)) + pos[-1]
        pos = np.concatenate([pos, more])
    return pos[pos < count].astype(np.int64)


def gen_random_graph(n: int, avg_degree: float, seed: int) -> Graph:
    """Undirected G(n, p) with ``p = avg_degree / (n - 1)``.

    Vertex ``u`` draws its partners ``v > u`` from an RNG keyed by
    ``(seed, u)``, so the result does not depend on generation order.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    if avg_degree < 0:
        raise InputError("avg_degree must be >= 0")
    if n == 1:
        if avg_degree > 0:
            raise InputError("avg_degree must be < n for a simple graph")
        return _from_arrays(np.empty(0), np.empty(0), 1, True)
    if avg_degree >= n:
        raise InputError("avg_degree must be < n for a simple graph")
    p = avg_degree / (n - 1)
    src, dst = [], []
    for u in range(n - 1):
        pos = _bernoulli_positions(_vertex_rng(seed, u), n - 1 - u, p)
        if pos.size:
            src.append(np.full(pos.size, u, dtype=np.int64))
            dst.append(pos + u + 1)
    if not src:
        return _from_arrays(np.empty(0), np.empty(0), n, True)
    return _from_arrays(np.concatenate(src), np.concatenate(dst), n, True)


def block_bounds(n: int, parts: int) -> np.ndarray:
    """Start offsets of ``parts`` contiguous blocks; the remainder goes to the first blocks."""
    sizes = np.full(parts, n // parts, dtype=np.int64)
    sizes[: n % parts] += 1
    return np.concatenate([[0], np.cumsum(sizes)])


def gen_planted_partition_graph(n: int, parts: int, p_in: float, p_out: float, seed: int) -> Graph:
    """Planted-partition graph; block ``b`` is the contiguous id range ``bounds[b]:bounds[b+1]``."""
    for name, p in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= p <= 1.0:
            raise InputError(f"{name} must lie in [0, 1], got {p}")
    if n < 1 or parts < 1 or parts > n:
        raise InputError("need 1 <= parts <= n")
    bounds = block_bounds(n, parts)
    block = np.repeat(np.arange(parts), np.diff(bounds))
    src, dst = [], []
    for u in range(n - 1):
        hi = int(bounds[block[u] + 1])
        rng = _vertex_rng(seed, u)
        inside = _bernoulli_positions(rng, hi - u - 1, p_in) + u + 1
        outside = _bernoulli_positions(rng, n - hi, p_out) + hi
        partners = np.concatenate([inside, outside])
        if partners.size:
            src.append(np.full(partners.size, u, dtype=np.int64))
            dst.append(partners)
    if not src:
        return _from_arrays(np.empty(0), np.empty(0), n, True)
    return _from_arrays(np.concatenate(src), np.concatenate(dst), n, True)


def planted_blocks(n: int, parts: int) -> np.ndarray:
    """Block label of each vertex of a graph made by ``gen_planted_partition_graph``."""
    return np.repeat(np.arange(parts), np.diff(block_bounds(n, parts)))


def save_edge_list(g: Graph, path: str | os.PathLike) -> None:
    rows, cols = g.edge_array()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# vertices {g.num_vertices}\n")
        fh.write(f"# {'undirected' if g.undirected else 'directed'}\n")
        if g.undirected:
            keep = cols < rows
            pairs = np.stack([cols[keep], rows[keep]], axis=1)
        else:
            pairs = np.stack([cols, rows], axis=1)
        if pairs.size:
            fh.write("\n".join(f"{u} {v}" for u, v in pairs.tolist()))
            fh.write("\n")


def load_edge_list(path: str | os.PathLike, undirected: bool = True) -> Graph:
    """Read ``u v`` lines; ``#`` lines are comments except ``# vertices N``."""
    n_declared = None
    src, dst = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                parts = text[1:].split()
                if len(parts) == 2 and parts[0] == "vertices":
                    try:
                        n_declared = int(parts[1])
                    except ValueError:
                        raise ParseError(path, lineno, f"bad vertex count {parts[1]!r}") from None
                continue
            fields = text.split()
            if len(fields) != 2:
                raise ParseError(path, lineno, f"expected 'u v', got {text!r}")
            try:
                u, v = int(fields[0]), int(fields[1])
            except ValueError:
                raise ParseError(path, lineno, f"non-integer vertex id in {text!r}") from None
            if u < 0 or v < 0:
                raise ParseError(path, lineno, "negative vertex id")
            src.append(u)
            dst.append(v)
    max_id = max(max(src, default=-1), max(dst, default=-1))
    n = n_declared if n_declared is not None else max_id + 1
    if max_id >= n:
        raise InputError(f"{path}: vertex id {max_id} exceeds declared count {n}")
    return _from_arrays(np.array(src), np.array(dst), n, undirected)
