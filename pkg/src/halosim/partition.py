"""Balanced vertex partitioning (random or min-cut) and cut statistics."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputError, ParseError
from .graph import Graph

DEFAULT_EPSILON = 0.05
MAX_REFINE_PASSES = 10


@dataclass(frozen=True, eq=False)
class Partition:
    assignment: np.ndarray
    num_parts: int

    def __post_init__(self):
        a = self.assignment
        if a.size and (a.min() < 0 or a.max() >= self.num_parts):
            raise InputError("partition ids must lie in [0, num_parts)")

    @property
    def part_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.num_parts)

    def members(self, part: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == part)

    def same_as(self, other: Partition) -> bool:
        return self.num_parts == other.num_parts and np.array_equal(self.assignment, other.assignment)


@dataclass(frozen=True)
class CutReport:
    edge_cut: int
    cut_fraction: float
    balance_ratio: float


def max_part_size(n: int, parts: int, epsilon: float) -> int:
    return max(math.ceil(n / parts), math.floor(math.ceil(n / parts) * (1 + epsilon)))


def _check_parts(g: Graph, parts: int) -> None:
    if parts < 1:
        raise InputError("parts must be >= 1")
    if parts > g.num_vertices:
        raise InputError(f"cannot split {g.num_vertices} vertices into {parts} parts")


def _balanced_sizes(n: int, parts: int) -> np.ndarray:
    sizes = np.full(parts, n // parts, dtype=np.int64)
    sizes[: n % parts] += 1
    return sizes


def partition_random(g: Graph, parts: int, seed: int) -> Partition:
    """Uniform random assignment with part sizes within one vertex of each other."""
    _check_parts(g, parts)
    perm = np.random.default_rng(seed).permutation(g.num_vertices)
    assignment = np.empty(g.num_vertices, dtype=np.int64)
    assignment[perm] = np.arange(g.num_vertices) % parts
    return Partition(assignment, parts)


def partition_mincut(g: Graph, parts: int, seed: int = 0,
                     epsilon: float = DEFAULT_EPSILON) -> Partition:
    """Balanced min-cut heuristic.

    Greedy region growing from the highest-degree unassigned vertex (always
    absorbing the frontier vertex with the most links into the growing part),
    followed by up to ``MAX_REFINE_PASSES`` boundary passes that move a vertex
    to the neighboring part with the largest positive gain. Ties go to the
    lowest vertex id and lowest part id, so the result is fully determined by
    the graph; ``seed`` is accepted for interface symmetry with
    :func:`partition_random`.
    """
    del seed
    _check_parts(g, parts)
    if epsilon < 0:
        raise InputError("epsilon must be >= 0")
    n = g.num_vertices
    if parts == 1:
        return Partition(np.zeros(n, dtype=np.int64), 1)
    assign = kernels.grow_regions(g.row_offsets, g.col_indices, _balanced_sizes(n, parts))
    cap = max_part_size(n, parts, epsilon)
    floor_size = max(1, n // parts - (cap - math.ceil(n / parts)))
    assign, _ = kernels.refine(g.row_offsets, g.col_indices, assign, parts, cap, floor_size,
                               MAX_REFINE_PASSES)
    return Partition(np.asarray(assign, dtype=np.int64), parts)


def partition(g: Graph, parts: int, mode: str, seed: int,
              epsilon: float = DEFAULT_EPSILON) -> Partition:
    if mode == "mincut":
        return partition_mincut(g, parts, seed, epsilon)
    if mode == "random":
        return partition_random(g, parts, seed)
    raise InputError(f"unknown partition mode {mode!r}")


def evaluate_cut(g: Graph, p: Partition) -> CutReport:
    if p.assignment.shape[0] != g.num_vertices:
        raise InputError("partition length does not match the graph")
    rows, cols = g.edge_array()
    crossing = p.assignment[rows] != p.assignment[cols]
    if g.undirected:
        # each undirected pair appears as two CSR entries
        edge_cut = int(np.count_nonzero(crossing & (cols < rows)))
        total = g.num_edges // 2
    else:
        edge_cut = int(np.count_nonzero(crossing))
        total = g.num_edges
    sizes = p.part_sizes
    ideal = g.num_vertices / p.num_parts
    return CutReport(
        edge_cut=edge_cut,
        cut_fraction=edge_cut / total if total else 0.0,
        balance_ratio=float(sizes.max() / ideal),
    )


def hierarchical_partition(g: Graph, servers: int, gpus_per_server: int, mode: str = "mincut",
                           seed: int = 0, epsilon: float = DEFAULT_EPSILON
                           ) -> tuple[Partition, Partition]:
    """Server-level split, then each server's vertices split across its GPUs.

    GPU ``d`` of server ``s`` gets global id ``s * gpus_per_server + d``.
    """
    if servers < 1 or gpus_per_server < 1:
        raise InputError("servers and gpus_per_server must be >= 1")
    if servers * gpus_per_server > g.num_vertices:
        raise InputError("more GPUs than vertices")
    sp = partition(g, servers, mode, seed, epsilon)
    gpu = np.empty(g.num_vertices, dtype=np.int64)
    for s in range(servers):
        members = sp.members(s)
        if members.size < gpus_per_server:
            raise InputError(f"server {s} has fewer vertices than GPUs")
        local = partition(g.induced(members), gpus_per_server, mode, seed + s, epsilon)
        gpu[members] = s * gpus_per_server + local.assignment
    return sp, Partition(gpu, servers * gpus_per_server)


def server_partition_of(gp: Partition, gpus_per_server: int) -> Partition:
    return Partition(gp.assignment // gpus_per_server, gp.num_parts // gpus_per_server)


def save_partition(p: Partition, path: str | os.PathLike, gpus_per_server: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# parts {p.num_parts}\n")
        if gpus_per_server is not None:
            fh.write(f"# gpus-per-server {gpus_per_server}\n")
        fh.write("\n".join(map(str, p.assignment.tolist())))
        fh.write("\n")


def load_partition(path: str | os.PathLike) -> tuple[Partition, int | None]:
    """Returns the partition and the ``gpus-per-server`` header value, if present."""
    parts = None
    gps = None
    ids = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                fields = text[1:].split()
                if len(fields) == 2 and fields[0] in ("parts", "gpus-per-server"):
                    try:
                        value = int(fields[1])
                    except ValueError:
                        raise ParseError(path, lineno, f"bad header value {fields[1]!r}") from None
                    if fields[0] == "parts":
                        parts = value
                    else:
                        gps = value
                continue
            try:
                ids.append(int(text))
            except ValueError:
                raise ParseError(path, lineno, f"expected a part id, got {text!r}") from None
    assignment = np.array(ids, dtype=np.int64)
    if parts is None:
        parts = int(assignment.max()) + 1 if assignment.size else 1
    return Partition(assignment, parts), gps
