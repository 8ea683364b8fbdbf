"""Server-level dependency subgraphs: full L-hop closure or boundary-sampled halo."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError
from .graph import Graph
from .partition import Partition

UNLIMITED = -1
DEFAULT_MAX_HOP = 1
DEFAULT_FANOUT = 15


@dataclass(frozen=True)
class SamplingConfig:
    """External max-hop ``m`` and per-vertex external fanout ``k`` (None = unlimited)."""

    max_hop: int = DEFAULT_MAX_HOP
    fanout: int | None = DEFAULT_FANOUT
    seed: int = 0

    def __post_init__(self):
        if self.max_hop < 0:
            raise InputError("max_hop must be >= 0")
        if self.fanout is not None and self.fanout < 0:
            raise InputError("fanout must be >= 0 or None")

    @property
    def kernel_fanout(self) -> int:
        return UNLIMITED if self.fanout is None else self.fanout


@dataclass(frozen=True, eq=False)
class DependencySubgraph:
    server_id: int
    inner_vertices: np.ndarray
    halo_vertices: np.ndarray
    hop_of: np.ndarray  # aligned with halo_vertices
    induced_edges: int
    max_hop: int
    sampled: bool = False
    # number of halo vertices each vertex added while it was on the frontier
    contributions: dict[int, int] = field(default_factory=dict, repr=False)

    @property
    def vertices(self) -> np.ndarray:
        """inner ∪ halo, ascending."""
        return np.union1d(self.inner_vertices, self.halo_vertices)

    @property
    def size(self) -> int:
        return int(self.inner_vertices.size + self.halo_vertices.size)

    def hop_map(self) -> dict[int, int]:
        return dict(zip(self.halo_vertices.tolist(), self.hop_of.tolist()))

    def depth_array(self, n: int) -> np.ndarray:
        """Length-``n`` array: 0 for inner, hop for halo, -1 elsewhere."""
        d = np.full(n, -1, dtype=np.int32)
        d[self.inner_vertices] = 0
        d[self.halo_vertices] = self.hop_of
        return d


def _mask(n: int, members: np.ndarray) -> np.ndarray:
    m = np.zeros(n, dtype=np.uint8)
    m[members] = 1
    return m


def _inner(g: Graph, sp: Partition, server_id: int) -> np.ndarray:
    if sp.assignment.shape[0] != g.num_vertices:
        raise InputError("partition length does not match the graph")
    if not 0 <= server_id < sp.num_parts:
        raise InputError(f"server_id {server_id} outside [0, {sp.num_parts})")
    return sp.members(server_id)


def _count_induced(g: Graph, member: np.ndarray) -> int:
    rows, cols = g.edge_array()
    return int(np.count_nonzero(member[rows] & member[cols]))


def _assemble(g, server_id, inner, hops, contrib, max_hop, sampled) -> DependencySubgraph:
    hops = hops.copy()
    hops[inner] = -1
    halo = np.flatnonzero(hops > 0)
    member = (hops > 0).astype(np.uint8)
    member[inner] = 1
    nz = np.flatnonzero(contrib)
    return DependencySubgraph(
        server_id=server_id,
        inner_vertices=inner,
        halo_vertices=halo,
        hop_of=hops[halo].astype(np.int64),
        induced_edges=_count_induced(g, member),
        max_hop=max_hop,
        sampled=sampled,
        contributions=dict(zip(nz.tolist(), contrib[nz].tolist())),
    )


def extract_full(g: Graph, server_partition: Partition, server_id: int, layers: int
                 ) -> DependencySubgraph:
    """Inner vertices plus every outside vertex within ``layers`` hops of them."""
    if layers < 0:
        raise InputError("layers must be >= 0")
    inner = _inner(g, server_partition, server_id)
    sources = _mask(g.num_vertices, inner)
    hops, contrib = kernels.closure_hops(g.row_offsets, g.col_indices, sources, None, None,
                                         layers, UNLIMITED, 0)
    return _assemble(g, server_id, inner, hops, contrib, layers, False)


def extract_sampled(g: Graph, server_partition: Partition, server_id: int,
                    cfg: SamplingConfig) -> DependencySubgraph:
    """Halo grown hop by hop from the inner boundary, at most ``cfg.fanout``
    external neighbors per frontier vertex, up to ``cfg.max_hop`` hops.

    Each vertex ranks its external neighbors by a keyed hash of
    ``(seed, vertex, neighbor)`` and offers the first ``fanout`` of them; only
    those not yet included are added. Inner-to-inner dependencies are never
    sampled.
    """
    inner = _inner(g, server_partition, server_id)
    sources = _mask(g.num_vertices, inner)
    hops, contrib = kernels.closure_hops(g.row_offsets, g.col_indices, sources, sources, None,
                                         cfg.max_hop, cfg.kernel_fanout, cfg.seed)
    return _assemble(g, server_id, inner, hops, contrib, cfg.max_hop, cfg.fanout is not None)


def neighbor_explosion_profile(g: Graph, server_partition: Partition, server_id: int,
                               max_layers: int) -> list[tuple[int, int]]:
    """``(L, |inner ∪ L-hop halo|)`` for ``L = 1..max_layers``."""
    if max_layers < 1:
        raise InputError("max_layers must be >= 1")
    sub = extract_full(g, server_partition, server_id, max_layers)
    per_hop = np.bincount(sub.hop_of, minlength=max_layers + 1)
    sizes = sub.inner_vertices.size + np.cumsum(per_hop[1:])
    return [(L, int(s)) for L, s in zip(range(1, max_layers + 1), sizes)]


def boundary_vertices(g: Graph, inner: np.ndarray) -> np.ndarray:
    """Inner vertices with at least one neighbor outside ``inner``."""
    member = _mask(g.num_vertices, inner).astype(bool)
    rows, cols = g.edge_array()
    hit = member[rows] & ~member[cols]
    return np.unique(rows[hit])


def dump_subgraph(sub: DependencySubgraph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# server {sub.server_id} max_hop {sub.max_hop} sampled {int(sub.sampled)}\n")
        fh.write("inner:\n")
        for v in sub.inner_vertices.tolist():
            fh.write(f"{v}\n")
        fh.write("halo:\n")
        for v, h in zip(sub.halo_vertices.tolist(), sub.hop_of.tolist()):
            fh.write(f"{v} {h}\n")
