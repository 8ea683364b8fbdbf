"""Deterministic sum-aggregation GNN used as a numerical oracle.

``h_v^l = relu(W^l (h_v^{l-1} + sum_{u in N(v), ascending} h_u^{l-1}))``

Summation always starts from the vertex's own vector and adds neighbors in
ascending id order, and the matrix product is accumulated column by column,
so a vertex's output depends only on the values it reads and never on how
many other rows are evaluated alongside it. That is what makes the
server-local and full-graph passes comparable bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InputError
from .extract import DependencySubgraph, SamplingConfig, extract_full, extract_sampled
from .graph import Graph
from .partition import Partition


@dataclass(frozen=True, eq=False)
class LayerWeights:
    matrices: tuple[np.ndarray, ...]

    @property
    def layers(self) -> int:
        return len(self.matrices)


def make_weights(layers: int, in_dim: int, hidden_dim: int, seed: int) -> LayerWeights:
    """Uniform(-0.5, 0.5) matrices; layer 1 is ``hidden x in_dim``, later ones square."""
    rng = np.random.default_rng(seed)
    mats = []
    width = in_dim
    for _ in range(layers):
        mats.append(rng.uniform(-0.5, 0.5, size=(hidden_dim, width)))
        width = hidden_dim
    return LayerWeights(tuple(mats))


def make_features(n: int, dim: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, dim))


def _layer(offsets: np.ndarray, cols: np.ndarray, h: np.ndarray, w: np.ndarray,
           rows: np.ndarray) -> np.ndarray:
    """One layer for the vertices in ``rows`` (local ids), reading from ``h``."""
    acc = h[rows].copy()
    starts = offsets[rows]
    deg = offsets[rows + 1] - starts
    for j in range(int(deg.max()) if deg.size else 0):
        live = deg > j
        acc[live] += h[cols[starts[live] + j]]
    out = np.zeros((rows.size, w.shape[0]))
    for c in range(w.shape[1]):
        out += np.multiply.outer(acc[:, c], w[:, c])
    return np.maximum(out, 0.0)


def _check(x: np.ndarray, w: LayerWeights, layers: int, n: int) -> None:
    if x.ndim != 2 or x.shape[0] != n:
        raise InputError(f"features must have shape ({n}, d), got {x.shape}")
    if layers > w.layers:
        raise InputError(f"need {layers} weight matrices, have {w.layers}")
    width = x.shape[1]
    for i, m in enumerate(w.matrices[:layers]):
        if m.shape[1] != width:
            raise InputError(f"layer {i + 1} expects width {m.shape[1]}, got {width}")
        width = m.shape[0]


def forward_full(g: Graph, x: np.ndarray, w: LayerWeights, layers: int) -> np.ndarray:
    """Layer-``layers`` outputs for every vertex."""
    _check(x, w, layers, g.num_vertices)
    h = np.asarray(x, dtype=np.float64)
    rows = np.arange(g.num_vertices)
    for l in range(layers):
        h = _layer(g.row_offsets, g.col_indices, h, w.matrices[l], rows)
    return h


def forward_server_local(sub: DependencySubgraph, g: Graph, x: np.ndarray, w: LayerWeights,
                         layers: int, exact: bool = True) -> np.ndarray:
    """Layer-``layers`` outputs of ``sub``'s inner vertices using only inner ∪ halo.

    A vertex at hop ``h`` is evaluated for layers ``1..layers-h`` only; past
    that depth it keeps its last value, or zeros if the layer width changed.
    With ``exact=True`` the subgraph must be an unsampled closure at least
    ``layers`` hops deep.
    """
    if exact and (sub.sampled or sub.max_hop < layers):
        raise ContractError(
            f"subgraph (max_hop={sub.max_hop}, sampled={sub.sampled}) cannot give exact "
            f"{layers}-layer outputs"
        )
    _check(x, w, layers, g.num_vertices)
    verts = sub.vertices
    local = g.induced(verts)
    depth = sub.depth_array(g.num_vertices)[verts]
    h = np.asarray(x, dtype=np.float64)[verts]
    inner_pos = np.searchsorted(verts, sub.inner_vertices)
    if layers == 0:
        return h[inner_pos]
    for l in range(1, layers + 1):
        rows = np.flatnonzero(depth <= layers - l)
        new = _layer(local.row_offsets, local.col_indices, h, w.matrices[l - 1], rows)
        if new.shape[1] == h.shape[1]:
            nxt = h.copy()
        else:
            # width changed: rows past their depth hold zeros instead
            nxt = np.zeros((h.shape[0], new.shape[1]))
        nxt[rows] = new
        h = nxt
    return h[inner_pos]


@dataclass(frozen=True)
class EquivalenceReport:
    layers: int
    per_server: tuple[float, ...]

    @property
    def max_deviation(self) -> float:
        return max(self.per_server, default=0.0)


def equivalence_check(g: Graph, server_partition: Partition, layers: int, seed: int,
                      hidden_dim: int = 8, feature_dim: int = 8,
                      cfg: SamplingConfig | None = None) -> EquivalenceReport:
    """Max |server-local - full-graph| over each server's inner outputs."""
    x = make_features(g.num_vertices, feature_dim, seed)
    w = make_weights(layers, feature_dim, hidden_dim, seed + 1)
    ref = forward_full(g, x, w, layers)
    devs = []
    for s in range(server_partition.num_parts):
        if cfg is None:
            sub = extract_full(g, server_partition, s, layers)
        else:
            sub = extract_sampled(g, server_partition, s, cfg)
        local = forward_server_local(sub, g, x, w, layers, exact=cfg is None)
        diff = np.abs(local - ref[sub.inner_vertices])
        devs.append(float(diff.max()) if diff.size else 0.0)
    return EquivalenceReport(layers, tuple(devs))
