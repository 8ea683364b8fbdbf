"""Batch planning under a per-batch memory budget.

``fetch_then_split`` (cooperative batching) picks server-level targets and
resolves their dependencies once inside the server's preloaded subgraph.
``split_then_fetch`` is the conventional per-GPU mini-batch baseline, where
each GPU's chunk resolves its own dependencies from the whole graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .costmodel import ModelSpec
from .errors import CapacityError, InputError
from .extract import UNLIMITED, DependencySubgraph, SamplingConfig
from .graph import Graph
from .partition import Partition, partition_mincut

FETCH_THEN_SPLIT = "fetch_then_split"
SPLIT_THEN_FETCH = "split_then_fetch"


@dataclass(frozen=True, eq=False)
class Batch:
    target_vertices: np.ndarray
    vertices: np.ndarray  # every vertex the batch touches, ascending
    depth: np.ndarray  # hop distance from the targets, aligned with ``vertices``
    mfg_vertices_per_layer: tuple[int, ...]
    est_memory_bytes: int

    @property
    def layers(self) -> int:
        return len(self.mfg_vertices_per_layer) - 1

    def layer_vertices(self, layer: int) -> np.ndarray:
        """Vertices whose layer-``layer`` representation the batch needs."""
        return self.vertices[self.depth <= self.layers - layer]


@dataclass(frozen=True, eq=False)
class BatchPlan:
    server_id: int
    R: int
    batches: tuple[Batch, ...]
    strategy: str
    gpu_id: int | None = None

    @property
    def total_memory_bytes(self) -> int:
        return sum(b.est_memory_bytes for b in self.batches)

    @property
    def max_memory_bytes(self) -> int:
        return max((b.est_memory_bytes for b in self.batches), default=0)

    def layer0_total(self) -> int:
        return sum(b.mfg_vertices_per_layer[0] for b in self.batches)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "server_id": self.server_id,
            "gpu_id": self.gpu_id,
            "R": self.R,
            "batches": [
                {
                    "targets": int(b.target_vertices.size),
                    "mfg_vertices_per_layer": list(b.mfg_vertices_per_layer),
                    "est_memory_bytes": int(b.est_memory_bytes),
                }
                for b in self.batches
            ],
            "total_memory_bytes": int(self.total_memory_bytes),
        }


def estimate_memory(mfg_counts, model: ModelSpec) -> int:
    return int(sum(c * model.width(l) * model.bytes_per_scalar for l, c in enumerate(mfg_counts)))


def estimate_batch_memory(b: Batch, model: ModelSpec) -> int:
    """Activation + input-feature bytes of a batch; weights are not counted."""
    return estimate_memory(b.mfg_vertices_per_layer, model)


def _mfg_counts(depth: np.ndarray, layers: int) -> tuple[int, ...]:
    per_depth = np.bincount(depth, minlength=layers + 1)[: layers + 1]
    # layer l needs every vertex within (layers - l) hops of the targets
    upto = np.cumsum(per_depth)
    return tuple(int(upto[layers - l]) for l in range(layers + 1))


def _make_batch(targets: np.ndarray, hops: np.ndarray, layers: int, model: ModelSpec) -> Batch:
    verts = np.flatnonzero(hops >= 0)
    depth = hops[verts].astype(np.int64)
    counts = _mfg_counts(depth, layers)
    return Batch(targets, verts, depth, counts, estimate_memory(counts, model))


def _mask(n: int, members: np.ndarray) -> np.ndarray:
    m = np.zeros(n, dtype=np.uint8)
    m[members] = 1
    return m


def cobatch(g: Graph, targets: np.ndarray, allowed: np.ndarray, layers: int,
            cfg: SamplingConfig | None, model: ModelSpec) -> Batch:
    """One fetch-then-split batch for ``targets`` inside the ``allowed`` vertex mask.

    The batch's vertex set is the closure of the targets (boundary-sampled
    when ``cfg`` is given); its per-layer counts come from peeling inside
    that set.
    """
    n = g.num_vertices
    src = _mask(n, targets)
    if cfg is None:
        hops, _ = kernels.closure_hops(g.row_offsets, g.col_indices, src, None, allowed,
                                       layers, UNLIMITED, 0)
        return _make_batch(targets, hops, layers, model)
    reach, _ = kernels.closure_hops(g.row_offsets, g.col_indices, src, src, allowed,
                                    min(cfg.max_hop, layers), cfg.kernel_fanout, cfg.seed)
    inside = (reach >= 0).astype(np.uint8)
    hops, _ = kernels.closure_hops(g.row_offsets, g.col_indices, src, None, inside,
                                   layers, UNLIMITED, 0)
    return _make_batch(targets, hops, layers, model)


def _split_targets(g: Graph, targets: np.ndarray, R: int, target_graph: Graph | None
                   ) -> list[np.ndarray]:
    if R == 1:
        return [targets]
    if R >= targets.size:
        return [targets[i : i + 1] for i in range(targets.size)]
    p = partition_mincut(target_graph, R)
    return [targets[p.assignment == r] for r in range(R)]


def _lower_bound_R(num_targets: int, layers: int, model: ModelSpec, budget: float) -> int:
    # every layer holds at least the batch's own targets
    per_target = sum(model.width(l) for l in range(layers + 1)) * model.bytes_per_scalar
    if math.isinf(budget):
        return 1
    return min(max(1, math.ceil(num_targets * per_target / budget)), max(num_targets, 1))


def _smallest_fitting(groups, num_targets: int, start: int, mem_budget: float, make):
    """Linear scan over R from ``start``; a candidate is dropped at its first oversized batch."""
    for R in range(start, num_targets + 1):
        plan = []
        for t in groups(R):
            b = make(t)
            if b.est_memory_bytes > mem_budget and R < num_targets:
                break
            plan.append(b)
        else:
            if max(b.est_memory_bytes for b in plan) <= mem_budget:
                return R, plan
    worst = max(plan, key=lambda b: (b.est_memory_bytes, -int(b.target_vertices[0])))
    v = int(worst.target_vertices[0])
    raise CapacityError(
        f"vertex {v} alone needs {worst.est_memory_bytes} bytes, budget is {mem_budget:g}",
        vertex=v,
    )


def plan_cobatch(sub: DependencySubgraph, g: Graph, layers: int, cfg: SamplingConfig | None,
                 mem_budget: float, model: ModelSpec, batches: int | None = None) -> BatchPlan:
    """Smallest R whose fetch-then-split batches each fit ``mem_budget``.

    Targets are the server's inner vertices, split by balanced min-cut over
    their induced subgraph; dependencies come only from ``sub``. Pass
    ``batches`` to force a specific R instead of searching.
    """
    if not mem_budget > 0:
        raise InputError("mem_budget must be > 0")
    targets = sub.inner_vertices
    if targets.size == 0:
        return BatchPlan(sub.server_id, 1, (), FETCH_THEN_SPLIT)
    allowed = _mask(g.num_vertices, sub.vertices)
    target_graph = g.induced(targets)

    def groups(R: int) -> list[np.ndarray]:
        return _split_targets(g, targets, R, target_graph)

    def make(t: np.ndarray) -> Batch:
        return cobatch(g, t, allowed, layers, cfg, model)

    if batches is not None:
        if not 1 <= batches <= targets.size:
            raise InputError(f"batches must lie in [1, {targets.size}]")
        plan = [make(t) for t in groups(batches)]
        return BatchPlan(sub.server_id, batches, tuple(plan), FETCH_THEN_SPLIT)

    start = _lower_bound_R(targets.size, layers, model, mem_budget)
    R, plan = _smallest_fitting(groups, targets.size, start, mem_budget, make)
    return BatchPlan(sub.server_id, R, tuple(plan), FETCH_THEN_SPLIT)


def plan_minibatch_baseline(g: Graph, gpu_partition: Partition, gpu_id: int, layers: int,
                            fanout: int | None, mem_budget: float, model: ModelSpec,
                            seed: int = 0, servers_gpus: int | None = None,
                            batches: int | None = None) -> BatchPlan:
    """Split-then-fetch: contiguous chunks of the GPU's vertices, each sampling
    up to ``fanout`` neighbors per vertex per layer from the whole graph.

    ``servers_gpus`` (GPUs per server) only fills in ``server_id`` on the plan.
    """
    if not mem_budget > 0:
        raise InputError("mem_budget must be > 0")
    if not 0 <= gpu_id < gpu_partition.num_parts:
        raise InputError(f"gpu_id {gpu_id} outside [0, {gpu_partition.num_parts})")
    targets = gpu_partition.members(gpu_id)
    server_id = gpu_id // servers_gpus if servers_gpus else 0
    k = UNLIMITED if fanout is None else fanout

    def make(chunk: np.ndarray) -> Batch:
        hops, _ = kernels.closure_hops(g.row_offsets, g.col_indices,
                                       _mask(g.num_vertices, chunk), None, None,
                                       layers, k, seed)
        return _make_batch(chunk, hops, layers, model)

    def groups(R: int) -> list[np.ndarray]:
        return np.array_split(targets, R)

    if targets.size == 0:
        return BatchPlan(server_id, 1, (), SPLIT_THEN_FETCH, gpu_id)
    if batches is not None:
        if not 1 <= batches <= targets.size:
            raise InputError(f"batches must lie in [1, {targets.size}]")
        plan = [make(t) for t in groups(batches)]
        return BatchPlan(server_id, batches, tuple(plan), SPLIT_THEN_FETCH, gpu_id)
    start = _lower_bound_R(targets.size, layers, model, mem_budget)
    R, plan = _smallest_fitting(groups, targets.size, start, mem_budget, make)
    return BatchPlan(server_id, R, tuple(plan), SPLIT_THEN_FETCH, gpu_id)
