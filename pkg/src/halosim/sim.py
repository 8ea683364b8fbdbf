"""Per-epoch time breakdown of distributed GNN training strategies.

Volumes are counted in vertex-vectors for one forward pass; times apply the
backward mirror (``SimOptions.pass_multiplier``) on top. Layers are
bulk-synchronous and a worker's epoch time is the sum of its components;
the epoch takes as long as the slowest worker.

Vertex placement: inner vertices live on the GPU given by the GPU partition.
A halo vertex (or any vertex pulled into a batch from outside the server)
lives on the GPU of its lowest-id parent, i.e. the lowest-id vertex one hop
closer to the targets that depends on it.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .batching import BatchPlan
from .costmodel import ClusterSpec, ModelSpec
from .errors import ConsistencyError, InputError
from .extract import SamplingConfig, extract_full, extract_sampled
from .graph import Graph
from .partition import Partition


class Strategy(Enum):
    FULL_GRAPH_BASELINE = "full-graph"
    SHARED_PRELOAD = "preload"
    PRELOAD_EAS = "preload-eas"
    COBATCH = "cobatch"

    @classmethod
    def parse(cls, name: str | Strategy) -> Strategy:
        if isinstance(name, cls):
            return name
        for s in cls:
            if name in (s.value, s.name, s.name.lower()):
                return s
        raise InputError(f"unknown strategy {name!r}")


@dataclass(frozen=True)
class SimOptions:
    pass_multiplier: float = 2.0
    # None: gradient all-reduce fully hidden behind compute
    overlap_window: float | None = None
    # comm rates are given for vectors of this width; None disables scaling
    reference_width: int | None = None
    first_epoch: bool = False
    charge_loads: bool = False


@dataclass(frozen=True)
class WorkerBreakdown:
    server: int
    gpu: int
    compute_s: float
    internal_s: float
    external_s: float
    sync_s: float
    computed_vertices: int = 0
    internal_vertices: int = 0
    external_vertices: int = 0
    features_preloaded: int = 0
    loaded_vertices: int = 0

    @property
    def total_s(self) -> float:
        return self.compute_s + self.internal_s + self.external_s + self.sync_s


@dataclass(frozen=True)
class CostBreakdown:
    strategy: Strategy
    workers: tuple[WorkerBreakdown, ...]
    layers: int
    steps: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def critical(self) -> WorkerBreakdown:
        # first worker (server, gpu order) among the slowest
        return max(self.workers, key=lambda w: (w.total_s, -w.gpu))

    @property
    def total_s(self) -> float:
        return self.critical.total_s

    compute_s = property(lambda self: self.critical.compute_s)
    internal_comm_s = property(lambda self: self.critical.internal_s)
    external_comm_s = property(lambda self: self.critical.external_s)
    grad_sync_s = property(lambda self: self.critical.sync_s)

    def _sum(self, name: str) -> int:
        return sum(getattr(w, name) for w in self.workers)

    internal_vertices_moved = property(lambda self: self._sum("internal_vertices"))
    external_vertices_moved = property(lambda self: self._sum("external_vertices"))
    features_preloaded = property(lambda self: self._sum("features_preloaded"))
    computed_vertices = property(lambda self: self._sum("computed_vertices"))
    loaded_vertices = property(lambda self: self._sum("loaded_vertices"))


# ---------------------------------------------------------------------------
# volume counting


@dataclass
class _Volumes:
    computed: np.ndarray
    internal: np.ndarray
    external: np.ndarray
    preloaded: np.ndarray
    loaded: np.ndarray

    @classmethod
    def zeros(cls, num_gpus: int) -> _Volumes:
        z = lambda: np.zeros(num_gpus, dtype=np.int64)  # noqa: E731
        return cls(z(), z(), z(), z(), z())


def _place(g: Graph, depth: np.ndarray, owner: np.ndarray) -> np.ndarray:
    """Fill ``owner`` for present vertices lacking one, by increasing depth."""
    owner = owner.copy()
    rows, cols = g.edge_array()
    present = depth >= 0
    max_d = int(depth.max()) if present.any() else 0
    for d in range(1, max_d + 1):
        need = (depth == d) & (owner < 0)
        if not need.any():
            continue
        # edge rows -> cols: row depends on col; parent = dependent row one hop closer
        hit = need[cols] & (depth[rows] == d - 1)
        child, parent = cols[hit], rows[hit]
        order = np.lexsort((parent, child))
        child, parent = child[order], parent[order]
        uniq, first = np.unique(child, return_index=True)
        owner[uniq] = owner[parent[first]]
    if (owner[present] < 0).any():
        raise ConsistencyError("vertex without a placement parent")
    return owner


def _layer_traffic(g: Graph, depth: np.ndarray, owner: np.ndarray, layers: int,
                   num_gpus: int, gpus_per_server: int, vol: _Volumes) -> None:
    """Add compute and fetch volumes for one set of resident vertices.

    A present vertex at depth ``d`` is evaluated at layers ``1..layers-d``;
    evaluating ``v`` on GPU ``a`` at layer ``l`` needs each neighbor's
    layer-``l-1`` vector, fetched once per (neighbor, GPU, layer) when the
    neighbor lives elsewhere.
    """
    present = np.flatnonzero(depth >= 0)
    evals = np.clip(layers - depth[present], 0, None)
    np.add.at(vol.computed, owner[present], evals)
    rows, cols = g.edge_array()
    keep = (depth[rows] >= 0) & (depth[rows] < layers) & (depth[cols] >= 0)
    rows, cols = rows[keep], cols[keep]
    dst = owner[rows]
    src = owner[cols]
    remote = dst != src
    rows, cols, dst, src = rows[remote], cols[remote], dst[remote], src[remote]
    if rows.size == 0:
        return
    key = cols * num_gpus + dst
    order = np.lexsort((depth[rows], key))
    key, dmin, src, dst = key[order], depth[rows][order], src[order], dst[order]
    uniq, first = np.unique(key, return_index=True)
    need = layers - dmin[first]
    dst, src = dst[first], src[first]
    internal = (src // gpus_per_server) == (dst // gpus_per_server)
    np.add.at(vol.internal, dst[internal], need[internal])
    np.add.at(vol.external, dst[~internal], need[~internal])


def _check_partitions(g: Graph, sp: Partition, gp: Partition, c: ClusterSpec) -> None:
    if sp.assignment.shape[0] != g.num_vertices or gp.assignment.shape[0] != g.num_vertices:
        raise InputError("partition length does not match the graph")
    if sp.num_parts != c.num_servers or gp.num_parts != c.num_gpus:
        raise InputError(
            f"partitions ({sp.num_parts} servers, {gp.num_parts} GPUs) do not match the "
            f"cluster ({c.num_servers} x {c.gpus_per_server})"
        )
    if not np.array_equal(gp.assignment // c.gpus_per_server, sp.assignment):
        raise InputError("GPU partition does not refine the server partition")


def _server_volumes(g, sp, gp, c, layers, subs, vol) -> None:
    for sub in subs:
        depth = sub.depth_array(g.num_vertices)
        owner = np.full(g.num_vertices, -1, dtype=np.int64)
        owner[sub.inner_vertices] = gp.assignment[sub.inner_vertices]
        owner = _place(g, depth, owner)
        _layer_traffic(g, depth, owner, layers, c.num_gpus, c.gpus_per_server, vol)
        np.add.at(vol.preloaded, owner[sub.halo_vertices], 1)


def _cobatch_volumes(g, sp, gp, c, layers, plans, vol, options) -> int:
    steps = 1
    for s in range(c.num_servers):
        plan = plans[s]
        if plan.server_id != s:
            raise InputError(f"plan for server {plan.server_id} given in slot {s}")
        steps = max(steps, plan.R)
        seen = np.zeros(g.num_vertices, dtype=bool)
        for b in plan.batches:
            depth = np.full(g.num_vertices, -1, dtype=np.int64)
            depth[b.vertices] = b.depth
            owner = np.full(g.num_vertices, -1, dtype=np.int64)
            inner = b.vertices[sp.assignment[b.vertices] == s]
            owner[inner] = gp.assignment[inner]
            owner = _place(g, depth, owner)
            _layer_traffic(g, depth, owner, layers, c.num_gpus, c.gpus_per_server, vol)
            if plan.R > 1 or options.first_epoch:
                np.add.at(vol.loaded, owner[b.vertices], 1)
            outside = b.vertices[(sp.assignment[b.vertices] != s) & ~seen[b.vertices]]
            seen[outside] = True
            np.add.at(vol.preloaded, owner[outside], 1)
    return steps


def _volumes(g, sp, gp, c, m, strategy, cfg, plans, options) -> tuple[_Volumes, int]:
    vol = _Volumes.zeros(c.num_gpus)
    L = m.layers
    if strategy is Strategy.FULL_GRAPH_BASELINE:
        depth = np.zeros(g.num_vertices, dtype=np.int64)
        _layer_traffic(g, depth, gp.assignment, L, c.num_gpus, c.gpus_per_server, vol)
        return vol, 1
    if strategy is Strategy.SHARED_PRELOAD:
        subs = [extract_full(g, sp, s, L) for s in range(c.num_servers)]
        _server_volumes(g, sp, gp, c, L, subs, vol)
        return vol, 1
    if strategy is Strategy.PRELOAD_EAS:
        subs = [extract_sampled(g, sp, s, cfg) for s in range(c.num_servers)]
        _server_volumes(g, sp, gp, c, L, subs, vol)
        return vol, 1
    steps = _cobatch_volumes(g, sp, gp, c, L, plans, vol, options)
    return vol, steps


def _normalize_plans(plan, num_servers: int) -> list[BatchPlan]:
    if isinstance(plan, BatchPlan):
        plans = [plan]
    elif isinstance(plan, Mapping):
        plans = [plan[s] for s in sorted(plan)]
    else:
        plans = list(plan)
    if len(plans) != num_servers:
        raise InputError(f"need one batch plan per server ({num_servers}), got {len(plans)}")
    return plans


def sync_step_seconds(c: ClusterSpec, m: ModelSpec, options: SimOptions) -> float:
    """Ring all-reduce time of one gradient step, before overlap."""
    n = c.num_gpus
    if n == 1:
        return 0.0
    rate = c.external_bw_vps if c.num_servers > 1 else c.internal_bw_vps
    rate *= _width_scale(m, options)
    vectors = m.num_parameters() / m.hidden_dim
    return 2 * (n - 1) / n * vectors / rate


def _width_scale(m: ModelSpec, options: SimOptions) -> float:
    if options.reference_width is None:
        return 1.0
    return options.reference_width / m.hidden_dim


def simulate_epoch(g: Graph, sp: Partition, gp: Partition, c: ClusterSpec, m: ModelSpec,
                   strategy: Strategy | str, cfg: SamplingConfig | None = None,
                   plan: BatchPlan | Sequence[BatchPlan] | Mapping[int, BatchPlan] | None = None,
                   options: SimOptions | None = None) -> CostBreakdown:
    strategy = Strategy.parse(strategy)
    options = options or SimOptions()
    _check_partitions(g, sp, gp, c)
    if strategy is Strategy.COBATCH:
        if plan is None:
            raise InputError("cobatch needs a batch plan")
        plans = _normalize_plans(plan, c.num_servers)
    else:
        if plan is not None:
            raise InputError(f"{strategy.value} takes no batch plan")
        plans = None
    if strategy is Strategy.PRELOAD_EAS and cfg is None:
        raise InputError("preload-eas needs a sampling config")

    vol, steps = _volumes(g, sp, gp, c, m, strategy, cfg, plans, options)
    scale = _width_scale(m, options)
    b_int = c.internal_bw_vps * scale
    b_ext = c.external_bw_vps * scale
    mult = options.pass_multiplier
    sync_total = steps * sync_step_seconds(c, m, options)
    if options.overlap_window is None:
        sync_s = 0.0
    else:
        sync_s = max(0.0, sync_total - options.overlap_window)

    workers = []
    for gpu in range(c.num_gpus):
        internal_s = mult * vol.internal[gpu] / b_int
        if options.charge_loads:
            internal_s += vol.loaded[gpu] / b_int
        external_s = mult * vol.external[gpu] / b_ext
        if options.first_epoch:
            external_s += vol.preloaded[gpu] / b_ext
        workers.append(WorkerBreakdown(
            server=gpu // c.gpus_per_server,
            gpu=gpu,
            compute_s=mult * vol.computed[gpu] / c.compute_vps,
            internal_s=float(internal_s),
            external_s=float(external_s),
            sync_s=sync_s,
            computed_vertices=int(vol.computed[gpu]),
            internal_vertices=int(vol.internal[gpu]),
            external_vertices=int(vol.external[gpu]),
            features_preloaded=int(vol.preloaded[gpu]),
            loaded_vertices=int(vol.loaded[gpu]),
        ))
    meta = {"R": [p.R for p in plans]} if plans else {}
    return CostBreakdown(strategy, tuple(workers), m.layers, steps, meta)


@dataclass(frozen=True)
class ComparisonRow:
    strategy: Strategy
    breakdown: CostBreakdown
    speedup: float


def compare_strategies(g: Graph, sp: Partition, gp: Partition, c: ClusterSpec, m: ModelSpec,
                       strategies: Sequence[Strategy | str], cfg: SamplingConfig | None = None,
                       plan=None, options: SimOptions | None = None) -> list[ComparisonRow]:
    """Simulate each strategy; speedup is relative to the first entry."""
    if not strategies:
        raise InputError("no strategies given")
    rows = []
    base = None
    for name in strategies:
        s = Strategy.parse(name)
        bd = simulate_epoch(g, sp, gp, c, m, s, cfg=cfg,
                            plan=plan if s is Strategy.COBATCH else None, options=options)
        if base is None:
            base = bd.total_s
        rows.append(ComparisonRow(s, bd, base / bd.total_s if bd.total_s > 0 else float("inf")))
    return rows


# ---------------------------------------------------------------------------
# reports

CSV_HEADER = ["strategy", "server", "gpu", "compute_s", "internal_s", "external_s", "sync_s",
              "total_s"]


def _fmt(x: float) -> str:
    return repr(float(x))


def breakdown_rows(bd: CostBreakdown) -> list[list[str]]:
    rows = []
    for w in bd.workers:
        rows.append([bd.strategy.value, str(w.server), str(w.gpu), _fmt(w.compute_s),
                     _fmt(w.internal_s), _fmt(w.external_s), _fmt(w.sync_s), _fmt(w.total_s)])
    crit = bd.critical
    rows.append([bd.strategy.value, "ALL", "ALL", _fmt(crit.compute_s), _fmt(crit.internal_s),
                 _fmt(crit.external_s), _fmt(crit.sync_s), _fmt(crit.total_s)])
    return rows


def breakdown_csv(breakdowns: Sequence[CostBreakdown]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for bd in breakdowns:
        writer.writerows(breakdown_rows(bd))
    return buf.getvalue()


def write_breakdown_csv(breakdowns: Sequence[CostBreakdown], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(breakdown_csv(breakdowns))


# ---------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class AuditReport:
    strategy: Strategy
    expected: dict
    observed: dict

    @property
    def ok(self) -> bool:
        return self.expected == self.observed


def _bfs_hops(g: Graph, inner: set[int], limit: int) -> dict[int, int]:
    hop = {v: 0 for v in inner}
    frontier = sorted(inner)
    for h in range(1, limit + 1):
        nxt = set()
        for v in frontier:
            for u in g.neighbors(v).tolist():
                if u not in hop:
                    hop[u] = h
                    nxt.add(u)
        frontier = sorted(nxt)
    return hop


def _scan_owners(g: Graph, hop: dict[int, int], owner: dict[int, int]) -> dict[int, int]:
    owner = dict(owner)
    by_depth: dict[int, list[int]] = {}
    for v, d in hop.items():
        by_depth.setdefault(d, []).append(v)
    for d in sorted(by_depth):
        if d == 0:
            continue
        todo = {v for v in by_depth[d] if v not in owner}
        parents: dict[int, int] = {}
        for p in sorted(v for v, dd in hop.items() if dd == d - 1):
            for u in g.neighbors(p).tolist():
                if u in todo and u not in parents:
                    parents[u] = p
        for v in todo:
            owner[v] = owner[parents[v]]
    return owner


def _scan_traffic(g, hop, owner, layers, gps, acc) -> None:
    need: dict[tuple[int, int], int] = {}
    for v, d in hop.items():
        if d >= layers:
            continue
        acc["computed"][owner[v]] += layers - d
        for u in g.neighbors(v).tolist():
            if u in hop and owner[u] != owner[v]:
                key = (u, owner[v])
                need[key] = max(need.get(key, 0), layers - d)
    for (u, a), count in need.items():
        kind = "internal" if owner[u] // gps == a // gps else "external"
        acc[kind][a] += count


def volume_audit(breakdown: CostBreakdown, g: Graph, sp: Partition, gp: Partition,
                 c: ClusterSpec, cfg: SamplingConfig | None = None, plan=None,
                 raise_on_mismatch: bool = True) -> AuditReport:
    """Recount every moved and computed vertex with a plain edge scan."""
    L = breakdown.layers
    gps = c.gpus_per_server
    acc = {k: [0] * c.num_gpus for k in ("computed", "internal", "external", "preloaded")}
    strategy = breakdown.strategy
    gpu_of = gp.assignment.tolist()
    server_of = sp.assignment.tolist()
    if strategy is Strategy.FULL_GRAPH_BASELINE:
        hop = {v: 0 for v in range(g.num_vertices)}
        _scan_traffic(g, hop, dict(enumerate(gpu_of)), L, gps, acc)
    elif strategy in (Strategy.SHARED_PRELOAD, Strategy.PRELOAD_EAS):
        for s in range(c.num_servers):
            inner = {v for v in range(g.num_vertices) if server_of[v] == s}
            if strategy is Strategy.SHARED_PRELOAD:
                hop = _bfs_hops(g, inner, L)
            else:
                sub = extract_sampled(g, sp, s, cfg)
                hop = {v: 0 for v in inner}
                hop.update(sub.hop_map())
            owner = _scan_owners(g, hop, {v: gpu_of[v] for v in inner})
            _scan_traffic(g, hop, owner, L, gps, acc)
            for v, d in hop.items():
                if d > 0:
                    acc["preloaded"][owner[v]] += 1
    else:
        for s, p in enumerate(_normalize_plans(plan, c.num_servers)):
            seen = set()
            for b in p.batches:
                hop = dict(zip(b.vertices.tolist(), b.depth.tolist()))
                owner = _scan_owners(g, hop, {v: gpu_of[v] for v in hop if server_of[v] == s})
                _scan_traffic(g, hop, owner, L, gps, acc)
                for v in hop:
                    if server_of[v] != s and v not in seen:
                        seen.add(v)
                        acc["preloaded"][owner[v]] += 1
    expected = {k: tuple(v) for k, v in acc.items()}
    observed = {
        "computed": tuple(w.computed_vertices for w in breakdown.workers),
        "internal": tuple(w.internal_vertices for w in breakdown.workers),
        "external": tuple(w.external_vertices for w in breakdown.workers),
        "preloaded": tuple(w.features_preloaded for w in breakdown.workers),
    }
    report = AuditReport(strategy, expected, observed)
    if raise_on_mismatch and not report.ok:
        diffs = [k for k in expected if expected[k] != observed[k]]
        raise ConsistencyError(f"volume audit mismatch for {strategy.value}: {', '.join(diffs)}")
    return report


def with_options(options: SimOptions | None, **changes) -> SimOptions:
    return replace(options or SimOptions(), **changes)
