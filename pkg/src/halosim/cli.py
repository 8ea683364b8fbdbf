"""Command-line entry point.

Every command accepts ``--config FILE.json``; explicit flags override the
file, which overrides built-in defaults. ``--seed`` falls back to the
``GRANNDIS_SIM_SEED`` environment variable, then to 0.

Exit codes: 0 success, 1 input error, 2 capacity error. Failures print one
line ``ERROR <category>: <detail>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from typing import Any

from .batching import plan_cobatch, plan_minibatch_baseline
from .costmodel import (
    ClusterSpec,
    ModelSpec,
    WorkloadSpec,
    check_validity,
    crossover_layer,
    speedup_threshold,
    t_preload,
    t_prev,
    t_sampling,
)
from .errors import CapacityError, ContractError, InputError
from .extract import DEFAULT_FANOUT, DEFAULT_MAX_HOP, SamplingConfig, dump_subgraph, extract_full, extract_sampled
from .graph import Graph, gen_planted_partition_graph, gen_random_graph, load_edge_list, save_edge_list
from .partition import (
    DEFAULT_EPSILON,
    Partition,
    evaluate_cut,
    hierarchical_partition,
    load_partition,
    save_partition,
    server_partition_of,
)
from .reference import equivalence_check
from .sim import SimOptions, Strategy, breakdown_csv, simulate_epoch

SEED_ENV = "GRANNDIS_SIM_SEED"

DEFAULTS: dict[str, Any] = {
    "servers": 1,
    "gpus": 1,
    "mode": "mincut",
    "epsilon": DEFAULT_EPSILON,
    "layers": 3,
    "hidden": 64,
    "feature_dim": 64,
    "d_alpha": 2.0,
    "alpha": 0.3,
    "strategy": "full-graph",
    "server": 0,
    "backward_multiplier": 2.0,
}


class Settings:
    """Flag > config file > default lookup."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._config: dict[str, Any] = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read config {args.config}: {exc}") from None
            if not isinstance(raw, dict):
                raise InputError("config file must hold a JSON object")
            self._config = {k.replace("-", "_"): v for k, v in raw.items()}

    def get(self, key: str, default: Any = None) -> Any:
        value = self._args.get(key)
        if value is not None:
            return value
        if key in self._config:
            return self._config[key]
        return DEFAULTS.get(key, default)

    def require(self, key: str) -> Any:
        value = self.get(key)
        if value is None:
            raise InputError(f"missing --{key.replace('_', '-')}")
        return value

    def seed(self) -> int:
        value = self.get("seed")
        if value is None:
            value = os.environ.get(SEED_ENV, 0)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise InputError(f"seed must be an integer, got {value!r}") from None

    @property
    def config(self) -> dict[str, Any]:
        return self._config


# ---------------------------------------------------------------------------
# shared loaders


def _fanout_value(raw) -> int | None:
    if raw is None or raw == "unlimited":
        return None
    k = int(raw)
    return None if k < 0 else k


def _sampling(st: Settings, force: bool = False) -> SamplingConfig | None:
    m, k = st.get("max_hop"), st.get("fanout")
    if m is None and k is None and not force:
        return None
    return SamplingConfig(
        max_hop=int(m) if m is not None else DEFAULT_MAX_HOP,
        fanout=_fanout_value(k) if k is not None else DEFAULT_FANOUT,
        seed=st.seed(),
    )


def _load_graph(st: Settings) -> Graph:
    path = st.require("graph")
    try:
        return load_edge_list(path, undirected=not st.get("directed", False))
    except FileNotFoundError:
        raise InputError(f"graph file not found: {path}") from None


def _load_partitions(st: Settings, g: Graph) -> tuple[Partition, Partition, int]:
    path = st.require("partition")
    try:
        gp, header_gps = load_partition(path)
    except FileNotFoundError:
        raise InputError(f"partition file not found: {path}") from None
    if gp.assignment.shape[0] != g.num_vertices:
        raise InputError(
            f"partition has {gp.assignment.shape[0]} entries, graph has {g.num_vertices} vertices"
        )
    gps = header_gps or int(st.get("gpus"))
    if gp.num_parts % gps:
        raise InputError(f"{gp.num_parts} parts cannot be grouped {gps} per server")
    return server_partition_of(gp, gps), gp, gps


def _load_cluster(st: Settings) -> ClusterSpec:
    src = st.require("cluster")
    if isinstance(src, dict):
        return ClusterSpec.from_dict(src)
    try:
        return ClusterSpec.from_json(src)
    except FileNotFoundError:
        raise InputError(f"cluster file not found: {src}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"cluster file {src}: {exc}") from None


def _model(st: Settings) -> ModelSpec:
    return ModelSpec(
        layers=int(st.get("layers")),
        hidden_dim=int(st.get("hidden")),
        feature_dim=int(st.get("feature_dim")),
        d_alpha=float(st.get("d_alpha")),
    )


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_gen(st: Settings) -> int:
    n = int(st.require("n"))
    seed = st.seed()
    parts = st.get("parts")
    if parts is not None:
        g = gen_planted_partition_graph(n, int(parts), float(st.require("p_in")),
                                        float(st.require("p_out")), seed)
    else:
        g = gen_random_graph(n, float(st.require("avg_degree")), seed)
    save_edge_list(g, st.require("out"))
    return 0


def cmd_partition(st: Settings) -> int:
    g = _load_graph(st)
    servers, gpus = int(st.get("servers")), int(st.get("gpus"))
    _, gp = hierarchical_partition(g, servers, gpus, st.get("mode"), st.seed(),
                                   float(st.get("epsilon")))
    save_partition(gp, st.require("out"), gpus_per_server=gpus)
    return 0


def _subgraph(st: Settings, g, sp, server, layers):
    cfg = _sampling(st)
    if cfg is None:
        return extract_full(g, sp, server, layers), None
    return extract_sampled(g, sp, server, cfg), cfg


def cmd_extract(st: Settings) -> int:
    g = _load_graph(st)
    sp, _, _ = _load_partitions(st, g)
    sub, _ = _subgraph(st, g, sp, int(st.get("server")), int(st.get("layers")))
    out = st.get("out")
    if out is None:
        raise InputError("missing --out")
    dump_subgraph(sub, out)
    return 0


def _mem_budget(st: Settings, cluster: ClusterSpec | None = None) -> float:
    raw = st.get("mem_budget")
    if raw is not None:
        budget = float(raw)
        if not budget > 0:
            raise InputError("--mem-budget must be > 0")
        return budget
    if cluster is not None:
        return cluster.gpu_mem_bytes * cluster.gpus_per_server
    return math.inf


def cmd_plan(st: Settings) -> int:
    g = _load_graph(st)
    sp, gp, gps = _load_partitions(st, g)
    model = _model(st)
    server = int(st.get("server"))
    sub, cfg = _subgraph(st, g, sp, server, model.layers)
    budget = _mem_budget(st)
    batches = st.get("batches")
    plan = plan_cobatch(sub, g, model.layers, cfg, budget, model,
                        batches=int(batches) if batches is not None else None)
    report = {"budget_bytes": None if math.isinf(budget) else budget, "cobatch": plan.to_dict()}
    if st.get("baseline"):
        per_gpu_budget = budget / gps
        report["split_then_fetch"] = [
            plan_minibatch_baseline(g, gp, server * gps + d, model.layers,
                                    _fanout_value(st.get("baseline_fanout")), per_gpu_budget,
                                    model, seed=st.seed(), servers_gpus=gps).to_dict()
            for d in range(gps)
        ]
    _write_text(st.get("out"), _json_text(report))
    return 0


def _sim_options(st: Settings) -> SimOptions:
    window = st.get("sync_window")
    return SimOptions(
        pass_multiplier=float(st.get("backward_multiplier")),
        overlap_window=float(window) if window is not None else None,
        first_epoch=bool(st.get("first_epoch", False)),
    )


def _run_strategy(g, sp, gp, cluster, model, strategy: Strategy, st: Settings, options):
    cfg = None
    plans = None
    if strategy is Strategy.PRELOAD_EAS:
        cfg = _sampling(st, force=True)
    elif strategy is Strategy.COBATCH:
        cfg = _sampling(st)
        budget = _mem_budget(st, cluster)
        batches = st.get("batches")
        plans = []
        for s in range(cluster.num_servers):
            if cfg is None:
                sub = extract_full(g, sp, s, model.layers)
            else:
                sub = extract_sampled(g, sp, s, cfg)
            plans.append(plan_cobatch(sub, g, model.layers, cfg, budget, model,
                                      batches=int(batches) if batches is not None else None))
    return simulate_epoch(g, sp, gp, cluster, model, strategy, cfg=cfg, plan=plans,
                          options=options)


def _strategies(raw) -> list[Strategy]:
    if isinstance(raw, str):
        raw = [s for s in raw.split(",") if s]
    if not raw:
        raise InputError("no strategy given")
    return [Strategy.parse(s) for s in raw]


def cmd_simulate(st: Settings) -> int:
    g = _load_graph(st)
    sp, gp, _ = _load_partitions(st, g)
    cluster = _load_cluster(st)
    model = _model(st)
    options = _sim_options(st)
    bds = [_run_strategy(g, sp, gp, cluster, model, strategy, st, options)
           for strategy in _strategies(st.get("strategy"))]
    _write_text(st.get("out"), breakdown_csv(bds))
    return 0


def cmd_validate(st: Settings) -> int:
    g = _load_graph(st)
    sp, _, _ = _load_partitions(st, g)
    layers = int(st.get("layers"))
    cfg = _sampling(st)
    hidden = int(st.get("validate_hidden") or 8)
    report = equivalence_check(g, sp, layers, st.seed(), hidden_dim=hidden,
                               feature_dim=hidden, cfg=cfg)
    lines = [f"server {s} deviation {d:g}" for s, d in enumerate(report.per_server)]
    lines.append(f"max_deviation {report.max_deviation:g}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if st.get("out"):
        _write_text(st.get("out"), text)
    return 0


def cmd_report(st: Settings) -> int:
    cluster = _load_cluster(st)
    model = _model(st)
    if st.get("graph"):
        g = _load_graph(st)
        w = WorkloadSpec.of(g)
    else:
        w = WorkloadSpec(int(st.require("vertices")), int(st.require("edges")))
    alpha = float(st.get("alpha"))
    cfg = _sampling(st, force=True)
    validity = check_validity(w, cluster, model, cfg, alpha)
    out = {
        "workload": {"V": w.V, "E": w.E, "D": w.D},
        "cluster": cluster.to_dict(),
        "model": {"layers": model.layers, "d_alpha": model.d_alpha},
        "sampling": {"max_hop": cfg.max_hop, "fanout": cfg.fanout, "alpha": alpha},
        "t_prev_s": t_prev(w, cluster),
        "t_preload_s": t_preload(w, cluster, model),
        "speedup_threshold": speedup_threshold(w.D, model.d_alpha, model.layers)
        if w.D > 0 else None,
        "compute_to_external_ratio": cluster.compute_vps / cluster.external_bw_vps,
        "crossover_layer": crossover_layer(w, cluster, model.d_alpha),
        "validity": {
            "valid": validity.valid,
            "violations": [v.message for v in validity.violations],
        },
    }
    if cfg.fanout is not None and cfg.max_hop >= 1 and cfg.fanout >= 1:
        out["t_sampling_s"] = t_sampling(w, cluster, cfg, alpha)
    if st.get("graph") and st.get("partition"):
        sp, _, _ = _load_partitions(st, g)
        cut = evaluate_cut(g, sp)
        out["server_cut"] = {"edge_cut": cut.edge_cut, "cut_fraction": cut.cut_fraction,
                             "balance_ratio": cut.balance_ratio}
    _write_text(st.get("out"), _json_text(out))
    return 0


SWEEP_AXES = ("layers", "hidden", "strategy", "max_hop", "fanout", "external_bw")
SWEEP_COLUMNS = list(SWEEP_AXES) + ["compute_s", "internal_s", "external_s", "sync_s", "total_s",
                                    "halo_vertices", "R", "error"]


def _sweep_graph(spec, seed: int) -> Graph:
    if isinstance(spec, str):
        return load_edge_list(spec)
    if not isinstance(spec, dict):
        raise InputError("sweep 'graph' must be a path or a generator object")
    if "parts" in spec:
        return gen_planted_partition_graph(int(spec["n"]), int(spec["parts"]),
                                           float(spec["p_in"]), float(spec["p_out"]),
                                           int(spec.get("seed", seed)))
    return gen_random_graph(int(spec["n"]), float(spec["avg_degree"]), int(spec.get("seed", seed)))


def cmd_sweep(st: Settings) -> int:
    cfg_data = st.config
    grid = cfg_data.get("grid")
    if not isinstance(grid, dict) or not grid:
        raise InputError("sweep config needs a non-empty 'grid' object")
    axes = {}
    for key, value in grid.items():
        key = key.replace("-", "_")
        if key not in SWEEP_AXES:
            raise InputError(f"unknown sweep axis {key!r}")
        if not isinstance(value, list) or not value:
            raise InputError(f"sweep axis {key!r} has no values")
        axes[key] = value
    seed = st.seed()
    g = _sweep_graph(st.require("graph"), seed)
    cluster = _load_cluster(st)
    part = cfg_data.get("partition", {})
    if isinstance(part, str):
        gp, hdr = load_partition(part)
        sp = server_partition_of(gp, hdr or cluster.gpus_per_server)
    else:
        sp, gp = hierarchical_partition(g, cluster.num_servers, cluster.gpus_per_server,
                                        part.get("mode", "mincut"), int(part.get("seed", seed)))
    options = _sim_options(st)
    base = {
        "layers": int(st.get("layers")),
        "hidden": int(st.get("hidden")),
        "strategy": "full-graph",
        "max_hop": DEFAULT_MAX_HOP,
        "fanout": DEFAULT_FANOUT,
        "external_bw": cluster.external_bw_vps,
    }
    grid_axes = [a for a in SWEEP_AXES if a in axes]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for combo in itertools.product(*(axes[a] for a in grid_axes)):
        point = dict(base, **dict(zip(grid_axes, combo)))
        row = [point[a] for a in SWEEP_AXES]
        try:
            model = ModelSpec(layers=int(point["layers"]), hidden_dim=int(point["hidden"]),
                              feature_dim=int(st.get("feature_dim")),
                              d_alpha=float(st.get("d_alpha")))
            cl = ClusterSpec.from_dict(dict(cluster.to_dict(),
                                            external_bw_vps=float(point["external_bw"])))
            strategy = Strategy.parse(point["strategy"])
            sampling = SamplingConfig(int(point["max_hop"]), _fanout_value(point["fanout"]), seed)
            plans = None
            use_cfg = sampling if strategy in (Strategy.PRELOAD_EAS, Strategy.COBATCH) else None
            if strategy is Strategy.COBATCH:
                budget = float(cfg_data.get("mem_budget", cl.gpu_mem_bytes * cl.gpus_per_server))
                plans = [plan_cobatch(extract_sampled(g, sp, s, sampling), g, model.layers,
                                      sampling, budget, model)
                         for s in range(cl.num_servers)]
            bd = simulate_epoch(g, sp, gp, cl, model, strategy, cfg=use_cfg, plan=plans,
                                options=options)
            crit = bd.critical
            row += [repr(float(x)) for x in (crit.compute_s, crit.internal_s, crit.external_s,
                                             crit.sync_s, crit.total_s)]
            row += [bd.features_preloaded, max(bd.meta.get("R", [1])), ""]
        except (InputError, CapacityError) as exc:
            row += [""] * 7 + [f"{exc.category}: {exc}"]
        writer.writerow(row)
    _write_text(st.get("out"), buf.getvalue())
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")


def _graph_flags(p: argparse.ArgumentParser, partition: bool = True) -> None:
    p.add_argument("--graph")
    p.add_argument("--directed", action="store_true", default=None)
    if partition:
        p.add_argument("--partition")
        p.add_argument("--gpus", type=int, help="GPUs per server if the partition file lacks it")


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layers", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--d-alpha", type=float)


def _sampling_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-hop", type=int)
    p.add_argument("--fanout", help="integer, or -1 / 'unlimited'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halosim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic graph")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--avg-degree", type=float)
    p.add_argument("--parts", type=int, help="planted-partition block count")
    p.add_argument("--p-in", type=float)
    p.add_argument("--p-out", type=float)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("partition", help="server/GPU hierarchical partition")
    _common(p)
    _graph_flags(p, partition=False)
    p.add_argument("--servers", type=int)
    p.add_argument("--gpus", type=int)
    p.add_argument("--mode", choices=["mincut", "random"])
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("extract", help="dump a server's dependency subgraph")
    _common(p)
    _graph_flags(p)
    p.add_argument("--server", type=int)
    p.add_argument("--layers", type=int)
    _sampling_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("plan", help="cooperative batch plan for one server")
    _common(p)
    _graph_flags(p)
    _model_flags(p)
    _sampling_flags(p)
    p.add_argument("--server", type=int)
    p.add_argument("--mem-budget", type=float, help="bytes per co-batch")
    p.add_argument("--batches", type=int, help="force this many batches")
    p.add_argument("--baseline", action="store_true", default=None,
                   help="also plan split-then-fetch batches for each GPU of the server")
    p.add_argument("--baseline-fanout", help="per-layer fanout of the baseline sampler")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="per-GPU epoch time breakdown (CSV)")
    _common(p)
    _graph_flags(p)
    _model_flags(p)
    _sampling_flags(p)
    p.add_argument("--cluster")
    p.add_argument("--strategy", help="full-graph, preload, preload-eas, cobatch (comma list)")
    p.add_argument("--mem-budget", type=float)
    p.add_argument("--batches", type=int)
    p.add_argument("--backward-multiplier", type=float)
    p.add_argument("--sync-window", type=float,
                   help="seconds of compute that can hide gradient sync (default: all)")
    p.add_argument("--first-epoch", action="store_true", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="check preloaded outputs against a full pass")
    _common(p)
    _graph_flags(p)
    _sampling_flags(p)
    p.add_argument("--layers", type=int)
    p.add_argument("--hidden", dest="validate_hidden", type=int)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="analytic epoch-time model (JSON)")
    _common(p)
    _graph_flags(p)
    _model_flags(p)
    _sampling_flags(p)
    p.add_argument("--cluster")
    p.add_argument("--vertices", type=int)
    p.add_argument("--edges", type=int)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", help="grid of simulations from a JSON config (CSV)")
    _common(p)
    _model_flags(p)
    p.add_argument("--graph")
    p.add_argument("--cluster")
    p.add_argument("--backward-multiplier", type=float)
    p.add_argument("--sync-window", type=float)
    p.add_argument("--first-epoch", action="store_true", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(Settings(args))
    except CapacityError as exc:
        print(f"ERROR capacity: {exc}", file=sys.stderr)
        return 2
    except (InputError, ContractError, ValueError) as exc:
        print(f"ERROR input: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
