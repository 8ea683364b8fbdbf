"""Closed-form epoch-time model for full-graph, preloaded and sampled training.

All rates are in vertices per second; bandwidths are per GPU. The growth
term ``D^alpha L`` is read as the product ``D_alpha * L`` (and ``m^alpha k``
as ``m**alpha * k``).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .errors import InputError
from .extract import SamplingConfig

CROSSOVER_SCAN_LIMIT = 1024


@dataclass(frozen=True)
class ClusterSpec:
    num_servers: int
    gpus_per_server: int
    compute_vps: float
    internal_bw_vps: float
    external_bw_vps: float
    gpu_mem_bytes: float = math.inf

    def __post_init__(self):
        if self.num_servers < 1 or self.gpus_per_server < 1:
            raise InputError("num_servers and gpus_per_server must be >= 1")
        for name in ("compute_vps", "internal_bw_vps", "external_bw_vps", "gpu_mem_bytes"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be > 0")

    @property
    def num_gpus(self) -> int:
        return self.num_servers * self.gpus_per_server

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> ClusterSpec:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> ClusterSpec:
        keys = ("num_servers", "gpus_per_server", "compute_vps", "internal_bw_vps",
                "external_bw_vps")
        missing = [k for k in keys if k not in data]
        if missing:
            raise InputError(f"cluster spec missing keys: {', '.join(missing)}")
        return cls(
            num_servers=int(data["num_servers"]),
            gpus_per_server=int(data["gpus_per_server"]),
            compute_vps=float(data["compute_vps"]),
            internal_bw_vps=float(data["internal_bw_vps"]),
            external_bw_vps=float(data["external_bw_vps"]),
            gpu_mem_bytes=float(data.get("gpu_mem_bytes", math.inf)),
        )

    def to_dict(self) -> dict:
        return {
            "num_servers": self.num_servers,
            "gpus_per_server": self.gpus_per_server,
            "compute_vps": self.compute_vps,
            "internal_bw_vps": self.internal_bw_vps,
            "external_bw_vps": self.external_bw_vps,
            "gpu_mem_bytes": self.gpu_mem_bytes,
        }


@dataclass(frozen=True)
class ModelSpec:
    layers: int
    hidden_dim: int = 64
    feature_dim: int = 64
    d_alpha: float = 2.0
    bytes_per_scalar: int = 4

    def __post_init__(self):
        if self.layers < 1:
            raise InputError("layers must be >= 1")
        if self.hidden_dim < 1 or self.feature_dim < 1:
            raise InputError("hidden_dim and feature_dim must be >= 1")
        if self.d_alpha < 1:
            raise InputError("d_alpha must be >= 1")

    def width(self, layer: int) -> int:
        return self.feature_dim if layer == 0 else self.hidden_dim

    def num_parameters(self) -> int:
        return self.hidden_dim * self.feature_dim + (self.layers - 1) * self.hidden_dim ** 2


@dataclass(frozen=True)
class WorkloadSpec:
    V: int
    E: int

    def __post_init__(self):
        if self.V < 1 or self.E < 0:
            raise InputError("need V >= 1 and E >= 0")

    @property
    def D(self) -> float:
        return self.E / self.V

    @classmethod
    def of(cls, g) -> WorkloadSpec:
        return cls(g.num_vertices, g.num_edges)


def t_prev(w: WorkloadSpec, c: ClusterSpec) -> float:
    """Epoch time of conventional distributed full-graph training."""
    ns, ng = c.num_servers, c.gpus_per_server
    n = ns * ng
    compute = w.V / (n * c.compute_vps)
    internal = ((ng - 1) / (ng * ns)) / c.internal_bw_vps
    external = (1 - 1 / ns) / c.external_bw_vps
    return compute + (w.E / n) * (internal + external)


def t_prev_terms(w: WorkloadSpec, c: ClusterSpec) -> dict[str, float]:
    ns, ng = c.num_servers, c.gpus_per_server
    n = ns * ng
    return {
        "compute": w.V / (n * c.compute_vps),
        "internal": (w.E / n) * ((ng - 1) / (ng * ns)) / c.internal_bw_vps,
        "external": (w.E / n) * (1 - 1 / ns) / c.external_bw_vps,
    }


def t_preload(w: WorkloadSpec, c: ClusterSpec, m: ModelSpec) -> float:
    """Epoch time with server-level preloading of the L-hop dependencies."""
    n = c.num_servers * c.gpus_per_server
    growth = m.d_alpha * m.layers
    ng = c.gpus_per_server
    return (w.V * growth / (n * c.compute_vps)
            + (w.E * growth / n) * ((ng - 1) / ng) / c.internal_bw_vps)


def sampling_factor(cfg: SamplingConfig, alpha: float) -> float:
    if cfg.fanout is None:
        raise InputError("the sampling cost model needs a finite fanout")
    return cfg.max_hop ** alpha * cfg.fanout


def t_sampling(w: WorkloadSpec, c: ClusterSpec, cfg: SamplingConfig, alpha: float) -> float:
    """Epoch time with boundary-sampled preloading.

    The internal coefficient ``(Ns*Ng - 1) / B_internal`` is kept exactly in
    its published form, without the per-GPU normalization used by
    :func:`t_preload`.
    """
    if cfg.max_hop < 1 or cfg.fanout is None or cfg.fanout < 1:
        raise InputError("t_sampling needs max_hop >= 1 and a finite fanout >= 1")
    n = c.num_servers * c.gpus_per_server
    growth = sampling_factor(cfg, alpha)
    return (w.V * growth / (n * c.compute_vps)
            + (w.E * growth / n) * (n - 1) / c.internal_bw_vps)


def speedup_threshold(D: float, d_alpha: float, layers: int) -> float:
    """Minimum ``C / B_external`` for preloading to beat the baseline."""
    if D <= 0:
        raise InputError("D must be > 0")
    return (d_alpha * layers - 1) / D


@dataclass(frozen=True)
class Violation:
    name: str
    quantity: str
    value: float
    bound: float
    message: str


@dataclass(frozen=True)
class ValidityReport:
    preload_factor: float
    num_gpus: int
    sampling_factor: float | None
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return not self.violations

    def names(self) -> list[str]:
        return [v.name for v in self.violations]


def check_validity(w: WorkloadSpec, c: ClusterSpec, m: ModelSpec,
                   cfg: SamplingConfig | None = None, alpha: float | None = None
                   ) -> ValidityReport:
    """Flag parameter points outside the ranges where the model applies.

    Checks ``1 < D_alpha*L <= Ns*Ng`` and, when a sampling config and
    ``alpha`` are given, ``1 < m^alpha*k < D_alpha*L``. Reporting only; the
    ``t_sampling`` internal-term normalization caveat applies regardless.
    """
    del w
    growth = m.d_alpha * m.layers
    n = c.num_servers * c.gpus_per_server
    out = []
    if not growth > 1:
        out.append(Violation("preload_factor_too_small", "D_alpha*L", growth, 1.0,
                             f"D_alpha*L = {growth:g} must exceed 1"))
    if growth > n:
        out.append(Violation("preload_factor_exceeds_gpus", "D_alpha*L", growth, float(n),
                             f"D_alpha*L = {growth:g} exceeds Ns*Ng = {n}"))
    samp = None
    if cfg is not None and alpha is not None and cfg.fanout is not None:
        samp = sampling_factor(cfg, alpha)
        if not samp > 1:
            out.append(Violation("sampling_factor_too_small", "m^alpha*k", samp, 1.0,
                                 f"m^alpha*k = {samp:g} must exceed 1"))
        if samp >= growth:
            out.append(Violation("sampling_exceeds_preload", "m^alpha*k", samp, growth,
                                 f"sampling factor exceeds preload factor "
                                 f"({samp:g} >= {growth:g})"))
    return ValidityReport(growth, n, samp, tuple(out))


def crossover_layer(w: WorkloadSpec, c: ClusterSpec, d_alpha: float,
                    limit: int = CROSSOVER_SCAN_LIMIT) -> int | None:
    """Smallest L with ``t_preload(L) > t_prev``, or None up to ``limit``."""
    base = t_prev(w, c)
    for L in range(1, limit + 1):
        if t_preload(w, c, ModelSpec(layers=L, d_alpha=d_alpha)) > base:
            return L
    return None
