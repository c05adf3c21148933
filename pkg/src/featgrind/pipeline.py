"""Mini-batch neighbor sampling and a feature-loading cost simulator.

sample_batches walks the training ids in seeded shuffled order, expands
each batch through per-layer fanout sampling over the stored adjacency,
and records the union frontier (the rows whose features must be
gathered) plus the number of touched edges.  simulate_epoch then prices
an epoch under a codec (full precision, scalar- or vector-quantized), a
static degree-ranked row cache, and a four-knob cost model, splitting
time into sample / load / dequantize / compute stages.  Epoch time is
exactly the stage sum; speedups between codecs on the identical
workload follow Amdahl's law in the load fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError
from .graphstore import CsrGraph
from .sq import SqCodec
from .vq import VqCodec

__all__ = ["SamplerConfig", "CacheConfig", "CostModel", "FullCodec",
           "SqShape", "VqShape", "MiniBatchSample", "BatchPlan", "SimReport",
           "sample_batches", "simulate_epoch", "compare_reports",
           "worker_scaling", "render_text", "render_csv"]

CACHE_POLICIES = ("static_degree",)


@dataclass(frozen=True)
class SamplerConfig:
    """Per-layer fanouts (outermost first), batch size, and shuffle seed."""

    fanouts: tuple[int, ...]
    batch_size: int
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "fanouts", tuple(int(f) for f in self.fanouts))
        if any(f < 1 for f in self.fanouts):
            raise DataError("fanouts must be >= 1")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")


@dataclass(frozen=True)
class CacheConfig:
    """Byte budget for device-resident rows, filled by descending degree."""

    budget_bytes: int
    policy: str = "static_degree"

    def __post_init__(self) -> None:
        if self.budget_bytes < 0:
            raise DataError("budget_bytes must be >= 0")
        if self.policy not in CACHE_POLICIES:
            raise DataError(f"policy must be one of {CACHE_POLICIES}")


@dataclass(frozen=True)
class CostModel:
    """Linear stage costs: transfer bandwidth, per-edge sampling cost,
    per-element dequantization cost, per-batch model compute."""

    pcie_bytes_per_sec: float
    sample_cost_per_edge: float
    dequant_cost_per_elem: float
    compute_cost_per_batch: float

    def __post_init__(self) -> None:
        if self.pcie_bytes_per_sec <= 0:
            raise DataError("pcie_bytes_per_sec must be > 0")
        if min(self.sample_cost_per_edge, self.dequant_cost_per_elem,
               self.compute_cost_per_batch) < 0:
            raise DataError("stage costs must be >= 0")

    def to_dict(self) -> dict:
        return {
            "pcie_bytes_per_sec": self.pcie_bytes_per_sec,
            "sample_cost_per_edge": self.sample_cost_per_edge,
            "dequant_cost_per_elem": self.dequant_cost_per_elem,
            "compute_cost_per_batch": self.compute_cost_per_batch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CostModel":
        try:
            return cls(float(d["pcie_bytes_per_sec"]),
                       float(d["sample_cost_per_edge"]),
                       float(d["dequant_cost_per_elem"]),
                       float(d["compute_cost_per_batch"]))
        except KeyError as e:
            raise DataError(f"cost model missing key {e.args[0]!r}") from e

    @classmethod
    def calibrate(cls, plan: "BatchPlan", full_codec: "FullCodec", *,
                  load_fraction: float = 0.85,
                  pcie_bytes_per_sec: float = 12e9,
                  sample_cost_per_edge: float = 5e-9,
                  dequant_cost_per_elem: float = 2e-11) -> "CostModel":
        """Choose compute_cost_per_batch so an uncached full-precision
        epoch on this workload spends exactly `load_fraction` of its
        time in feature loading.  If the per-edge sampling cost alone
        would overshoot the remaining budget it is scaled down to fit."""
        if not 0.0 < load_fraction < 1.0:
            raise DataError("load_fraction must be in (0, 1)")
        rows = sum(b.frontier.size for b in plan.batches)
        edges = sum(b.edges_touched for b in plan.batches)
        load_s = rows * full_codec.bytes_per_row() / pcie_bytes_per_sec
        budget = load_s / load_fraction - load_s  # sample + compute time
        sample_s = edges * sample_cost_per_edge
        if sample_s > budget and edges > 0:
            sample_cost_per_edge = budget / edges
            sample_s = budget
        compute_total = max(budget - sample_s, 0.0)
        return cls(pcie_bytes_per_sec, sample_cost_per_edge,
                   dequant_cost_per_elem, compute_total / len(plan.batches))


@dataclass(frozen=True)
class FullCodec:
    """Uncompressed row store; loading needs no dequantization."""

    d: int
    elem_bits: int = 32

    def bytes_per_row(self) -> float:
        return self.d * self.elem_bits / 8


@dataclass(frozen=True)
class SqShape:
    """Shape-only stand-in for a scalar-quantized store of k-bit codes."""

    d: int
    k: int
    elem_bits: int = 32

    def bytes_per_row(self) -> float:
        return float((self.d * self.k + 7) // 8)


@dataclass(frozen=True)
class VqShape:
    """Shape-only stand-in for a vector-quantized store."""

    d: int
    width: int
    length: int
    code_layout: str = "packed"
    elem_bits: int = 32

    def bytes_per_row(self) -> float:
        parts = -(-self.d // self.width)
        bits = max(1, math.ceil(math.log2(self.length)))
        if self.code_layout == "packed":
            return parts * bits / 8.0
        return float(parts * ((bits + 7) // 8))


@dataclass(frozen=True)
class MiniBatchSample:
    """Seed rows, the union frontier (sorted, unique, seeds included),
    and how many adjacency entries sampling touched."""

    seeds: np.ndarray
    frontier: np.ndarray
    edges_touched: int


@dataclass(frozen=True)
class BatchPlan:
    graph: CsrGraph
    config: SamplerConfig
    batches: tuple[MiniBatchSample, ...]

    def num_batches(self) -> int:
        return len(self.batches)


def sample_batches(g: CsrGraph, train_ids: np.ndarray,
                   cfg: SamplerConfig) -> BatchPlan:
    """Shuffle train ids, split into batches, expand fanout frontiers.

    Layer l samples min(fanout_l, deg) distinct stored neighbors of
    every node in the previous layer's frontier (without replacement),
    so a batch's frontier has at most batch_size * (1 + f1 + f1*f2 + ...)
    rows.  Fully deterministic for a given seed.
    """
    ids = np.unique(np.asarray(train_ids, dtype=np.int64))
    if ids.size == 0:
        raise DataError("train_ids must be non-empty")
    if ids.min() < 0 or ids.max() >= g.n:
        raise DataError("train id out of range")
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(ids)
    batches: list[MiniBatchSample] = []
    for lo in range(0, perm.size, cfg.batch_size):
        seeds = np.sort(perm[lo:lo + cfg.batch_size])
        layers = [seeds]
        current = seeds
        edges = 0
        for fanout in cfg.fanouts:
            picked: list[np.ndarray] = []
            for u in current:
                nbrs = g.neighbors(int(u))
                if nbrs.size <= fanout:
                    picked.append(nbrs)
                    edges += int(nbrs.size)
                else:
                    picked.append(rng.choice(nbrs, size=fanout, replace=False))
                    edges += fanout
            current = (np.unique(np.concatenate(picked)).astype(np.int64)
                       if picked else np.zeros(0, dtype=np.int64))
            layers.append(current)
        frontier = np.unique(np.concatenate(layers))
        batches.append(MiniBatchSample(seeds, frontier, edges))
    return BatchPlan(g, cfg, tuple(batches))


@dataclass(frozen=True)
class SimReport:
    """Priced epoch: stage seconds, transfer volume, cache behavior.

    epoch_s is exactly the sum of the four stages (validated); the
    workload block fingerprints the sampling side so only like runs are
    compared.
    """

    label: str
    sample_s: float
    load_s: float
    dequant_s: float
    compute_s: float
    epoch_s: float
    bytes_transferred: float
    cache_hit_rate: float
    cache_budget_bytes: int
    bytes_per_row: float
    workload: dict = field(repr=False)
    speedup_vs_baseline: float | None = None

    def __post_init__(self) -> None:
        total = self.sample_s + self.load_s + self.dequant_s + self.compute_s
        if abs(total - self.epoch_s) > 1e-9 * max(total, 1.0):
            raise DataError("epoch_s must equal the stage sum")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "sample_s": self.sample_s,
            "load_s": self.load_s,
            "dequant_s": self.dequant_s,
            "compute_s": self.compute_s,
            "epoch_s": self.epoch_s,
            "bytes_transferred": self.bytes_transferred,
            "cache_hit_rate": self.cache_hit_rate,
            "cache_budget_bytes": self.cache_budget_bytes,
            "bytes_per_row": self.bytes_per_row,
            "workload": dict(self.workload),
            "speedup_vs_baseline": self.speedup_vs_baseline,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        try:
            return cls(str(d["label"]), float(d["sample_s"]), float(d["load_s"]),
                       float(d["dequant_s"]), float(d["compute_s"]),
                       float(d["epoch_s"]), float(d["bytes_transferred"]),
                       float(d["cache_hit_rate"]), int(d["cache_budget_bytes"]),
                       float(d["bytes_per_row"]), dict(d["workload"]),
                       d.get("speedup_vs_baseline"))
        except KeyError as e:
            raise DataError(f"simulator report missing key {e.args[0]!r}") from e


def _codec_traits(codec) -> tuple[str, float, bool]:
    """(label, bytes_per_row, needs_dequant) for any supported codec."""
    if isinstance(codec, FullCodec):
        return f"full-fp{codec.elem_bits}", codec.bytes_per_row(), False
    if isinstance(codec, (SqCodec, SqShape)):
        k = codec.k if isinstance(codec, SqShape) else codec.params.k
        return f"sq-k{k}", float(codec.bytes_per_row()), True
    if isinstance(codec, (VqCodec, VqShape)):
        if isinstance(codec, VqShape):
            w, ln = codec.width, codec.length
        else:
            w, ln = codec.params.width, codec.params.length
        return f"vq-{w}x{ln}", float(codec.bytes_per_row()), True
    raise DataError(f"unsupported codec type {type(codec).__name__}")


def _codec_dim(codec) -> int:
    return codec.d


def simulate_epoch(plan: BatchPlan, codec, cache: CacheConfig,
                   cost: CostModel) -> SimReport:
    """Price one epoch of the plan's batches under a codec and cache."""
    label, bpr, needs_dequant = _codec_traits(codec)
    g = plan.graph
    if isinstance(codec, (SqCodec, VqCodec)) and codec.n not in (0, g.n):
        raise DataError(f"codec holds {codec.n} rows but the graph has {g.n}")
    capacity = int(cache.budget_bytes // bpr) if bpr > 0 else 0
    order = np.argsort(-g.degrees(include_self=False), kind="stable")
    cached = np.sort(order[:min(capacity, g.n)])
    rows_requested = 0
    hits = 0
    edges = 0
    for b in plan.batches:
        pos = np.searchsorted(cached, b.frontier)
        pos[pos >= cached.size] = max(cached.size - 1, 0)
        if cached.size:
            hits += int((cached[pos] == b.frontier).sum())
        rows_requested += int(b.frontier.size)
        edges += b.edges_touched
    misses = rows_requested - hits
    d = _codec_dim(codec)
    sample_s = edges * cost.sample_cost_per_edge
    bytes_transferred = misses * bpr
    load_s = bytes_transferred / cost.pcie_bytes_per_sec
    dequant_s = rows_requested * d * cost.dequant_cost_per_elem if needs_dequant else 0.0
    compute_s = len(plan.batches) * cost.compute_cost_per_batch
    workload = {
        "graph_n": g.n,
        "num_batches": len(plan.batches),
        "rows_requested": rows_requested,
        "edges_touched": edges,
        "fanouts": list(plan.config.fanouts),
        "batch_size": plan.config.batch_size,
        "seed": plan.config.seed,
    }
    return SimReport(label, sample_s, load_s, dequant_s, compute_s,
                     sample_s + load_s + dequant_s + compute_s,
                     bytes_transferred, hits / rows_requested,
                     cache.budget_bytes, bpr, workload)


def compare_reports(baseline: SimReport,
                    variants: list[SimReport]) -> list[SimReport]:
    """Attach epoch speedups vs the baseline; workloads must match."""
    out = [replace(baseline, speedup_vs_baseline=1.0)]
    for v in variants:
        if v.workload != baseline.workload:
            raise DataError(
                f"workload mismatch between {baseline.label!r} and {v.label!r}; "
                "reports must come from the same sampling plan")
        out.append(replace(v, speedup_vs_baseline=baseline.epoch_s / v.epoch_s))
    return out


def worker_scaling(report: SimReport, workers: list[int]) -> dict[int, float]:
    """Epoch time with W loader workers: transfer stays serial on the
    shared link, everything else divides across workers."""
    if any(w < 1 for w in workers):
        raise DataError("worker counts must be >= 1")
    other = report.sample_s + report.dequant_s + report.compute_s
    return {w: report.load_s + other / w for w in workers}


def render_text(reports: list[SimReport]) -> str:
    """Fixed-width comparison table, one row per codec."""
    cols = ["label", "epoch_s", "sample_s", "load_s", "dequant_s",
            "compute_s", "load_frac", "hit_rate", "GB_moved", "speedup"]
    rows = []
    for r in reports:
        rows.append([
            r.label, f"{r.epoch_s:.4g}", f"{r.sample_s:.4g}", f"{r.load_s:.4g}",
            f"{r.dequant_s:.4g}", f"{r.compute_s:.4g}",
            f"{r.load_s / r.epoch_s:.3f}" if r.epoch_s > 0 else "n/a",
            f"{r.cache_hit_rate:.3f}", f"{r.bytes_transferred / 1e9:.4g}",
            f"{r.speedup_vs_baseline:.2f}" if r.speedup_vs_baseline else "-",
        ])
    widths = [max(len(c), *(len(row[i]) for row in rows))
              for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def render_csv(reports: list[SimReport]) -> str:
    cols = ["label", "epoch_s", "sample_s", "load_s", "dequant_s", "compute_s",
            "bytes_transferred", "cache_hit_rate", "speedup_vs_baseline"]
    lines = [",".join(cols)]
    for r in reports:
        d = r.to_dict()
        lines.append(",".join("" if d[c] is None else str(d[c]) for c in cols))
    return "\n".join(lines)
