"""Aggregation-factor analysis for mean-aggregating message passing.

Each layer replaces a node's row with the mean over its stored
neighborhood (self-loop included), i.e. multiplies by the row-stochastic
operator M = D^-1 A.  The edge factor C^e[l][i] = ||row_i(M^l)||_2
measures how much l layers of aggregation shrink independent unit-scale
noise at node i; the feature factor C^f[l][i] is the same norm seeded
with the actual (row-normalized) feature matrix.  Their mean ratio
c_hat[l] = mean(C^e[l]) / mean(C^f[l]) scales an acceptable output
error down to a per-element quantization error budget, which
suggest_cr converts into a bit width.

C^e is bounded in [1/sqrt(n), 1] for any graph: rows of M^l are
non-negative and sum to one.  Exact propagation materializes M^l, so
it needs n^2 memory and is capped by node count; the Monte Carlo
estimator propagates standard-normal probe columns instead and reads
C^e off per-node RMS values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .graphstore import CsrGraph, FeatureMatrix

__all__ = ["FactorReport", "CrSuggestion", "aggregation_operator",
           "factors_exact", "factors_mc", "suggest_cr",
           "DEFAULT_EXACT_NODE_CAP"]

DEFAULT_EXACT_NODE_CAP = 5000
_MC_CHUNK = 8192  # samples per seeding chunk; fixed so results are
                  # independent of how work is split
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _chunk_seed(seed: int, chunk: int) -> int:
    return _splitmix64((seed + (chunk + 1) * _GOLDEN) & _MASK64)


@dataclass(frozen=True)
class FactorReport:
    """Per-layer, per-node factors; index 0 is the un-aggregated input."""

    n: int
    L: int
    estimator: str          # "exact" | "mc"
    feature_model: str      # "matrix" | "iid"
    c_e: np.ndarray         # (L+1, n)
    c_f: np.ndarray         # (L+1, n)
    num_samples: int | None = None

    def __post_init__(self) -> None:
        if self.c_e.shape != (self.L + 1, self.n) or self.c_f.shape != self.c_e.shape:
            raise DataError("factor arrays must be (L+1, n)")

    @property
    def mean_c_e(self) -> np.ndarray:
        return self.c_e.mean(axis=1)

    @property
    def mean_c_f(self) -> np.ndarray:
        return self.c_f.mean(axis=1)

    @property
    def c_hat(self) -> np.ndarray:
        return self.mean_c_e / self.mean_c_f

    def to_dict(self, include_per_node: bool = False) -> dict:
        out = {
            "n": self.n,
            "L": self.L,
            "estimator": self.estimator,
            "feature_model": self.feature_model,
            "num_samples": self.num_samples,
            "mean_c_f": self.mean_c_f.tolist(),
            "mean_c_e": self.mean_c_e.tolist(),
            "c_hat": self.c_hat.tolist(),
        }
        if include_per_node:
            out["per_node"] = {"c_f": self.c_f.tolist(), "c_e": self.c_e.tolist()}
        return out


@dataclass(frozen=True)
class CrSuggestion:
    """Bit width and compression ratio meeting an output error budget."""

    epsilon: float
    c_hat_L: float
    delta_budget: float
    k: int
    cr: float


def aggregation_operator(g: CsrGraph) -> sp.csr_matrix:
    """Row-stochastic mean-aggregation operator over stored neighbors."""
    if not g.has_self_loops:
        raise DataError("aggregation requires self-loops; add them first")
    deg = g.degrees(include_self=True).astype(np.float64)
    data = np.repeat(1.0 / deg, deg.astype(np.int64))
    return sp.csr_matrix((data, g.col_indices, g.row_offsets), shape=(g.n, g.n))


def _check_bounds(c_e: np.ndarray, n: int, tol: float) -> None:
    lo, hi = c_e.min(), c_e.max()
    assert hi <= 1.0 + tol, f"edge factor above 1: {hi}"
    assert lo >= 1.0 / math.sqrt(n) - tol, f"edge factor below 1/sqrt(n): {lo}"


def _feature_factors(m: sp.csr_matrix, f: FeatureMatrix, L: int) -> np.ndarray:
    x = f.values.astype(np.float64)
    norms = np.linalg.norm(x, axis=1)
    x = x / np.where(norms > 0, norms, 1.0)[:, None]  # zero rows stay zero
    out = np.empty((L + 1, f.n))
    out[0] = np.linalg.norm(x, axis=1)
    for layer in range(1, L + 1):
        x = m @ x
        out[layer] = np.linalg.norm(x, axis=1)
    return out


def factors_exact(g: CsrGraph, f: FeatureMatrix | None, L: int,
                  node_cap: int = DEFAULT_EXACT_NODE_CAP) -> FactorReport:
    """Exact factors by propagating the dense identity (n^2 memory).

    f=None uses the iid feature model, under which C^f equals C^e and
    c_hat is identically 1.
    """
    if L < 1:
        raise DataError("L must be >= 1")
    if g.n > node_cap:
        raise DataError(
            f"exact estimator capped at {node_cap} nodes (got {g.n}); "
            "use the mc estimator or raise node_cap")
    if f is not None and f.n != g.n:
        raise DataError(f"features have {f.n} rows but graph has {g.n} nodes")
    m = aggregation_operator(g)
    p = np.eye(g.n)
    c_e = np.empty((L + 1, g.n))
    c_e[0] = 1.0
    for layer in range(1, L + 1):
        p = m @ p
        c_e[layer] = np.linalg.norm(p, axis=1)
    _check_bounds(c_e, g.n, 1e-9)
    if f is None:
        return FactorReport(g.n, L, "exact", "iid", c_e, c_e.copy())
    return FactorReport(g.n, L, "exact", "matrix", c_e,
                        _feature_factors(m, f, L))


def _probe_matrix(n: int, num_samples: int, seed: int) -> np.ndarray:
    cols = np.empty((n, num_samples))
    for chunk in range(-(-num_samples // _MC_CHUNK)):
        lo = chunk * _MC_CHUNK
        hi = min(lo + _MC_CHUNK, num_samples)
        rng = np.random.default_rng(_chunk_seed(seed, chunk))
        cols[:, lo:hi] = rng.standard_normal((n, hi - lo))
    return cols


def factors_mc(g: CsrGraph, f: FeatureMatrix | None, L: int,
               num_samples: int = 100_000, seed: int = 0) -> FactorReport:
    """Monte Carlo factors from propagated standard-normal probes.

    Relative error of each C^e entry is about 1/sqrt(2*num_samples).
    Probe columns are seeded in fixed chunks of 8192, so a given seed
    yields the same estimate regardless of how the work is scheduled.
    With features the C^f side is computed by direct propagation (it
    needs no sampling); f=None pins C^f to the C^e estimate per the iid
    model.
    """
    if L < 1:
        raise DataError("L must be >= 1")
    if num_samples < 2:
        raise DataError("num_samples must be >= 2")
    if f is not None and f.n != g.n:
        raise DataError(f"features have {f.n} rows but graph has {g.n} nodes")
    m = aggregation_operator(g)
    probes = _probe_matrix(g.n, num_samples, seed)
    c_e = np.empty((L + 1, g.n))
    c_e[0] = np.sqrt(np.mean(probes ** 2, axis=1))
    for layer in range(1, L + 1):
        probes = m @ probes
        c_e[layer] = np.sqrt(np.mean(probes ** 2, axis=1))
    _check_bounds(c_e, g.n, 6.0 / math.sqrt(2.0 * num_samples))
    if f is None:
        return FactorReport(g.n, L, "mc", "iid", c_e, c_e.copy(), num_samples)
    return FactorReport(g.n, L, "mc", "matrix", c_e,
                        _feature_factors(m, f, L), num_samples)


def suggest_cr(report: FactorReport, epsilon: float,
               elem_bits: int = 32) -> CrSuggestion:
    """Turn an output error budget into a scalar-codec bit width.

    The per-element budget is delta = epsilon / c_hat[L]; k is the
    smallest width with 2^-k <= delta (clamped to [1, elem_bits]), and
    the suggested ratio is elem_bits / k.
    """
    if epsilon <= 0:
        raise DataError("epsilon must be > 0")
    c_hat_l = float(report.c_hat[report.L])
    if not np.isfinite(c_hat_l) or c_hat_l <= 0:
        raise DataError(f"c_hat at layer {report.L} is not positive")
    delta = epsilon / c_hat_l
    if delta >= 1.0:
        k = 1
    else:
        k = max(1, math.ceil(-math.log2(delta) - 1e-12))
        k = min(k, elem_bits)
    return CrSuggestion(epsilon, c_hat_l, delta, k, elem_bits / k)
