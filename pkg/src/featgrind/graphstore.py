"""Graph and feature-matrix containers, generators, sparsifiers, and file I/O.

Graphs are undirected, stored in CSR with sorted neighbor lists and an
all-or-none self-loop convention.  Features are dense row-major float32
or float64 matrices.  Both have little-endian binary formats (CSRG1 and
FMAT1) with fixed 32-byte headers.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError

__all__ = [
    "FeatureMatrix",
    "CsrGraph",
    "generate_graph",
    "generate_features",
    "sparsify",
    "save_features",
    "load_features",
    "save_graph",
    "load_graph",
    "GRAPH_KINDS",
    "SPARSIFY_METHODS",
]

FMAT_MAGIC = b"FMAT1\x00\x00\x00"
CSRG_MAGIC = b"CSRG1\x00\x00\x00"
FMAT_VERSION = 1
CSRG_VERSION = 1

_FMAT_HEADER = struct.Struct("<8sIIQQ")   # magic, version, elem_bits, n, d
_CSRG_HEADER = struct.Struct("<8sIIQQ")   # magic, version, flags, n, nnz

GRAPH_KINDS = ("star", "path", "complete", "erdos_renyi", "preferential_attachment")
SPARSIFY_METHODS = ("random", "centralized", "uniform")
FEATURE_KINDS = ("normal", "lognormal", "correlated", "onehot")


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense (n, d) feature matrix; float32 or float64, all values finite."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 2:
            raise DataError("features must be a 2-d numpy array")
        if v.dtype not in (np.float32, np.float64):
            raise DataError(f"features must be float32 or float64, got {v.dtype}")
        bad = ~np.isfinite(v)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DataError(f"non-finite feature value at ({i}, {j})")
        object.__setattr__(self, "values", np.ascontiguousarray(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def elem_bits(self) -> int:
        return 32 if self.values.dtype == np.float32 else 64

    def nbytes(self) -> int:
        return self.n * self.d * (self.elem_bits // 8)


@dataclass(frozen=True)
class CsrGraph:
    """Undirected graph in CSR form.

    Neighbor lists are sorted and duplicate-free, the adjacency is
    symmetric, and self-loops are all-or-none (``has_self_loops``).
    Immutable after construction; every constructor path validates.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    has_self_loops: bool = field(init=False)

    def __post_init__(self) -> None:
        n = self.n
        if n < 1:
            raise DataError("graph must have at least one node")
        off = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        col = np.ascontiguousarray(self.col_indices, dtype=np.int32)
        if off.shape != (n + 1,) or off[0] != 0 or off[-1] != col.size:
            raise DataError("row_offsets must be (n+1,) spanning col_indices")
        deg = np.diff(off)
        if (deg < 0).any():
            raise DataError("row_offsets must be non-decreasing")
        if col.size and (col.min() < 0 or col.max() >= n):
            raise DataError("column index out of range")
        rows = np.repeat(np.arange(n, dtype=np.int32), deg)
        within = np.diff(col)
        starts = off[1:-1]  # boundaries between rows, exclude ends
        if col.size > 1:
            ok = within > 0
            ok[starts[(starts > 0) & (starts < col.size)] - 1] = True
            if not ok.all():
                raise DataError("neighbor lists must be sorted and duplicate-free")
        # symmetry: the transpose must be the identical CSR
        order = np.lexsort((rows, col))
        if not (np.array_equal(col[order], rows) and
                np.array_equal(rows[order], col)):
            raise DataError("adjacency must be symmetric")
        loops = rows == col
        nloops = int(loops.sum())
        if nloops not in (0, n):
            raise DataError("self-loops must be present on all nodes or none")
        object.__setattr__(self, "row_offsets", off)
        object.__setattr__(self, "col_indices", col)
        object.__setattr__(self, "has_self_loops", nloops == n)

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    def degrees(self, include_self: bool = False) -> np.ndarray:
        """Per-node neighbor counts; self-loops excluded by default."""
        deg = np.diff(self.row_offsets)
        if self.has_self_loops and not include_self:
            deg = deg - 1
        return deg.astype(np.int64)

    def num_undirected_edges(self) -> int:
        """Count of undirected non-self-loop edges."""
        loops = self.n if self.has_self_loops else 0
        return (self.nnz - loops) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    def undirected_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Non-self-loop edges as (u, v) arrays with u < v."""
        deg = np.diff(self.row_offsets)
        rows = np.repeat(np.arange(self.n, dtype=np.int32), deg)
        mask = rows < self.col_indices
        return rows[mask].astype(np.int64), self.col_indices[mask].astype(np.int64)

    def with_self_loops(self) -> "CsrGraph":
        if self.has_self_loops:
            return self
        u, v = self.undirected_edges()
        return _from_undirected_edges(self.n, u, v, self_loops=True)

    def equals(self, other: "CsrGraph") -> bool:
        return (self.n == other.n
                and np.array_equal(self.row_offsets, other.row_offsets)
                and np.array_equal(self.col_indices, other.col_indices))


def _from_undirected_edges(n: int, u: np.ndarray, v: np.ndarray,
                           self_loops: bool) -> CsrGraph:
    """Build a CsrGraph from undirected edge endpoints (self-edges rejected)."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.size and ((u == v).any() or min(u.min(), v.min()) < 0
                   or max(u.max(), v.max()) >= n):
        raise DataError("edge endpoints out of range or self-edges given")
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    keys = np.unique(lo * n + hi)
    lo, hi = keys // n, keys % n
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    if self_loops:
        diag = np.arange(n, dtype=np.int64)
        src = np.concatenate([src, diag])
        dst = np.concatenate([dst, diag])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    np.cumsum(offsets, out=offsets)
    return CsrGraph(n, offsets, dst.astype(np.int32))


def _star_edges(n: int) -> tuple[np.ndarray, np.ndarray]:
    hub = np.zeros(max(n - 1, 0), dtype=np.int64)
    return hub, np.arange(1, n, dtype=np.int64)


def _path_edges(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.arange(n - 1, dtype=np.int64), np.arange(1, n, dtype=np.int64)


def _complete_edges(n: int) -> tuple[np.ndarray, np.ndarray]:
    u, v = np.triu_indices(n, k=1)
    return u.astype(np.int64), v.astype(np.int64)


def _erdos_renyi_edges(n: int, p: float,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Bernoulli(p) over the upper triangle, drawn in fixed row blocks."""
    target = 4 << 20  # pairs per block; fixed so the draw order is reproducible
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    row = 0
    while row < n - 1:
        stop = row + 1
        count = n - 1 - row
        while stop < n - 1 and count + (n - 1 - stop) <= target:
            count += n - 1 - stop
            stop += 1
        lens = n - 1 - np.arange(row, stop, dtype=np.int64)
        total = int(lens.sum())
        hit = rng.random(total) < p
        rid = np.repeat(np.arange(row, stop, dtype=np.int64), lens)
        starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
        cid = rid + 1 + (np.arange(total, dtype=np.int64) - np.repeat(starts, lens))
        us.append(rid[hit])
        vs.append(cid[hit])
        row = stop
    if not us:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(us), np.concatenate(vs)


def _preferential_attachment_edges(n: int, m: int,
                                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Growth with preferential attachment: node v >= m attaches to m
    distinct targets drawn proportionally to current degree."""
    if not 1 <= m < n:
        raise DataError(f"preferential attachment needs 1 <= m < n, got m={m}, n={n}")
    targets = list(range(m))
    repeated: list[int] = []
    us: list[int] = []
    vs: list[int] = []
    for v in range(m, n):
        us.extend([v] * len(targets))
        vs.extend(targets)
        repeated.extend(targets)
        repeated.extend([v] * len(targets))
        if v == n - 1:
            break
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(repeated[int(rng.integers(len(repeated)))])
        targets = sorted(chosen)
    return np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64)


def generate_graph(kind: str, n: int, *, seed: int = 0, p: float | None = None,
                   m: int | None = None, self_loops: bool = False) -> CsrGraph:
    """Generate a synthetic undirected graph.

    Parameters
    ----------
    kind : one of ``star``, ``path``, ``complete``, ``erdos_renyi``
        (needs ``p``), ``preferential_attachment`` (needs ``m``).
    n : node count, >= 1.
    seed : RNG seed for the random families; same seed, same graph.
    self_loops : also store the diagonal.
    """
    if n < 1:
        raise DataError("n must be >= 1")
    kind = kind.lower().replace("-", "_")
    rng = np.random.default_rng(seed)
    if kind == "star":
        u, v = _star_edges(n)
    elif kind == "path":
        u, v = _path_edges(n)
    elif kind == "complete":
        u, v = _complete_edges(n)
    elif kind == "erdos_renyi":
        if p is None or not 0.0 <= p <= 1.0:
            raise DataError("erdos_renyi needs edge probability p in [0, 1]")
        u, v = _erdos_renyi_edges(n, p, rng)
    elif kind == "preferential_attachment":
        if m is None:
            raise DataError("preferential_attachment needs attachment count m")
        u, v = _preferential_attachment_edges(n, m, rng)
    else:
        raise DataError(f"unknown graph kind {kind!r}")
    return _from_undirected_edges(n, u, v, self_loops=self_loops)


def generate_features(n: int, d: int, kind: str = "normal", *, seed: int = 0,
                      shared_weight: float = 0.9,
                      dtype: str = "float32") -> FeatureMatrix:
    """Generate a synthetic feature matrix.

    ``normal`` is iid standard normal; ``lognormal`` has log-normal
    magnitudes with random signs (exercises the log-domain codec);
    ``correlated`` mixes a shared global direction (weight
    ``shared_weight``) with per-node noise, giving neighbor-correlated
    rows; ``onehot`` puts a single 1.0 at column i mod d.
    """
    if n < 1 or d < 1:
        raise DataError("n and d must be >= 1")
    if not 0.0 <= shared_weight < 1.0:
        raise DataError("shared_weight must be in [0, 1)")
    rng = np.random.default_rng(seed)
    if kind == "normal":
        x = rng.standard_normal((n, d))
    elif kind == "lognormal":
        mag = np.exp(rng.normal(0.0, 1.0, size=(n, d)))
        sign = rng.integers(0, 2, size=(n, d)) * 2 - 1
        x = mag * sign
    elif kind == "correlated":
        shared = rng.standard_normal(d)
        noise = rng.standard_normal((n, d))
        x = math.sqrt(shared_weight) * shared[None, :] \
            + math.sqrt(1.0 - shared_weight) * noise
    elif kind == "onehot":
        x = np.zeros((n, d))
        x[np.arange(n), np.arange(n) % d] = 1.0
    else:
        raise DataError(f"unknown feature kind {kind!r}")
    out_dtype = np.float32 if dtype == "float32" else np.float64
    return FeatureMatrix(x.astype(out_dtype))


def sparsify(g: CsrGraph, method: str, keep_fraction: float,
             seed: int = 0) -> CsrGraph:
    """Drop undirected edges, keeping exactly ceil(keep_fraction * |E|).

    ``random`` keeps a uniform subset.  ``centralized`` and ``uniform``
    score each edge min(deg(u), deg(v)) on the original graph and delete
    lowest-score-first / highest-score-first respectively, so the former
    concentrates the surviving edges on hubs and the latter spreads them
    evenly.  Ties are broken by a seeded shuffle.  Self-loops are never
    deleted, so isolated survivors keep theirs.
    """
    method = method.lower()
    if method not in SPARSIFY_METHODS:
        raise DataError(f"unknown sparsifier {method!r}")
    if not 0.0 < keep_fraction <= 1.0:
        raise DataError("keep_fraction must be in (0, 1]")
    u, v = g.undirected_edges()
    num_edges = u.size
    rng = np.random.default_rng(seed)
    if num_edges == 0:
        return g
    keep = max(1, math.ceil(keep_fraction * num_edges - 1e-9))
    if method == "random":
        kept = rng.permutation(num_edges)[:keep]
    else:
        deg = g.degrees(include_self=False)
        scores = np.minimum(deg[u], deg[v])
        tie = rng.permutation(num_edges)
        if method == "centralized":
            order = np.lexsort((tie, -scores))
        else:
            order = np.lexsort((tie, scores))
        kept = order[:keep]
    return _from_undirected_edges(g.n, u[kept], v[kept],
                                  self_loops=g.has_self_loops)


def save_features(f: FeatureMatrix, path: str) -> None:
    """Write FMAT1: 32-byte header then row-major little-endian payload."""
    header = _FMAT_HEADER.pack(FMAT_MAGIC, FMAT_VERSION, f.elem_bits, f.n, f.d)
    payload = f.values.astype("<f4" if f.elem_bits == 32 else "<f8", copy=False)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(payload).tobytes())


def load_features(path: str) -> FeatureMatrix:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _FMAT_HEADER.size:
        raise FormatError(f"{path}: truncated FMAT1 header")
    magic, version, elem_bits, n, d = _FMAT_HEADER.unpack_from(raw)
    if magic != FMAT_MAGIC:
        raise FormatError(f"{path}: not an FMAT1 file")
    if version != FMAT_VERSION:
        raise FormatError(f"{path}: unsupported FMAT1 version {version}")
    if elem_bits not in (32, 64):
        raise FormatError(f"{path}: elem_bits must be 32 or 64, got {elem_bits}")
    expect = _FMAT_HEADER.size + n * d * (elem_bits // 8)
    if len(raw) != expect:
        raise FormatError(f"{path}: expected {expect} bytes, found {len(raw)}")
    dt = np.dtype("<f4") if elem_bits == 32 else np.dtype("<f8")
    values = np.frombuffer(raw, dtype=dt, offset=_FMAT_HEADER.size).reshape(n, d)
    return FeatureMatrix(values.copy())


def save_graph(g: CsrGraph, path: str) -> None:
    """Write CSRG1: header, u64 row offsets, u32 column indices."""
    flags = 1 if g.has_self_loops else 0
    header = _CSRG_HEADER.pack(CSRG_MAGIC, CSRG_VERSION, flags, g.n, g.nnz)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(g.row_offsets.astype("<u8").tobytes())
        fh.write(g.col_indices.astype("<u4").tobytes())


def load_graph(path: str) -> CsrGraph:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _CSRG_HEADER.size:
        raise FormatError(f"{path}: truncated CSRG1 header")
    magic, version, flags, n, nnz = _CSRG_HEADER.unpack_from(raw)
    if magic != CSRG_MAGIC:
        raise FormatError(f"{path}: not a CSRG1 file")
    if version != CSRG_VERSION:
        raise FormatError(f"{path}: unsupported CSRG1 version {version}")
    expect = _CSRG_HEADER.size + (n + 1) * 8 + nnz * 4
    if len(raw) != expect:
        raise FormatError(f"{path}: expected {expect} bytes, found {len(raw)}")
    off = np.frombuffer(raw, dtype="<u8", count=n + 1,
                        offset=_CSRG_HEADER.size).astype(np.int64)
    col = np.frombuffer(raw, dtype="<u4", count=nnz,
                        offset=_CSRG_HEADER.size + (n + 1) * 8).astype(np.int32)
    try:
        g = CsrGraph(n, off, col)
    except DataError as e:
        raise FormatError(f"{path}: {e}") from e
    if g.has_self_loops != bool(flags & 1):
        raise FormatError(f"{path}: self-loop flag does not match contents")
    return g
