"""Vector quantization of feature rows with per-part k-means codebooks.

Rows are split into contiguous sub-vectors of `width` dims (the last
part may be narrower).  Each part gets its own codebook of up to
`length` entries, fitted by Lloyd's algorithm with k-means++ seeding
and restarts.  EUCLIDEAN minimizes squared distance; COSINE normalizes
sub-vectors to unit norm and maximizes cosine similarity.  Zero
sub-vectors have no direction, so when a part contains any, entry 0 of
its COSINE codebook is reserved as the zero vector and they map there;
all other entries stay unit norm.  When a part has at most `length`
distinct sub-vectors the codebook is exactly that distinct set, making
the part lossless.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .bitpack import pack_codes, unpack_codes
from .errors import DataError, FormatError
from .graphstore import FeatureMatrix

__all__ = ["VqParams", "VqCodec", "VqCrReport", "fit_vq", "encode_vq",
           "decode_vq", "vq_compression_ratio", "save_vq", "load_vq",
           "METRICS", "CODE_LAYOUTS"]

VQF_MAGIC = b"VQF1\x00\x00\x00\x00"
VQF_VERSION = 1
_VQF_HEADER = struct.Struct("<8sIBBHIIIQQ")
# magic, version, metric, layout, pad, width, length, num_parts, n, d

METRICS = ("euclidean", "cosine")
CODE_LAYOUTS = ("packed", "byte_aligned")

_AUTO_SAMPLE_TARGET = 1_000_000


@dataclass(frozen=True)
class VqParams:
    """Codebook geometry, metric, and fitting knobs.

    fit_sample_fraction=None resolves to min(1, 10^6 / n) at fit time.
    """

    width: int
    length: int
    metric: str = "cosine"
    code_layout: str = "packed"
    fit_sample_fraction: float | None = None
    kmeans_max_iters: int = 50
    kmeans_tol: float = 1e-4
    restarts: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 1:
            raise DataError("width must be >= 1")
        if not 2 <= self.length <= 65536:
            raise DataError("length must be in [2, 65536]")
        if self.metric not in METRICS:
            raise DataError(f"metric must be one of {METRICS}")
        if self.code_layout not in CODE_LAYOUTS:
            raise DataError(f"code_layout must be one of {CODE_LAYOUTS}")
        if self.fit_sample_fraction is not None and not 0.0 < self.fit_sample_fraction <= 1.0:
            raise DataError("fit_sample_fraction must be in (0, 1]")
        if self.kmeans_max_iters < 1 or self.restarts < 1:
            raise DataError("kmeans_max_iters and restarts must be >= 1")
        if self.kmeans_tol < 0:
            raise DataError("kmeans_tol must be >= 0")

    @property
    def bits_per_code(self) -> int:
        return max(1, math.ceil(math.log2(self.length)))

    def num_parts(self, d: int) -> int:
        return -(-d // self.width)

    def part_slices(self, d: int) -> list[slice]:
        return [slice(lo, min(lo + self.width, d))
                for lo in range(0, d, self.width)]


@dataclass(frozen=True, eq=False)
class VqCodec:
    """Fitted codebooks, optionally with encoded codes for n rows.

    codebooks[p] is float32 (entries_p, width_p); entries_p may be
    truncated below params.length when the part had fewer distinct
    sub-vectors.  codes is int32 (n, num_parts) or None after a
    fit-only pass.  fit_stats carries per-part objective/iteration
    metadata (in-memory only, never serialized).
    """

    params: VqParams
    d: int
    codebooks: tuple[np.ndarray, ...]
    codes: np.ndarray | None = None
    n: int = 0
    elem_bits: int = 32
    fit_stats: tuple[dict, ...] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.d < 1 or self.params.width > self.d:
            raise DataError("need 1 <= width <= d")
        slices = self.params.part_slices(self.d)
        if len(self.codebooks) != len(slices):
            raise DataError("one codebook per part required")
        for cb, sl in zip(self.codebooks, slices):
            if cb.ndim != 2 or cb.shape[1] != sl.stop - sl.start:
                raise DataError("codebook width does not match its part")
            if not 1 <= cb.shape[0] <= self.params.length:
                raise DataError("codebook entry count out of range")
            if cb.dtype != np.float32:
                raise DataError("codebooks must be float32")
        if self.codes is not None:
            if self.codes.shape != (self.n, len(slices)):
                raise DataError("codes must be (n, num_parts)")
            for p, cb in enumerate(self.codebooks):
                part = self.codes[:, p]
                if part.size and (part.min() < 0 or part.max() >= cb.shape[0]):
                    raise DataError("code index out of codebook range")
        elif self.n != 0:
            raise DataError("n must be 0 without codes")

    @property
    def num_parts(self) -> int:
        return len(self.codebooks)

    def part_lengths(self) -> tuple[int, ...]:
        return tuple(cb.shape[0] for cb in self.codebooks)

    def bytes_per_row(self) -> float:
        bits = self.params.bits_per_code
        if self.params.code_layout == "packed":
            return self.num_parts * bits / 8.0
        return float(self.num_parts * ((bits + 7) // 8))

    def codebook_bytes(self) -> int:
        return sum(cb.nbytes for cb in self.codebooks)


@dataclass(frozen=True)
class VqCrReport:
    theoretical: float
    realized: float
    bits_per_code: int
    codebook_bytes: int


def _sqdist(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d2 = (x * x).sum(axis=1)[:, None] + (c * c).sum(axis=1)[None, :] - 2.0 * (x @ c.T)
    return np.maximum(d2, 0.0)


def _cluster_sums(pts: np.ndarray, assign: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(assign, minlength=k).astype(np.float64)
    sums = np.empty((k, pts.shape[1]))
    for j in range(pts.shape[1]):
        sums[:, j] = np.bincount(assign, weights=pts[:, j], minlength=k)
    return sums, counts

def _kmeanspp_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centroids: first uniform, the rest proportional to squared
    distance from the chosen set."""
    centroids = np.empty((k, pts.shape[1]))
    centroids[0] = pts[int(rng.integers(pts.shape[0]))]
    d2 = _sqdist(pts, centroids[:1]).ravel()
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c:] = pts[int(rng.integers(pts.shape[0]))]
            return centroids
        idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total))
        idx = min(idx, pts.shape[0] - 1)
        centroids[c] = pts[idx]
        d2 = np.minimum(d2, _sqdist(pts, centroids[c:c + 1]).ravel())
    return centroids


def _lloyd(pts: np.ndarray, k: int, metric: str, max_iters: int, tol: float,
           rng: np.random.Generator) -> tuple[np.ndarray, float, list[float]]:
    """One restart of Lloyd's algorithm; returns (centroids, objective, history)."""
    centroids = _kmeanspp_init(pts, k, rng)
    history: list[float] = []
    prev = math.inf
    for _ in range(max_iters):
        if metric == "cosine":
            sims = pts @ centroids.T
            assign = np.argmax(sims, axis=1)
            cost = 1.0 - sims[np.arange(pts.shape[0]), assign]
        else:
            d2 = _sqdist(pts, centroids)
            assign = np.argmin(d2, axis=1)
            cost = d2[np.arange(pts.shape[0]), assign]
        obj = float(cost.sum())
        assert obj <= prev * (1 + 1e-9) + 1e-12, "k-means objective increased"
        history.append(obj)
        sums, counts = _cluster_sums(pts, assign, k)
        nonempty = counts > 0
        new_c = centroids.copy()
        if metric == "cosine":
            norms = np.linalg.norm(sums, axis=1)
            ok = nonempty & (norms > 0)
            new_c[ok] = sums[ok] / norms[ok, None]
        else:
            new_c[nonempty] = sums[nonempty] / counts[nonempty, None]
        # an empty cluster adopts the point farthest from its centroid
        far_cost = cost.copy()
        for c in np.flatnonzero(~nonempty):
            idx = int(np.argmax(far_cost))
            new_c[c] = pts[idx]
            far_cost[idx] = -math.inf
        centroids = new_c
        if prev - obj <= tol * max(abs(prev), 1e-12):
            break
        prev = obj
    # final objective under the updated centroids
    if metric == "cosine":
        final = float((1.0 - (pts @ centroids.T).max(axis=1)).sum())
    else:
        final = float(_sqdist(pts, centroids).min(axis=1).sum())
    assert final <= obj * (1 + 1e-9) + 1e-12, "k-means objective increased"
    history.append(final)
    return centroids, final, history


def _fit_part(pts: np.ndarray, p: VqParams, capacity: int,
              seeds: np.ndarray) -> tuple[np.ndarray, dict]:
    """Fit one part's codebook on (possibly normalized) float64 points."""
    uniq = np.unique(pts, axis=0)
    if uniq.shape[0] <= capacity:
        stats = {"objective": 0.0, "iterations": 0, "restarts": 0,
                 "entries": int(uniq.shape[0]),
                 "truncated": uniq.shape[0] < capacity, "history": [0.0]}
        return uniq.astype(np.float32), stats
    best: tuple[np.ndarray, float, list[float]] | None = None
    for r in range(p.restarts):
        rng = np.random.default_rng(int(seeds[r]))
        cand = _lloyd(pts, capacity, p.metric, p.kmeans_max_iters,
                      p.kmeans_tol, rng)
        if best is None or cand[1] < best[1]:
            best = cand
    centroids, objective, history = best
    if p.metric == "cosine":
        norms = np.linalg.norm(centroids, axis=1)
        centroids = centroids / np.where(norms > 0, norms, 1.0)[:, None]
    stats = {"objective": objective, "iterations": len(history) - 1,
             "restarts": p.restarts, "entries": int(centroids.shape[0]),
             "truncated": False, "history": history}
    return centroids.astype(np.float32), stats


def fit_vq(f: FeatureMatrix, p: VqParams) -> VqCodec:
    """Fit per-part codebooks on a uniform row sample; codes stay empty."""
    if f.n < 1:
        raise DataError("cannot fit on an empty matrix")
    if p.width > f.d:
        raise DataError(f"width {p.width} exceeds feature dim {f.d}")
    frac = p.fit_sample_fraction
    if frac is None:
        frac = min(1.0, _AUTO_SAMPLE_TARGET / f.n)
    rows = math.ceil(frac * f.n - 1e-9)
    rows = min(max(rows, 1), f.n)
    rng = np.random.default_rng(p.seed)
    if rows < f.n:
        pick = np.sort(rng.choice(f.n, size=rows, replace=False))
        sample = f.values[pick]
    else:
        sample = f.values
    sample = sample.astype(np.float64, copy=False)
    codebooks: list[np.ndarray] = []
    stats: list[dict] = []
    for sl in p.part_slices(f.d):
        pts = sample[:, sl]
        reserve_zero = False
        if p.metric == "cosine":
            norms = np.linalg.norm(pts, axis=1)
            nonzero = norms > 0
            reserve_zero = not nonzero.all()
            pts = pts[nonzero] / norms[nonzero][:, None]
            if pts.shape[0] == 0:
                # every sub-vector is zero; a single zero entry is exact
                codebooks.append(np.zeros((1, sl.stop - sl.start), dtype=np.float32))
                stats.append({"objective": 0.0, "iterations": 0, "restarts": 0,
                              "entries": 1, "truncated": True, "history": [0.0]})
                continue
        seeds = rng.integers(0, 2 ** 63 - 1, size=p.restarts)
        capacity = p.length - 1 if reserve_zero else p.length
        cb, st = _fit_part(pts, p, capacity, seeds)
        if reserve_zero:
            # index 0 holds the zero vector so zero sub-vectors decode
            # exactly; directions occupy the remaining entries
            cb = np.concatenate([np.zeros((1, cb.shape[1]), np.float32), cb])
            st = dict(st, entries=int(cb.shape[0]),
                      truncated=cb.shape[0] < p.length)
        codebooks.append(cb)
        stats.append(st)
    return VqCodec(p, f.d, tuple(codebooks), elem_bits=f.elem_bits,
                   fit_stats=tuple(stats))


def _assign_part(pts: np.ndarray, cb: np.ndarray, metric: str) -> np.ndarray:
    """Nearest codebook entry per row; ties resolve to the lowest index."""
    cbd = cb.astype(np.float64)
    if metric == "cosine":
        norms = np.linalg.norm(pts, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        sims = (pts / safe[:, None]) @ cbd.T
        idx = np.argmax(sims, axis=1)
        idx[norms == 0] = 0
        return idx.astype(np.int32)
    return np.argmin(_sqdist(pts, cbd), axis=1).astype(np.int32)


def encode_vq(f: FeatureMatrix, c: VqCodec) -> VqCodec:
    """Assign every row's sub-vectors to their nearest codebook entries."""
    if f.d != c.d:
        raise DataError(f"feature dim {f.d} does not match codec dim {c.d}")
    x = f.values.astype(np.float64, copy=False)
    codes = np.empty((f.n, c.num_parts), dtype=np.int32)
    for pi, sl in enumerate(c.params.part_slices(c.d)):
        codes[:, pi] = _assign_part(x[:, sl], c.codebooks[pi], c.params.metric)
    return replace(c, codes=codes, n=f.n, elem_bits=f.elem_bits)


def decode_vq(c: VqCodec, rows: np.ndarray | None = None) -> FeatureMatrix:
    """Reconstruct rows by codebook lookup (exact float32 copies)."""
    if c.codes is None:
        raise DataError("codec holds no codes; encode first")
    if rows is None:
        row_ids = np.arange(c.n, dtype=np.int64)
    else:
        row_ids = np.asarray(rows, dtype=np.int64)
        if row_ids.size and (row_ids.min() < 0 or row_ids.max() >= c.n):
            raise DataError("row id out of range")
    out = np.empty((row_ids.size, c.d), dtype=np.float32)
    sel = c.codes[row_ids]
    for pi, sl in enumerate(c.params.part_slices(c.d)):
        out[:, sl] = c.codebooks[pi][sel[:, pi]]
    return FeatureMatrix(out)


def vq_compression_ratio(c: VqCodec) -> VqCrReport:
    """Theoretical vs layout-realized per-row compression.

    Theoretical charges log2(length) bits per code; PACKED rounds that
    up to whole bits, BYTE_ALIGNED to whole bytes.  Codebook storage is
    reported separately, not folded into the ratios.
    """
    b = c.elem_bits
    w = c.params.width
    theoretical = w * b / math.log2(c.params.length)
    bits = c.params.bits_per_code
    if c.params.code_layout == "packed":
        realized = w * b / bits
    else:
        realized = w * b / (8 * ((bits + 7) // 8))
    return VqCrReport(theoretical, realized, bits, c.codebook_bytes())


def save_vq(c: VqCodec, path: str) -> None:
    """Write VQF1.  Truncated codebooks are padded to `length` entries
    with copies of entry 0 (ties resolve to index 0, so encode and
    decode behave identically after a round trip)."""
    p = c.params
    header = _VQF_HEADER.pack(VQF_MAGIC, VQF_VERSION, METRICS.index(p.metric),
                              CODE_LAYOUTS.index(p.code_layout), 0,
                              p.width, p.length, c.num_parts, c.n, c.d)
    with open(path, "wb") as fh:
        fh.write(header)
        for cb in c.codebooks:
            if cb.shape[0] < p.length:
                pad = np.broadcast_to(cb[0], (p.length - cb.shape[0], cb.shape[1]))
                cb = np.concatenate([cb, pad], axis=0)
            fh.write(cb.astype("<f4", copy=False).tobytes())
        if c.codes is not None:
            flat = c.codes.reshape(-1)
            if p.code_layout == "packed":
                fh.write(pack_codes(flat, p.bits_per_code))
            else:
                dt = "<u1" if p.bits_per_code <= 8 else "<u2"
                fh.write(flat.astype(dt).tobytes())


def load_vq(path: str) -> VqCodec:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _VQF_HEADER.size:
        raise FormatError(f"{path}: truncated VQF1 header")
    (magic, version, metric_id, layout_id, _pad, width, length,
     num_parts, n, d) = _VQF_HEADER.unpack_from(raw)
    if magic != VQF_MAGIC:
        raise FormatError(f"{path}: not a VQF1 file")
    if version != VQF_VERSION:
        raise FormatError(f"{path}: unsupported VQF1 version {version}")
    if metric_id >= len(METRICS) or layout_id >= len(CODE_LAYOUTS):
        raise FormatError(f"{path}: unknown metric or layout id")
    try:
        params = VqParams(width, length, METRICS[metric_id],
                          CODE_LAYOUTS[layout_id])
        if params.num_parts(d) != num_parts:
            raise FormatError(f"{path}: num_parts inconsistent with width and d")
        offset = _VQF_HEADER.size
        codebooks = []
        for sl in params.part_slices(d):
            w = sl.stop - sl.start
            nbytes = length * w * 4
            if offset + nbytes > len(raw):
                raise FormatError(f"{path}: truncated codebooks")
            cb = np.frombuffer(raw, dtype="<f4", count=length * w,
                               offset=offset).reshape(length, w)
            codebooks.append(cb.copy())
            offset += nbytes
        codes = None
        if n > 0:
            bits = params.bits_per_code
            if params.code_layout == "packed":
                nbytes = (n * num_parts * bits + 7) // 8
                if len(raw) - offset != nbytes:
                    raise FormatError(f"{path}: code payload size mismatch")
                flat = unpack_codes(raw[offset:], bits, n * num_parts)
            else:
                step = (bits + 7) // 8
                nbytes = n * num_parts * step
                if len(raw) - offset != nbytes:
                    raise FormatError(f"{path}: code payload size mismatch")
                dt = "<u1" if step == 1 else "<u2"
                flat = np.frombuffer(raw, dtype=dt, count=n * num_parts,
                                     offset=offset).astype(np.int64)
            codes = flat.reshape(n, num_parts).astype(np.int32)
        elif len(raw) != offset:
            raise FormatError(f"{path}: trailing bytes after codebooks")
        return VqCodec(params, d, tuple(codebooks), codes=codes, n=n)
    except DataError as e:
        raise FormatError(f"{path}: {e}") from e
