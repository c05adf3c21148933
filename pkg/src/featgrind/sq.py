"""Log-domain scalar quantization.

Each value keeps its sign and quantizes log2 of its magnitude uniformly
over a fitted exponent range [e_min, e_max], spending k bits total: the
top half of the code space is the non-negative branch, the bottom half
the negative branch, mirrored so that code order follows value order.
k=1 degenerates to a pure sign bit.  Zeros are treated as the smallest
representable non-negative magnitude (sign and magnitude of exactly 0.0
are not preserved; everything dequantizes to +/- 2^mid).

Dequantization returns the midpoint (in log space) of each bucket, so
the round-trip error of an in-range value is at most half a bucket:
|log2|x| - log2|x'|| <= (e_max - e_min) / 2^k.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .bitpack import gather_bit_rows, pack_codes
from .errors import DataError, FormatError
from .graphstore import FeatureMatrix

__all__ = ["SqParams", "SqCodec", "fit_sq", "quantize_sq", "dequantize_sq",
           "sq_compression_ratio", "save_sq", "load_sq"]

SQF_MAGIC = b"SQF1\x00\x00\x00\x00"
SQF_VERSION = 1
_SQF_HEADER = struct.Struct("<8sIIQQddd")  # magic, version, k, n, d, e_min, e_max, clip
SQF_HEADER_BYTES = _SQF_HEADER.size

_FIT_SAMPLE_CAP = 10_000_000
DEFAULT_CLIP_TAIL_FRACTION = 0.005


@dataclass(frozen=True)
class SqParams:
    """Fitted codec parameters: bit width and exponent range."""

    k: int
    e_min: float
    e_max: float
    clip_tail_fraction: float = DEFAULT_CLIP_TAIL_FRACTION

    def __post_init__(self) -> None:
        if not 1 <= self.k <= 8:
            raise DataError(f"k must be in [1, 8], got {self.k}")
        if not 0.0 <= self.clip_tail_fraction <= 0.2:
            raise DataError("clip_tail_fraction must be in [0, 0.2]")
        if not (np.isfinite(self.e_min) and np.isfinite(self.e_max)):
            raise DataError("exponent range must be finite")
        if self.k >= 2 and not self.e_min < self.e_max:
            raise DataError("e_min must be < e_max for k >= 2")
        if self.e_min > self.e_max:
            raise DataError("e_min must be <= e_max")


@dataclass(frozen=True)
class SqCodec:
    """Quantized matrix: params plus a packed row-major code payload."""

    params: SqParams
    n: int
    d: int
    payload: bytes
    elem_bits: int = 32

    def __post_init__(self) -> None:
        if self.n < 0 or self.d < 1:
            raise DataError("invalid codec dimensions")
        if self.elem_bits not in (32, 64):
            raise DataError("elem_bits must be 32 or 64")
        expect = (self.n * self.d * self.params.k + 7) // 8
        if len(self.payload) != expect:
            raise DataError(f"payload must be {expect} bytes, got {len(self.payload)}")

    def bytes_per_row(self) -> int:
        return (self.d * self.params.k + 7) // 8


def fit_sq(f: FeatureMatrix, k: int,
           clip_tail_fraction: float = DEFAULT_CLIP_TAIL_FRACTION) -> SqParams:
    """Fit the exponent range from the data's log-magnitude distribution.

    e_min and e_max are the clip_tail_fraction and 1-clip_tail_fraction
    quantiles (linear interpolation) of {log2|x| : x != 0}.  Matrices
    with more than 10^7 nonzero values are subsampled with an evenly
    strided deterministic pattern.  All-zero input only fits for k=1
    (range collapses to [0, 0]); a zero-width range errors for k >= 2.
    """
    if not 1 <= k <= 8:
        raise DataError(f"k must be in [1, 8], got {k}")
    if not 0.0 <= clip_tail_fraction <= 0.2:
        raise DataError("clip_tail_fraction must be in [0, 0.2]")
    flat = f.values.reshape(-1)
    nz = flat[flat != 0]
    if nz.size == 0:
        if k == 1:
            return SqParams(1, 0.0, 0.0, clip_tail_fraction)
        raise DataError("cannot fit an exponent range on an all-zero matrix")
    if nz.size > _FIT_SAMPLE_CAP:
        pick = np.linspace(0, nz.size - 1, _FIT_SAMPLE_CAP).astype(np.int64)
        nz = nz[pick]
    logs = np.log2(np.abs(nz.astype(np.float64)))
    e_min, e_max = np.quantile(logs, [clip_tail_fraction, 1.0 - clip_tail_fraction])
    if k >= 2 and not e_min < e_max:
        raise DataError("constant log-magnitude data: exponent range is empty")
    return SqParams(k, float(e_min), float(e_max), clip_tail_fraction)


def quantize_sq(f: FeatureMatrix, p: SqParams) -> SqCodec:
    """Quantize a matrix to k-bit codes (packed MSB-first, row-major)."""
    x = f.values.astype(np.float64, copy=False)
    if p.k == 1:
        codes = (x >= 0).astype(np.uint8)
    else:
        absx = np.abs(x)
        logs = np.log2(np.where(absx == 0, 1.0, absx))
        logs = np.where(absx == 0, p.e_min, logs)  # zeros join the non-negative branch
        np.clip(logs, p.e_min, p.e_max, out=logs)
        half = 1 << (p.k - 1)
        scaled = (logs - p.e_min) / (p.e_max - p.e_min) * half
        offset = np.floor(scaled).astype(np.int64)
        np.clip(offset, 0, half - 1, out=offset)  # e_max itself stays in the top bucket
        codes = np.where(x >= 0, half + offset, half - 1 - offset)
    return SqCodec(p, f.n, f.d, pack_codes(codes, p.k), f.elem_bits)


def dequantize_sq(c: SqCodec, rows: np.ndarray | None = None) -> FeatureMatrix:
    """Reconstruct bucket midpoints; `rows` selects a row subset (gather).

    Row ids may repeat and appear in any order; None decodes everything.
    """
    k, e_min, e_max = c.params.k, c.params.e_min, c.params.e_max
    if rows is None:
        row_ids = np.arange(c.n, dtype=np.int64)
    else:
        row_ids = np.asarray(rows, dtype=np.int64)
        if row_ids.size and (row_ids.min() < 0 or row_ids.max() >= c.n):
            raise DataError("row id out of range")
    bits = gather_bit_rows(c.payload, c.d * k, row_ids)
    weights = (1 << np.arange(k - 1, -1, -1)).astype(np.int64)
    q = bits.reshape(row_ids.size, c.d, k).astype(np.int64) @ weights
    half = 1 << (k - 1)
    span = e_max - e_min
    steps = np.where(q >= half, q - half + 0.5, half - 0.5 - q)
    mags = np.exp2(steps * (span / half) + e_min)
    out = np.where(q >= half, mags, -mags)
    dtype = np.float32 if c.elem_bits == 32 else np.float64
    return FeatureMatrix(out.astype(dtype))


def sq_compression_ratio(c: SqCodec) -> tuple[float, float]:
    """(payload-only ratio, ratio including the file header).

    Payload-only is exactly elem_bits / k; the second figure charges the
    56-byte header against the payload.
    """
    raw_bytes = c.n * c.d * (c.elem_bits // 8)
    payload_ratio = c.elem_bits / c.params.k
    stored = SQF_HEADER_BYTES + len(c.payload)
    return payload_ratio, raw_bytes / stored


def save_sq(c: SqCodec, path: str) -> None:
    header = _SQF_HEADER.pack(SQF_MAGIC, SQF_VERSION, c.params.k, c.n, c.d,
                              c.params.e_min, c.params.e_max,
                              c.params.clip_tail_fraction)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(c.payload)


def load_sq(path: str) -> SqCodec:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _SQF_HEADER.size:
        raise FormatError(f"{path}: truncated SQF1 header")
    magic, version, k, n, d, e_min, e_max, clip = _SQF_HEADER.unpack_from(raw)
    if magic != SQF_MAGIC:
        raise FormatError(f"{path}: not an SQF1 file")
    if version != SQF_VERSION:
        raise FormatError(f"{path}: unsupported SQF1 version {version}")
    expect = _SQF_HEADER.size + (n * d * k + 7) // 8
    if len(raw) != expect:
        raise FormatError(f"{path}: expected {expect} bytes, found {len(raw)}")
    try:
        params = SqParams(k, e_min, e_max, clip)
        return SqCodec(params, n, d, raw[_SQF_HEADER.size:])
    except DataError as e:
        raise FormatError(f"{path}: {e}") from e
