"""Fixed-width integer packing into MSB-first bitstreams.

Codes are laid out most-significant-bit first within each byte, in
row-major element order, with the final byte zero-padded.  This is the
payload layout shared by the scalar codec and PACKED vector codes.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError

__all__ = ["pack_codes", "unpack_codes", "gather_bit_rows"]


def pack_codes(codes: np.ndarray, bits: int) -> bytes:
    """Pack non-negative integers into a contiguous MSB-first bitstream.

    Parameters
    ----------
    codes : flat or multi-dimensional integer array; flattened row-major.
    bits : width of each code in bits, 1..32.

    Returns
    -------
    bytes of length ceil(codes.size * bits / 8).
    """
    if not 1 <= bits <= 32:
        raise DataError(f"code width must be in [1, 32], got {bits}")
    flat = np.ascontiguousarray(codes).reshape(-1).astype(np.int64)
    if flat.size and (flat.min() < 0 or flat.max() >> bits):
        raise DataError(f"codes do not fit in {bits} bits")
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    bitmat = ((flat[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bitmat.reshape(-1)).tobytes()


def unpack_codes(payload: bytes | np.ndarray, bits: int, count: int,
                 start_bit: int = 0) -> np.ndarray:
    """Read `count` codes of `bits` bits from an MSB-first bitstream.

    `start_bit` is the offset of the first code within the stream.
    Returns an int64 array of length `count`.
    """
    if not 1 <= bits <= 32:
        raise DataError(f"code width must be in [1, 32], got {bits}")
    buf = np.frombuffer(payload, dtype=np.uint8) if isinstance(payload, (bytes, bytearray)) \
        else np.asarray(payload, dtype=np.uint8)
    need = start_bit + count * bits
    if need > buf.size * 8:
        raise DataError(f"bitstream too short: need {need} bits, have {buf.size * 8}")
    stream = np.unpackbits(buf, count=need)[start_bit:]
    weights = (1 << np.arange(bits - 1, -1, -1)).astype(np.int64)
    return stream.reshape(count, bits).astype(np.int64) @ weights


def gather_bit_rows(payload: bytes | np.ndarray, row_bits: int,
                    row_ids: np.ndarray) -> np.ndarray:
    """Extract bit-rows of width `row_bits` from a packed stream.

    Row r occupies bits [r*row_bits, (r+1)*row_bits).  Returns a uint8
    matrix of shape (len(row_ids), row_bits) holding the raw bits; rows
    may repeat and appear in any order.  Only whole-byte windows around
    each requested row are touched.
    """
    buf = np.frombuffer(payload, dtype=np.uint8) if isinstance(payload, (bytes, bytearray)) \
        else np.asarray(payload, dtype=np.uint8)
    rows = np.asarray(row_ids, dtype=np.int64)
    if rows.size == 0:
        return np.zeros((0, row_bits), dtype=np.uint8)
    starts = rows * row_bits
    if (starts + row_bits).max() > buf.size * 8:
        raise DataError("row ids exceed the packed stream")
    first_byte = starts // 8
    offsets = starts % 8
    # widest window any 8-bit phase can need
    window = (row_bits + 7 + 7) // 8
    idx = first_byte[:, None] + np.arange(window, dtype=np.int64)[None, :]
    np.minimum(idx, buf.size - 1, out=idx)  # clamped tail bytes fall past row_bits
    bits = np.unpackbits(buf[idx], axis=1)
    cols = offsets[:, None] + np.arange(row_bits, dtype=np.int64)[None, :]
    return np.take_along_axis(bits, cols, axis=1)
