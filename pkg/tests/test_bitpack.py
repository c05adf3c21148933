import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featgrind.bitpack import gather_bit_rows, pack_codes, unpack_codes
from featgrind.errors import DataError

import oracles


def test_matches_reference_stream():
    codes = [5, 0, 7, 3, 1]
    assert pack_codes(np.array(codes), 3) == oracles.pack_bits(codes, 3)
    assert pack_codes(np.array([1, 0, 1, 1, 0, 0, 1, 0, 1]), 1) == \
        oracles.pack_bits([1, 0, 1, 1, 0, 0, 1, 0, 1], 1)


def test_payload_length_rounds_up():
    assert len(pack_codes(np.arange(5), 3)) == 2   # 15 bits
    assert len(pack_codes(np.ones(8, dtype=int), 1)) == 1
    assert len(pack_codes(np.zeros(0, dtype=int), 4)) == 0


def test_rejects_overflow_and_bad_width():
    with pytest.raises(DataError):
        pack_codes(np.array([8]), 3)
    with pytest.raises(DataError):
        pack_codes(np.array([-1]), 3)
    with pytest.raises(DataError):
        pack_codes(np.array([0]), 0)
    with pytest.raises(DataError):
        unpack_codes(b"\x00", 3, 5)  # needs 15 bits, has 8


@given(st.integers(1, 16), st.lists(st.integers(0, 2 ** 16 - 1), max_size=200))
@settings(max_examples=200)
def test_roundtrip_identity(bits, values):
    codes = np.array([v % (1 << bits) for v in values], dtype=np.int64)
    payload = pack_codes(codes, bits)
    assert len(payload) == (codes.size * bits + 7) // 8
    back = unpack_codes(payload, bits, codes.size)
    assert np.array_equal(back, codes)


@given(st.integers(1, 12), st.integers(1, 9), st.integers(1, 25),
       st.integers(0, 2 ** 31 - 1))
@settings(max_examples=100)
def test_gather_matches_full_unpack(bits, cols, nrows, seed):
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, 1 << bits, size=(nrows, cols))
    payload = pack_codes(codes, bits)
    rows = rng.integers(0, nrows, size=7)
    gathered = gather_bit_rows(payload, cols * bits, rows)
    weights = (1 << np.arange(bits - 1, -1, -1))
    decoded = gathered.reshape(7, cols, bits) @ weights
    assert np.array_equal(decoded, codes[rows])


def test_gather_rejects_out_of_stream():
    payload = pack_codes(np.arange(4), 4)
    with pytest.raises(DataError):
        gather_bit_rows(payload, 8, np.array([2]))
