import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featgrind import (DataError, FeatureMatrix, FormatError, VqCodec,
                       VqParams, decode_vq, encode_vq, fit_vq, load_vq,
                       save_vq, vq_compression_ratio)

import oracles


def _fm(rows, dtype=np.float32) -> FeatureMatrix:
    return FeatureMatrix(np.asarray(rows, dtype=dtype))


def _rt_distortion(f: FeatureMatrix, codec) -> float:
    out = decode_vq(codec).values.astype(np.float64)
    return float(((f.values.astype(np.float64) - out) ** 2).sum())


# ----------------------------------------------------------------- fitting

def test_three_row_example_is_exact():
    f = _fm([[1, 0, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]])
    p = VqParams(width=2, length=2, metric="euclidean", seed=0)
    codec = encode_vq(f, fit_vq(f, p))
    for cb in codec.codebooks:
        assert {tuple(row) for row in cb.tolist()} == {(0.0, 1.0), (1.0, 0.0)}
    assert np.array_equal(codec.codes[0], codec.codes[1])
    assert not np.array_equal(codec.codes[0], codec.codes[2])
    assert np.array_equal(decode_vq(codec).values, f.values)
    assert _rt_distortion(f, codec) == 0.0
    # the oracle agrees this is the optimum
    assert oracles.kmeans_optimum(f.values[:, :2], 2) == 0.0


def test_duplicate_rows_collapse_to_distinct_set():
    rng = np.random.default_rng(3)
    base = rng.standard_normal((4, 6)).astype(np.float32)
    f = FeatureMatrix(base[rng.integers(0, 4, size=50)])
    codec = encode_vq(f, fit_vq(f, VqParams(width=3, length=8,
                                            metric="euclidean")))
    assert codec.part_lengths() == (4, 4)  # truncated to the distinct count
    assert all(s["truncated"] for s in codec.fit_stats)
    assert np.array_equal(decode_vq(codec).values, f.values)


def test_onehot_rows_are_lossless():
    f = _fm(np.eye(12, dtype=np.float32)[np.arange(64) % 12])
    for metric in ("euclidean", "cosine"):
        codec = encode_vq(f, fit_vq(f, VqParams(width=3, length=8,
                                                metric=metric)))
        assert np.array_equal(decode_vq(codec).values, f.values)


def test_kmeans_reaches_oracle_optimum_euclidean():
    hits = 0
    for seed in range(8):
        rng = np.random.default_rng(100 + seed)
        pts = rng.standard_normal((9, 2))
        f = FeatureMatrix(pts.astype(np.float32))
        codec = fit_vq(f, VqParams(width=2, length=3, metric="euclidean",
                                   restarts=8, kmeans_max_iters=100,
                                   kmeans_tol=0.0, seed=seed))
        got = codec.fit_stats[0]["objective"]
        want = oracles.kmeans_optimum(f.values.astype(np.float64), 3)
        assert got >= want - 1e-9
        hits += got <= want + 1e-9 * max(want, 1.0)
    assert hits >= 7  # multistart Lloyd should almost always find the optimum


def test_kmeans_reaches_oracle_optimum_cosine():
    hits = 0
    for seed in range(8):
        rng = np.random.default_rng(200 + seed)
        pts = rng.standard_normal((8, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        f = FeatureMatrix(pts.astype(np.float32))
        codec = fit_vq(f, VqParams(width=3, length=2, metric="cosine",
                                   restarts=8, kmeans_max_iters=100,
                                   kmeans_tol=0.0, seed=seed))
        # fit re-normalizes the float32 rows, matching the oracle's input
        unit = f.values.astype(np.float64)
        unit /= np.linalg.norm(unit, axis=1, keepdims=True)
        got = codec.fit_stats[0]["objective"]
        want = oracles.spherical_kmeans_optimum(unit, 2)
        assert got >= want - 1e-9
        hits += got <= want + 1e-9 * max(want, 1.0)
    assert hits >= 7


def test_objective_history_non_increasing():
    rng = np.random.default_rng(5)
    f = FeatureMatrix(rng.standard_normal((300, 8)).astype(np.float32))
    for metric in ("euclidean", "cosine"):
        codec = fit_vq(f, VqParams(width=4, length=16, metric=metric, seed=2))
        for s in codec.fit_stats:
            h = np.asarray(s["history"])
            assert (np.diff(h) <= 1e-9 * np.maximum(h[:-1], 1e-12) + 1e-12).all()


def test_fit_deterministic():
    rng = np.random.default_rng(8)
    f = FeatureMatrix(rng.standard_normal((500, 10)).astype(np.float32))
    p = VqParams(width=5, length=32, metric="cosine", seed=77,
                 fit_sample_fraction=0.5)
    a = encode_vq(f, fit_vq(f, p))
    b = encode_vq(f, fit_vq(f, p))
    for cb_a, cb_b in zip(a.codebooks, b.codebooks):
        assert np.array_equal(cb_a, cb_b)
    assert np.array_equal(a.codes, b.codes)


def test_last_part_narrower_and_width_checks():
    rng = np.random.default_rng(9)
    f = FeatureMatrix(rng.standard_normal((40, 10)).astype(np.float32))
    codec = fit_vq(f, VqParams(width=4, length=4))
    assert codec.num_parts == 3
    assert [cb.shape[1] for cb in codec.codebooks] == [4, 4, 2]
    with pytest.raises(DataError):
        fit_vq(f, VqParams(width=16, length=4))
    with pytest.raises(DataError):
        VqParams(width=4, length=1)
    with pytest.raises(DataError):
        VqParams(width=4, length=4, metric="manhattan")
    with pytest.raises(DataError):
        VqParams(width=0, length=4)


# ---------------------------------------------------------------- encoding

def test_encode_assigns_nearest_and_breaks_ties_low():
    cb = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 1.0]], dtype=np.float32)
    codec = VqCodec(VqParams(width=2, length=4, metric="euclidean"), 2,
                    (cb,))
    f = _fm([[0.9, 0.9], [0.1, -0.1]])
    codes = encode_vq(f, codec).codes
    assert codes.tolist() == [[1], [0]]  # entry 2 ties entry 1, loses on index


def test_cosine_scale_invariance_and_zero_rows():
    rng = np.random.default_rng(11)
    base = rng.standard_normal((30, 4)).astype(np.float32)
    base[5] = 0.0  # zero sub-vector
    f = FeatureMatrix(base)
    codec = fit_vq(f, VqParams(width=4, length=8, metric="cosine"))
    a = encode_vq(f, codec).codes
    b = encode_vq(FeatureMatrix(base * 7.5), codec).codes
    assert np.array_equal(a, b)
    assert a[5, 0] == 0
    # decoded non-zero rows sit on the unit sphere
    out = decode_vq(encode_vq(f, codec)).values
    norms = np.linalg.norm(out.astype(np.float64), axis=1)
    np.testing.assert_allclose(norms[np.arange(30) != 5], 1.0, atol=1e-6)


def test_all_zero_part_has_single_zero_entry():
    vals = np.zeros((10, 4), dtype=np.float32)
    vals[:, 2:] = np.random.default_rng(1).standard_normal((10, 2))
    f = FeatureMatrix(vals)
    codec = encode_vq(f, fit_vq(f, VqParams(width=2, length=4, metric="cosine")))
    assert codec.part_lengths()[0] == 1
    assert (codec.codes[:, 0] == 0).all()
    assert np.array_equal(decode_vq(codec).values[:, :2], vals[:, :2])


def test_encode_dimension_mismatch():
    f = _fm(np.ones((4, 6)))
    codec = fit_vq(f, VqParams(width=3, length=2))
    with pytest.raises(DataError):
        encode_vq(_fm(np.ones((4, 8))), codec)


@given(st.integers(0, 10 ** 6), st.integers(2, 8), st.integers(1, 3),
       st.sampled_from(["euclidean", "cosine"]))
@settings(max_examples=40, deadline=None)
def test_encode_is_nearest_assignment(seed, length, width, metric):
    rng = np.random.default_rng(seed)
    f = FeatureMatrix(rng.standard_normal((25, width * 2)).astype(np.float32))
    codec = encode_vq(f, fit_vq(f, VqParams(width=width, length=length,
                                            metric=metric, seed=seed)))
    x = f.values.astype(np.float64)
    for pi, sl in enumerate(codec.params.part_slices(codec.d)):
        pts = x[:, sl]
        cb = codec.codebooks[pi].astype(np.float64)
        if metric == "cosine":
            norms = np.linalg.norm(pts, axis=1, keepdims=True)
            score = -(pts / np.where(norms > 0, norms, 1.0)) @ cb.T
        else:
            score = ((pts[:, None, :] - cb[None, :, :]) ** 2).sum(axis=2)
        got = codec.codes[:, pi]
        best = score[np.arange(25), got]
        assert (best <= score.min(axis=1) + 1e-12).all()


# ---------------------------------------------------------------- decoding

def test_decode_requires_codes_and_valid_rows():
    f = _fm(np.random.default_rng(0).standard_normal((10, 4)))
    codec = fit_vq(f, VqParams(width=2, length=4))
    with pytest.raises(DataError, match="no codes"):
        decode_vq(codec)
    full = encode_vq(f, codec)
    with pytest.raises(DataError):
        decode_vq(full, np.array([10]))
    sub = decode_vq(full, np.array([3, 3, 0])).values
    assert np.array_equal(sub[0], sub[1])
    assert np.array_equal(sub, decode_vq(full).values[[3, 3, 0]])


# ------------------------------------------------------------ files and CR

def test_compression_ratio_frozen_values():
    rng = np.random.default_rng(2)
    f = FeatureMatrix(rng.standard_normal((64, 16)).astype(np.float32))
    codec = fit_vq(f, VqParams(width=16, length=2048, restarts=1,
                               kmeans_max_iters=3))
    cr = vq_compression_ratio(codec)
    assert abs(cr.theoretical - 46.5) < 0.05
    assert cr.realized == cr.theoretical  # 2048 is a power of two, packed
    assert cr.bits_per_code == 11

    f100 = FeatureMatrix(rng.standard_normal((64, 100)).astype(np.float32))
    codec = fit_vq(f100, VqParams(width=100, length=16384, restarts=1,
                                  kmeans_max_iters=3))
    assert abs(vq_compression_ratio(codec).theoretical - 228.6) < 0.05

    byte = fit_vq(f, VqParams(width=16, length=2048, code_layout="byte_aligned",
                              restarts=1, kmeans_max_iters=3))
    assert vq_compression_ratio(byte).realized == 32.0  # 2 bytes per code


def test_realized_never_exceeds_theoretical():
    rng = np.random.default_rng(4)
    f = FeatureMatrix(rng.standard_normal((32, 8)).astype(np.float32))
    for length in (3, 5, 17, 100, 2048):
        for layout in ("packed", "byte_aligned"):
            codec = fit_vq(f, VqParams(width=8, length=length,
                                       code_layout=layout, restarts=1,
                                       kmeans_max_iters=3))
            cr = vq_compression_ratio(codec)
            assert cr.realized <= cr.theoretical + 1e-12


def test_codebook_bytes_reported():
    f = _fm(np.random.default_rng(6).standard_normal((200, 8)))
    codec = fit_vq(f, VqParams(width=4, length=16, metric="euclidean"))
    cr = vq_compression_ratio(codec)
    assert cr.codebook_bytes == sum(cb.shape[0] * cb.shape[1] * 4
                                    for cb in codec.codebooks)


def test_vqf_roundtrip_both_layouts(tmp_path):
    rng = np.random.default_rng(13)
    f = FeatureMatrix(rng.standard_normal((37, 7)).astype(np.float32))
    for layout in ("packed", "byte_aligned"):
        p = VqParams(width=3, length=5, metric="cosine", code_layout=layout)
        codec = encode_vq(f, fit_vq(f, p))
        path = tmp_path / f"x-{layout}.vqf"
        save_vq(codec, str(path))
        raw = path.read_bytes()
        assert raw[:8] == b"VQF1\x00\x00\x00\x00"
        back = load_vq(str(path))
        assert back.params == p
        assert (back.n, back.d) == (codec.n, codec.d)
        assert np.array_equal(back.codes, codec.codes)
        assert np.array_equal(decode_vq(back).values, decode_vq(codec).values)
        save_vq(back, str(tmp_path / f"y-{layout}.vqf"))
        assert (tmp_path / f"y-{layout}.vqf").read_bytes() == raw


def test_vqf_fit_only_roundtrip_and_padding(tmp_path):
    # 3 distinct sub-vectors against length=8 forces padded storage
    rng = np.random.default_rng(14)
    base = rng.standard_normal((3, 4)).astype(np.float32)
    f = FeatureMatrix(base[rng.integers(0, 3, size=40)])
    codec = fit_vq(f, VqParams(width=4, length=8, metric="euclidean"))
    assert codec.part_lengths() == (3,)
    path = tmp_path / "cb.vqf"
    save_vq(codec, str(path))
    back = load_vq(str(path))
    assert back.codes is None and back.n == 0
    assert back.part_lengths() == (8,)  # padded on disk
    # padding must not change what encode produces
    a = encode_vq(f, codec).codes
    b = encode_vq(f, back).codes
    assert np.array_equal(a, b)
    assert np.array_equal(decode_vq(encode_vq(f, back)).values, f.values)


def test_vqf_rejects_corruption(tmp_path):
    f = _fm(np.random.default_rng(15).standard_normal((20, 4)))
    codec = encode_vq(f, fit_vq(f, VqParams(width=2, length=4)))
    path = tmp_path / "x.vqf"
    save_vq(codec, str(path))
    raw = path.read_bytes()
    (tmp_path / "short.vqf").write_bytes(raw[:-1])
    with pytest.raises(FormatError):
        load_vq(str(tmp_path / "short.vqf"))
    (tmp_path / "magic.vqf").write_bytes(b"XQF1\x00\x00\x00\x00" + raw[8:])
    with pytest.raises(FormatError):
        load_vq(str(tmp_path / "magic.vqf"))


def test_float64_source_uses_wider_ratio():
    f = _fm(np.random.default_rng(16).standard_normal((16, 16)), np.float64)
    codec = fit_vq(f, VqParams(width=16, length=256, restarts=1,
                               kmeans_max_iters=3))
    assert vq_compression_ratio(codec).theoretical == 16 * 64 / 8.0
