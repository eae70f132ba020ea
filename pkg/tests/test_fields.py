import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partgraph.errors import InvalidInputError
from partgraph.fields import (
    argmax_labels,
    bilinear_sample,
    bilinear_sample_many,
    one_hot,
    read_pgf,
    upsample_bilinear,
    write_pgf,
)


def test_bilinear_interior_value():
    field = np.array([[1.0, 2.0], [3.0, 4.0]])
    # weights (1-|du|)(1-|dv|): 0.1875*1 + 0.0625*2 + 0.5625*3 + 0.1875*4
    assert bilinear_sample(field, 0.25, 0.75) == pytest.approx(2.75)


def test_bilinear_exact_on_lattice_points():
    field = np.arange(12, dtype=np.float64).reshape(3, 4)
    for v in range(3):
        for u in range(4):
            assert bilinear_sample(field, u, v) == field[v, u]


def test_bilinear_zero_padding_outside():
    field = np.array([[1.0, 2.0], [3.0, 4.0]])
    # only the (0, 0) neighbor is in bounds, weight 0.5
    assert bilinear_sample(field, -0.5, 0.0) == pytest.approx(0.5)
    assert bilinear_sample(field, -5.0, -5.0) == 0.0


def test_bilinear_multichannel_and_many():
    field = np.stack([np.ones((2, 2)), np.full((2, 2), 3.0)], axis=2)
    out = bilinear_sample(field, 0.5, 0.5)
    assert np.allclose(out, [1.0, 3.0])
    many = bilinear_sample_many(field[..., 0], np.array([0.0, 0.5]), np.array([0.0, 0.5]))
    assert np.allclose(many, [1.0, 1.0])


def test_bilinear_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        bilinear_sample(np.ones((2, 2)), np.nan, 0.0)
    with pytest.raises(InvalidInputError):
        bilinear_sample(np.zeros((0, 2)), 0.0, 0.0)


@given(
    u=st.floats(0.0, 2.0),
    v=st.floats(0.0, 1.0),
    a=st.floats(-5.0, 5.0),
    b=st.floats(-5.0, 5.0),
)
@settings(max_examples=60, deadline=None)
def test_bilinear_is_linear_in_the_field(u, v, a, b):
    rng = np.random.default_rng(3)
    f = rng.normal(size=(2, 3))
    g = rng.normal(size=(2, 3))
    combined = bilinear_sample(a * f + b * g, u, v)
    split = a * bilinear_sample(f, u, v) + b * bilinear_sample(g, u, v)
    assert combined == pytest.approx(split, abs=1e-9)


def test_upsample_1d_profile():
    # factor 2, half-pixel convention with replicated edges
    out = upsample_bilinear(np.array([[0.0, 1.0]]), 2)
    assert np.allclose(out[0], [0.0, 0.25, 0.75, 1.0])


def test_upsample_factor_one_is_identity():
    field = np.random.default_rng(0).normal(size=(3, 4))
    assert np.array_equal(upsample_bilinear(field, 1), field)


def test_upsample_preserves_constants():
    out = upsample_bilinear(np.full((3, 3), 2.5), 4)
    assert out.shape == (12, 12)
    assert np.allclose(out, 2.5)


def test_upsample_then_sample_matches_source_interior_odd_factor():
    # with an odd factor, output cell (factor*i + factor//2) sits exactly on
    # source sample i, so point-sampling there reproduces the source
    rng = np.random.default_rng(5)
    field = rng.normal(size=(4, 5))
    factor = 3
    up = upsample_bilinear(field, factor)
    for v in range(4):
        for u in range(5):
            assert up[factor * v + 1, factor * u + 1] == pytest.approx(field[v, u])


def test_upsample_rejects_bad_factor():
    with pytest.raises(InvalidInputError):
        upsample_bilinear(np.ones((2, 2)), 0)


def test_argmax_labels_lowest_index_ties():
    probs = np.zeros((1, 2, 3))
    probs[0, 0] = [0.5, 0.5, 0.0]  # tie between 0 and 1 -> 0
    probs[0, 1] = [0.1, 0.2, 0.7]
    labels = argmax_labels(probs)
    assert labels.tolist() == [[0, 2]]


def test_one_hot_round_trip():
    labels = np.array([[0, 2], [1, 1]])
    oh = one_hot(labels, 3)
    assert oh.shape == (2, 2, 3)
    assert np.array_equal(argmax_labels(oh), labels)
    assert np.allclose(oh.sum(axis=2), 1.0)


def test_pgf_round_trip_2d_and_3d(tmp_path):
    rng = np.random.default_rng(1)
    for shape in ((5, 7), (4, 6, 2)):
        field = rng.normal(size=shape).astype(np.float32).astype(np.float64)
        path = tmp_path / f"f{len(shape)}.pgf"
        write_pgf(path, field)
        back = read_pgf(path)
        assert back.shape == field.shape
        assert np.array_equal(back, field)


def test_pgf_header_layout(tmp_path):
    path = tmp_path / "h.pgf"
    write_pgf(path, np.zeros((3, 5, 2)))
    raw = path.read_bytes()
    assert raw[:4] == b"PGF1"
    # u32 little-endian width, height, channels
    assert raw[4:16] == (5).to_bytes(4, "little") + (3).to_bytes(4, "little") + (2).to_bytes(4, "little")
    assert len(raw) == 16 + 4 * 3 * 5 * 2


def test_pgf_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.pgf"
    path.write_bytes(b"NOPE" + b"\0" * 16)
    with pytest.raises(InvalidInputError):
        read_pgf(path)
