import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hif_rplot.errors import ConfigError, DataError
from hif_rplot.recurrence import (
    EmbeddingParams, RecurrenceTransform, binary_recurrence, block_average, delay_embed, export_heatmap,
    heatmap_bytes, pool_matrix, recurrence_matrix, upper_triangle,
)

WORKED = [-0.024, -0.008, 0.001]
WORKED_MATRIX = np.array([[0, 0.016, 0.025], [0.016, 0, 0.009], [0.025, 0.009, 0]])

series_st = arrays(np.float64, st.integers(2, 64), elements=st.floats(-1e3, 1e3))
params_st = st.builds(EmbeddingParams, st.integers(1, 4), st.integers(1, 4))


def test_worked_example():
    rm = recurrence_matrix(WORKED, EmbeddingParams(1, 1))
    assert np.max(np.abs(rm.distances - WORKED_MATRIX)) < 1e-9


def test_small_examples():
    np.testing.assert_array_equal(recurrence_matrix([0.0, 3.0]).distances, [[0, 3], [3, 0]])
    assert not recurrence_matrix(np.full(10, 4.2)).distances.any()


def test_delay_embed_examples():
    assert delay_embed(np.arange(5.0), EmbeddingParams(2, 1)).shape == (4, 2)
    np.testing.assert_array_equal(delay_embed([1.0, 2.0, 3.0]), [[1], [2], [3]])
    np.testing.assert_array_equal(delay_embed([10, 20, 30, 40], EmbeddingParams(2, 2)), [[10, 30], [20, 40]])
    with pytest.raises(DataError):
        delay_embed([1.0, 2.0, 3.0], EmbeddingParams(3, 1))
    with pytest.raises(ValueError):
        EmbeddingParams(0, 1)


@given(x=series_st, p=params_st)
def test_matrix_is_a_metric(x, p):
    if p.n_vectors(len(x)) < 2:
        return
    r = recurrence_matrix(x, p).distances
    assert np.array_equal(r, r.T)
    assert not np.diag(r).any()
    assert np.all(r >= 0)
    # R[i,k] <= R[i,j] + R[j,k] for every triple
    assert np.all(r[:, None, :] <= r[:, :, None] + r[None, :, :] + 1e-12 * (1 + r.max()))


@given(x=series_st)
def test_m1_matches_abs_difference_table(x):
    oracle = np.array([[abs(a - b) for b in x] for a in x])
    np.testing.assert_array_equal(recurrence_matrix(x).distances, oracle)


@given(x=arrays(np.float64, st.integers(2, 64), elements=st.integers(-1000, 1000).map(float)),
       c=st.integers(-1000, 1000).map(float))
def test_translation_invariance(x, c):
    np.testing.assert_array_equal(recurrence_matrix(x).distances, recurrence_matrix(x + c).distances)


@given(base=arrays(np.float64, st.integers(1, 8), elements=st.floats(-10, 10)), reps=st.integers(2, 6))
def test_periodic_zero_diagonals(base, reps):
    p = len(base)
    r = recurrence_matrix(np.tile(base, reps)).distances
    i, j = np.indices(r.shape)
    assert not r[(i - j) % p == 0].any()


def test_pool_examples():
    a = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(pool_matrix(a, 2), [[2.5, 4.5], [10.5, 12.5]])
    np.testing.assert_array_equal(pool_matrix(a, 4), a)
    np.testing.assert_allclose(pool_matrix(np.full((7, 7), 1.5), 3), np.full((3, 3), 1.5))
    with pytest.raises(DataError):
        pool_matrix(a, 5)


@given(x=arrays(np.float64, st.integers(2, 60), elements=st.floats(-100, 100)), data=st.data())
def test_pool_keeps_symmetry_and_shape(x, data):
    r = recurrence_matrix(x).distances
    target = data.draw(st.integers(1, len(x)))
    out = pool_matrix(r, target)
    assert out.shape == (target, target)
    np.testing.assert_allclose(out, out.T, rtol=1e-12, atol=1e-12)


def test_block_average():
    np.testing.assert_array_equal(block_average(np.arange(6.0), 3), [0.5, 2.5, 4.5])
    np.testing.assert_array_equal(block_average([1.0, 2.0], 5), [1.0, 2.0])


def test_upper_triangle_and_binary():
    a = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(upper_triangle(a), [0, 1, 2, 4, 5, 8])
    np.testing.assert_array_equal(binary_recurrence(WORKED_MATRIX, 0.01), [[1, 0, 0], [0, 1, 1], [0, 1, 1]])


def test_heatmap_bytes(tmp_path):
    data = heatmap_bytes(recurrence_matrix(WORKED).distances)
    assert data[:11] == b"P5\n3 3\n255\n"
    pix = np.frombuffer(data[11:], dtype=np.uint8).reshape(3, 3)
    assert pix[0, 0] == 0 and pix[0, 2] == 255
    assert heatmap_bytes(np.zeros((3, 3))) == b"P5\n3 3\n255\n" + bytes(9)
    assert heatmap_bytes(np.zeros((2, 5)))[:11] == b"P5\n5 2\n255\n"
    path = tmp_path / "rp.pgm"
    export_heatmap(np.eye(4), path)
    assert path.read_bytes() == heatmap_bytes(np.eye(4))
    with pytest.raises(DataError):
        export_heatmap(np.eye(2), tmp_path / "missing" / "x.pgm")
    with pytest.raises(DataError):
        heatmap_bytes(np.zeros((0, 0)))


def test_transform_shapes(small_records):
    rec = small_records[0]
    concat = RecurrenceTransform()
    joint = RecurrenceTransform(combine="joint")
    fc, fj = concat.transform(rec), joint.transform(rec)
    assert len(fc) == 408 and fc.names[0] == "a_rp000" and fc.names[-1] == "c_rp135"
    assert len(fj) == 136 and fj.names[0] == "abc_rp000"
    assert np.all(np.isfinite(fc.values)) and np.all(fc.values >= 0)
    with pytest.raises(ConfigError):
        RecurrenceTransform(combine="stack")
    with pytest.raises(ConfigError):
        RecurrenceTransform(length=8, pool=16)
