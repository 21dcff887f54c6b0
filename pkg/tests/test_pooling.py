import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mffc.descriptor import RawHistogram
from mffc.errors import InputError, ParameterError
from mffc.pooling import PoolSpec, normalize, pool


def test_avg_pool_hand_case():
    np.testing.assert_array_equal(pool([1, 3, 5, 7]), [2, 6])


def test_max_pool_hand_case():
    np.testing.assert_array_equal(pool([1, 3, 7, 5], PoolSpec(mode="max")), [3, 7])


def test_overlapping_window():
    np.testing.assert_array_equal(pool([0, 2, 4, 6, 8], PoolSpec(3, 2)), [2, 6])


def test_none_is_identity():
    h = np.arange(5.0)
    out = pool(h, PoolSpec(mode="none"))
    np.testing.assert_array_equal(out, h)
    assert out is not h


def test_output_length_formula():
    for d, p, s in [(262144, 2, 2), (2000, 4, 4), (11, 3, 2), (4, 4, 1)]:
        assert PoolSpec(p, s).output_length(d) == (d - p) // s + 1
    assert PoolSpec(2, 2).output_length(262144) == 131072


def test_pool_dimension_presets():
    assert PoolSpec(2, 2).output_length(245760) == 122880
    assert PoolSpec(4, 4).output_length(2 * 8 * 256 * 88) == 2 * 8 * 256 * 88 // 4


def test_pool_loop_oracle():
    rng = np.random.default_rng(0)
    h = rng.integers(0, 50, 31).astype(float)
    spec = PoolSpec(4, 3, "avg")
    got = pool(h, spec)
    want = [h[i * 3:i * 3 + 4].mean() for i in range(spec.output_length(31))]
    np.testing.assert_allclose(got, want, rtol=1e-15)


def test_pool_batch():
    rng = np.random.default_rng(1)
    h = rng.random((3, 16))
    out = pool(h)
    assert out.shape == (3, 8)
    np.testing.assert_allclose(out[1], pool(h[1]))


def test_pool_accepts_raw_histogram():
    raw = RawHistogram(np.arange(16.0), 1, 1, 3)
    np.testing.assert_array_equal(pool(raw), pool(np.arange(16.0)))


def test_pool_untiled_length():
    with pytest.raises(InputError):
        pool(np.zeros(5), PoolSpec(2, 2))
    with pytest.raises(InputError):
        pool(np.zeros(1), PoolSpec(2, 2))


@pytest.mark.parametrize("kwargs", [{"window": 0}, {"stride": 0}, {"mode": "median"}])
def test_poolspec_errors(kwargs):
    with pytest.raises(ParameterError):
        PoolSpec(**kwargs)


def test_normalize_hand_case():
    np.testing.assert_allclose(normalize([9, 16, 0]), [3 / 5, 4 / 5, 0], rtol=1e-15)


def test_normalize_zero_vector():
    out, is_zero = normalize(np.zeros(4), return_status=True)
    assert is_zero and not out.any()
    assert normalize([0, 1], return_status=True)[1] is False


def test_normalize_negative():
    with pytest.raises(InputError):
        normalize([1, -1])


hist = arrays(np.float64, st.integers(1, 64).map(lambda n: 2 * n),
              elements=st.floats(0, 1e4, allow_nan=False, allow_subnormal=False))


@settings(max_examples=100, deadline=None)
@given(hist)
def test_normalize_unit_norm(h):
    out, is_zero = normalize(h, return_status=True)
    if is_zero:
        assert not out.any()
    else:
        assert abs(np.linalg.norm(out) - 1) < 1e-12
        assert (out >= 0).all()


@settings(max_examples=100, deadline=None)
@given(hist, st.floats(1e-3, 1e3))
def test_normalize_scale_invariant(h, c):
    if not h.any():
        return
    np.testing.assert_allclose(normalize(c * h), normalize(h), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(hist)
def test_avg_pool_preserves_mass(h):
    # non-overlapping average pooling halves the total mass exactly
    assert np.isclose(pool(h).sum() * 2, h.sum(), rtol=1e-12, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(hist)
def test_max_pool_bounds(h):
    m = pool(h, PoolSpec(mode="max"))
    a = pool(h)
    assert (m >= a - 1e-12).all()
    assert m.max() == h.max()
