import itertools

import numpy as np
import pytest
from scipy.signal import convolve2d

from mffc.errors import ContractError, InputError
from mffc.diversify import (OffspringSet, central_crop, conv2_full, crop_set, dedup_commutative, make_offspring,
                            mffc)
from mffc.gabor import ComplexFilter, FilterBank, GaborParams, condensed_ensemble
from mffc.learning import bank_from_rows


def loop_conv(a, b):
    """Direct-sum full convolution of two complex arrays."""
    ha, wa = a.shape
    hb, wb = b.shape
    out = np.zeros((ha + hb - 1, wa + wb - 1), dtype=complex)
    for i in range(ha):
        for j in range(wa):
            for m in range(hb):
                for n in range(wb):
                    out[i + m, j + n] += a[i, j] * b[m, n]
    return out


def random_filter(rng, k):
    return ComplexFilter(rng.standard_normal((k, k)), rng.standard_normal((k, k)))


def random_bank(rng, n, k, kind="gabor_cond"):
    return FilterBank(rng.standard_normal((n, k, k)), rng.standard_normal((n, k, k)), kind)


def test_impulse_is_identity():
    rng = np.random.default_rng(0)
    f = random_filter(rng, 5)
    delta = np.zeros((1, 1))
    delta[0, 0] = 1
    out = conv2_full(ComplexFilter.real(delta), f)
    np.testing.assert_array_equal(out.re, f.re)
    np.testing.assert_array_equal(out.im, f.im)


def test_commutative():
    rng = np.random.default_rng(1)
    a, b = random_filter(rng, 3), random_filter(rng, 5)
    ab, ba = conv2_full(a, b), conv2_full(b, a)
    np.testing.assert_allclose(ab.re, ba.re, atol=1e-13)
    np.testing.assert_allclose(ab.im, ba.im, atol=1e-13)


def test_matches_loop_oracle():
    rng = np.random.default_rng(2)
    a, b = random_filter(rng, 3), random_filter(rng, 3)
    got = conv2_full(a, b).to_complex()
    want = loop_conv(a.to_complex(), b.to_complex())
    assert got.shape == (5, 5)
    assert np.abs(got - want).max() < 1e-13


def test_two_fold_counts():
    rng = np.random.default_rng(3)
    oset = mffc([random_bank(rng, 8, 3), random_bank(rng, 8, 3)])
    assert len(oset) == 64 and oset.offspring_side == 5


def test_three_fold_counts():
    rng = np.random.default_rng(4)
    oset = mffc([random_bank(rng, 8, 3) for _ in range(3)])
    assert len(oset) == 512 and oset.offspring_side == 7


def test_single_fold_is_identity():
    bank = condensed_ensemble()
    oset = mffc([bank])
    np.testing.assert_array_equal(oset.re, bank.re)
    np.testing.assert_array_equal(oset.im, bank.im)


def test_last_fold_varies_fastest():
    rng = np.random.default_rng(5)
    a, b = random_bank(rng, 3, 3), random_bank(rng, 4, 3)
    oset = mffc([a, b])
    for i, j in itertools.product(range(3), range(4)):
        want = conv2_full(a[i], b[j])
        np.testing.assert_array_equal(oset[i * 4 + j].re, want.re)


def test_size_law():
    rng = np.random.default_rng(6)
    for m, k in [(1, 5), (2, 7), (3, 3), (2, 9)]:
        oset = mffc([random_bank(rng, 2, k) for _ in range(m)])
        assert oset.offspring_side == m * (k - 1) + 1


def test_mffc_errors():
    rng = np.random.default_rng(7)
    with pytest.raises(InputError):
        mffc([])
    with pytest.raises(InputError):
        mffc([random_bank(rng, 2, 3), random_bank(rng, 2, 5)])


def test_dedup_eight_filters():
    bank = condensed_ensemble()
    oset = dedup_commutative(mffc([bank, bank]))
    assert oset.n_unique == 36 and len(oset) == 64


def test_dedup_single_filter():
    rng = np.random.default_rng(8)
    bank = random_bank(rng, 1, 3)
    assert dedup_commutative(mffc([bank, bank])).n_unique == 1


def test_dedup_three_filters_soundness():
    rng = np.random.default_rng(9)
    bank = random_bank(rng, 3, 3)
    full = mffc([bank, bank])
    dd = dedup_commutative(full)
    assert dd.n_unique == 6
    for i, j in itertools.product(range(3), range(3)):
        ell = i * 3 + j
        twin = full[j * 3 + i]
        assert np.abs(full[ell].to_complex() - twin.to_complex()).max() < 1e-13
        assert np.abs(dd[ell].to_complex() - full[ell].to_complex()).max() < 1e-13


def test_dedup_three_fold():
    bank = condensed_ensemble(GaborParams(support=3))
    dd = dedup_commutative(mffc([bank] * 3))
    assert dd.n_unique == 120  # multisets of size 3 from 8
    full = mffc([bank] * 3)
    for ell in range(len(full)):
        assert np.abs(dd[ell].to_complex() - full[ell].to_complex()).max() < 1e-12


def test_dedup_rejects_heterogeneous_folds():
    rng = np.random.default_rng(10)
    with pytest.raises(ContractError):
        dedup_commutative(mffc([random_bank(rng, 2, 3), random_bank(rng, 2, 3)]))


def test_crop_identity():
    rng = np.random.default_rng(11)
    f = random_filter(rng, 5)
    c = central_crop(f, 5)
    np.testing.assert_array_equal(c.re, f.re)


def test_crop_centre():
    f = ComplexFilter.real(np.arange(25.0).reshape(5, 5))
    np.testing.assert_array_equal(central_crop(f, 3).re, np.arange(25.0).reshape(5, 5)[1:4, 1:4])


def test_crop_offspring_window():
    rng = np.random.default_rng(12)
    f = random_filter(rng, 13)
    c = central_crop(f, 7)
    for r in range(7):
        for s in range(7):
            assert c.re[r, s] == f.re[r + 3, s + 3] and c.im[r, s] == f.im[r + 3, s + 3]


@pytest.mark.parametrize("k", [4, 7, 0])
def test_crop_errors(k):
    with pytest.raises(InputError):
        central_crop(ComplexFilter.real(np.zeros((5, 5))), k)


def test_crop_set():
    oset = make_offspring("gabor", condensed_ensemble())[0]
    cropped = crop_set(oset, 7)
    assert cropped.offspring_side == 7 and cropped.n_unique == 36


def test_gabor_pca_offspring():
    rng = np.random.default_rng(13)
    pca = bank_from_rows(np.linalg.qr(rng.standard_normal((49, 8)))[0].T, 7, "pca")
    re, im = make_offspring("gabor_pca", condensed_ensemble(), pca)
    for oset in (re, im):
        assert len(oset) == 64 and oset.n_unique == 64 and oset.offspring_side == 13
        assert oset.kind == "gabor_pca" and oset.dedup is None
    gabor = condensed_ensemble()
    np.testing.assert_allclose(re.re[8 + 3], convolve2d(gabor.re[1], pca.re[3]), atol=1e-14)
    np.testing.assert_allclose(im.im[8 + 3], convolve2d(gabor.im[1], pca.re[3]), atol=1e-14)
    assert not re.im.any() and not im.re.any()


def test_gabor_gabor_offspring():
    gabor = condensed_ensemble()
    re, im = make_offspring("gabor", gabor)
    assert re.n_unique == im.n_unique == 36
    assert len(re.dedup) == 64 and set(re.dedup) == set(range(36))
    for i, j in itertools.product(range(8), range(8)):
        np.testing.assert_array_equal(re[i * 8 + j].re, re[j * 8 + i].re)
    # per-constituent: the real set never mixes in imaginary parts
    np.testing.assert_allclose(re[8 * 2 + 5].re, convolve2d(gabor.re[2], gabor.re[5]), atol=1e-14)
    np.testing.assert_allclose(im[8 * 2 + 5].im, convolve2d(gabor.im[2], gabor.im[5]), atol=1e-14)


def test_make_offspring_contracts():
    gabor = condensed_ensemble()
    with pytest.raises(ContractError):
        make_offspring("gabor_ica", gabor, None)
    with pytest.raises(ContractError):
        make_offspring("gabor_pca", gabor, gabor)
    with pytest.raises(InputError):
        make_offspring("dct", gabor)


def test_full_convolution_is_associative():
    rng = np.random.default_rng(14)
    image = rng.standard_normal((20, 20))
    gabor = condensed_ensemble()
    oset = mffc([gabor, gabor])
    sigma = oset[3 * 8 + 6].to_complex()
    direct = convolve2d(image, sigma)
    staged = convolve2d(convolve2d(image, gabor[3].to_complex()), gabor[6].to_complex())
    assert np.abs(direct - staged).max() <= 1e-10 * np.abs(direct).max()


def test_enumeration_is_deterministic():
    a = make_offspring("gabor", condensed_ensemble())[0]
    b = make_offspring("gabor", condensed_ensemble())[0]
    assert a.re.tobytes() == b.re.tobytes()
    np.testing.assert_array_equal(a.dedup, b.dedup)


def test_offspring_set_validation():
    with pytest.raises(InputError):
        OffspringSet(np.zeros((3, 5, 5)), np.zeros((3, 5, 5)), (2, 2))
    with pytest.raises(InputError):
        OffspringSet(np.zeros((3, 5, 5)), np.zeros((3, 5, 5)), (2, 2), dedup=np.array([0, 1, 2, 3]))
