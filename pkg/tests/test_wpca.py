import warnings

import numpy as np
import pytest

from mffc.errors import InputError, LearningError
from mffc.wpca import fit_wpca, project


def test_direct_covariance_oracle():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((50, 6)) @ rng.standard_normal((6, 6))
    model = fit_wpca(x, 4)
    cov = np.cov(x, rowvar=False, ddof=1)
    vals = np.sort(np.linalg.eigvalsh(cov))[::-1][:4]
    np.testing.assert_allclose(model.eigenvalues, vals, rtol=1e-10)
    np.testing.assert_allclose(model.mean, x.mean(axis=0), rtol=1e-12)


def test_gram_matches_direct_up_to_sign():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((12, 40))
    g = fit_wpca(x, 5, "gram")
    d = fit_wpca(x, 5, "direct")
    np.testing.assert_allclose(g.eigenvalues, d.eigenvalues, rtol=1e-9)
    for a, b in zip(g.projection, d.projection):
        s = np.sign(a @ b)
        np.testing.assert_allclose(a, s * b, atol=1e-9 * np.abs(b).max())


def test_auto_picks_gram_when_wide():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((8, 30))
    np.testing.assert_allclose(fit_wpca(x, 3).eigenvalues, fit_wpca(x, 3, "gram").eigenvalues)


def test_training_projections_are_white():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((30, 100))
    model = fit_wpca(x, 10)
    z = project(model, x)
    assert z.shape == (30, 10)
    np.testing.assert_allclose(np.cov(z, rowvar=False, ddof=1), np.eye(10), atol=1e-9)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-10)


def test_projection_rows_orthogonal_directions():
    rng = np.random.default_rng(4)
    model = fit_wpca(rng.standard_normal((20, 50)), 6)
    dirs = model.projection * np.sqrt(model.eigenvalues)[:, None]
    np.testing.assert_allclose(dirs @ dirs.T, np.eye(6), atol=1e-10)


def test_eigenvalues_descending():
    rng = np.random.default_rng(5)
    vals = fit_wpca(rng.standard_normal((25, 60)), 12).eigenvalues
    assert (np.diff(vals) <= 0).all()


def test_project_vector_and_batch():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((10, 20))
    model = fit_wpca(x, 4)
    np.testing.assert_allclose(project(model, x[3]), project(model, x)[3], atol=1e-12)
    with pytest.raises(InputError):
        project(model, np.zeros(19))


@pytest.mark.parametrize("q", [0, 10, 21])
def test_too_many_components(q):
    rng = np.random.default_rng(7)
    with pytest.raises(LearningError):
        fit_wpca(rng.standard_normal((10, 20)), q)


def test_rank_deficient_warns_and_reduces():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((20, 3)) @ rng.standard_normal((3, 30))
    with pytest.warns(RuntimeWarning):
        model = fit_wpca(x, 8)
    assert model.dim_out == 3


def test_zero_variance():
    with pytest.raises(LearningError):
        fit_wpca(np.ones((5, 4)), 2)


def test_bad_inputs():
    with pytest.raises(InputError):
        fit_wpca(np.zeros((1, 4)), 1)
    with pytest.raises(InputError):
        fit_wpca(np.random.default_rng(0).standard_normal((5, 4)), 2, "svd")


def test_full_rank_no_warning():
    rng = np.random.default_rng(9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit_wpca(rng.standard_normal((15, 40)), 14)
