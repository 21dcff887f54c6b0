"""Patch sampling and PCA / ICA filter-ensemble learning."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ConvergenceWarning, InputError, LearningError
from .gabor import FilterBank

EIGEN_FLOOR = 1e-10


@dataclass(frozen=True)
class PatchMatrix:
    """``k**2 x N`` matrix of vectorized (column-major), mean-removed patches."""

    data: np.ndarray
    patch_side: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != self.patch_side**2:
            raise InputError(f"patch data must be ({self.patch_side ** 2}, N), got {data.shape}")
        col_sums = np.abs(data.sum(axis=0))
        scale = max(1.0, float(np.abs(data).max(initial=0.0)))
        if np.any(col_sums > 1e-9 * self.patch_side**2 * scale):
            raise InputError("patch columns must be zero-mean")
        object.__setattr__(self, "data", data)

    @property
    def count(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PcaModel:
    w_pca: np.ndarray       # (i, k*k), orthonormal rows
    eigenvalues: np.ndarray  # (i,), nonincreasing, of I' I'^T / N
    patch_side: int

    @property
    def whitening(self) -> np.ndarray:
        return (self.eigenvalues ** -0.5)[:, None] * self.w_pca

    @property
    def n_filters(self) -> int:
        return self.w_pca.shape[0]


@dataclass(frozen=True)
class IcaModel:
    u: np.ndarray      # (i, i) orthogonal
    pca: PcaModel
    converged: bool = True
    n_iter: int = 0

    @property
    def w_ica(self) -> np.ndarray:
        return self.u @ self.pca.whitening


def vectorize(patch: np.ndarray) -> np.ndarray:
    return np.asarray(patch).ravel(order="F")


def sample_patches(images, k: int, n: int, seed: int) -> PatchMatrix:
    """Draw ``n`` patches uniformly over all (image, position) pairs, with replacement."""
    images = [np.asarray(img, dtype=np.float64) for img in images]
    if not images:
        raise InputError("need at least one training image")
    if n < 1:
        raise InputError(f"patch count must be >= 1, got {n}")
    positions = []
    for idx, img in enumerate(images):
        if img.ndim != 2 or img.shape[0] < k or img.shape[1] < k:
            raise InputError(f"image {idx} of shape {img.shape} is smaller than the {k}x{k} patch")
        positions.append((img.shape[0] - k + 1) * (img.shape[1] - k + 1))
    offsets = np.cumsum([0] + positions)
    rng = np.random.default_rng(seed)
    flat = rng.integers(0, offsets[-1], size=n)
    which = np.searchsorted(offsets, flat, side="right") - 1

    out = np.empty((k * k, n))
    for idx in np.unique(which):
        cols = np.nonzero(which == idx)[0]
        img = images[idx]
        ncol = img.shape[1] - k + 1
        local = flat[cols] - offsets[idx]
        rows, cs = np.divmod(local, ncol)
        windows = np.lib.stride_tricks.sliding_window_view(img, (k, k))
        # (len, k, k) -> column-major vectors
        patches = windows[rows, cs].transpose(0, 2, 1).reshape(len(cols), k * k)
        out[:, cols] = patches.T
    out -= out.mean(axis=0, keepdims=True)
    return PatchMatrix(out, k)


def learn_pca_filters(patches: PatchMatrix, i: int) -> PcaModel:
    d = patches.patch_side**2
    if not 1 <= i <= d:
        raise InputError(f"filter count must be in [1, {d}], got {i}")
    x = patches.data
    cov = (x @ x.T) / patches.count
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    top = vals[0]
    rank = int(np.sum(vals > EIGEN_FLOOR * top)) if top > 0 else 0
    if rank < i:
        raise LearningError(f"patch covariance has rank {rank}, cannot learn {i} filters", rank=rank)
    w = vecs[:, :i].T
    # fix the sign so the largest-magnitude entry of each filter is positive
    pivot = np.argmax(np.abs(w), axis=1)
    w = w * np.sign(w[np.arange(i), pivot])[:, None]
    return PcaModel(np.ascontiguousarray(w), vals[:i].copy(), patches.patch_side)


def whiten(patches: PatchMatrix, model: PcaModel) -> np.ndarray:
    if patches.patch_side != model.patch_side:
        raise InputError(f"patch side {patches.patch_side} does not match model side {model.patch_side}")
    return model.whitening @ patches.data


def _sym_orthogonalize(w: np.ndarray) -> np.ndarray:
    # (W W^T)^{-1/2} W
    vals, vecs = np.linalg.eigh(w @ w.T)
    return (vecs / np.sqrt(vals)) @ vecs.T @ w


def fast_ica(whitened: np.ndarray, seed: int = 0, max_iter: int = 200, tol: float = 1e-6,
             return_n_iter: bool = False):
    """Symmetric fixed-point ICA with the kurtosis contrast ``g(y) = y**3``.

    ``whitened`` is ``(i, N)`` with zero-mean, unit-variance rows. Returns the
    orthogonal unmixing matrix ``U``; a :class:`ConvergenceWarning` is emitted
    if ``max_iter`` sweeps pass without meeting ``tol``.
    """
    x = np.asarray(whitened, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InputError(f"whitened data must be (i, N), got {x.shape}")
    i, n = x.shape
    rng = np.random.default_rng(seed)
    w = _sym_orthogonalize(rng.standard_normal((i, i)))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = w @ x
        w_new = (y**3) @ x.T / n - 3.0 * np.mean(y**2, axis=1)[:, None] * w
        w_new = _sym_orthogonalize(w_new)
        change = np.max(np.abs(1.0 - np.abs(np.sum(w_new * w, axis=1))))
        w = w_new
        if change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"FastICA did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    if return_n_iter:
        return w, it, converged
    return w


def learn_ica_filters(patches: PatchMatrix, i: int, seed: int = 0,
                      max_iter: int = 200, tol: float = 1e-6) -> IcaModel:
    pca = learn_pca_filters(patches, i)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        u, n_iter, converged = fast_ica(whiten(patches, pca), seed, max_iter, tol, return_n_iter=True)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    return IcaModel(u, pca, converged, n_iter)


def bank_from_rows(rows: np.ndarray, k: int, kind: str = "pca", meta=None) -> FilterBank:
    """Reshape ``(i, k*k)`` filter rows into a real :class:`FilterBank`."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[1] != k * k:
        raise InputError(f"row length {rows.shape[1]} does not match k*k = {k * k}")
    if kind not in ("pca", "ica"):
        raise ContractError(f"learned banks are pca or ica, got {kind!r}")
    # inverse of the column-major vectorization, row by row
    re = np.ascontiguousarray(rows.reshape(-1, k, k).transpose(0, 2, 1))
    return FilterBank(re, np.zeros_like(re), kind, dict(meta or {}))
