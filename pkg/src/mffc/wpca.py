"""Whitening PCA fitted through the n x n Gram matrix."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError, LearningError

EIGEN_FLOOR = 1e-10


@dataclass(frozen=True)
class WpcaModel:
    mean: np.ndarray         # (d,)
    projection: np.ndarray   # (q, d): eigenvector / sqrt(eigenvalue) per row
    eigenvalues: np.ndarray  # (q,), of the sample covariance (ddof=1)

    @property
    def dim_in(self) -> int:
        return self.mean.size

    @property
    def dim_out(self) -> int:
        return self.projection.shape[0]


def _top_eigen(sym: np.ndarray):
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def fit_wpca(train, q: int, method: str = "auto") -> WpcaModel:
    """Fit a ``q``-dimensional whitening projection to ``(n, d)`` training rows.

    ``method`` is ``gram`` (eigendecompose ``Xc Xc^T``, the default whenever
    ``d > n``), ``direct`` (eigendecompose the ``d x d`` covariance) or ``auto``.
    """
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InputError(f"need an (n, d) training matrix with n >= 2, got {x.shape}")
    n, d = x.shape
    limit = min(d, n - 1)
    if not 1 <= q <= limit:
        raise LearningError(f"cannot extract {q} components: at most {limit} from {n}x{d} data", rank=limit)
    if method == "auto":
        method = "gram" if d > n else "direct"
    mean = x.mean(axis=0)
    xc = x - mean

    if method == "gram":
        vals, u = _top_eigen(xc @ xc.T)
        vals = vals / (n - 1)
    elif method == "direct":
        vals, vecs = _top_eigen(xc.T @ xc / (n - 1))
    else:
        raise InputError(f"unknown WPCA method {method!r}")

    top = vals[0]
    rank = int(np.sum(vals > EIGEN_FLOOR * top)) if top > 0 else 0
    if rank == 0:
        raise LearningError("training descriptors have zero variance", rank=0)
    if q > rank:
        warnings.warn(f"WPCA rank is {rank}; reducing output dimension from {q}", RuntimeWarning, stacklevel=2)
        q = rank
    vals = vals[:q]
    if method == "gram":
        # covariance eigenvectors recovered from the Gram eigenvectors
        vecs = xc.T @ u[:, :q] / np.sqrt(vals * (n - 1))
    else:
        vecs = vecs[:, :q]
    projection = (vecs / np.sqrt(vals)).T
    return WpcaModel(mean, np.ascontiguousarray(projection), vals.copy())


def project(model: WpcaModel, v) -> np.ndarray:
    """Whitened coordinates of a descriptor ``(d,)`` or a batch ``(n, d)``."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.dim_in:
        raise InputError(f"descriptor length {v.shape[-1]} does not match model input {model.dim_in}")
    return (v - model.mean) @ model.projection.T
