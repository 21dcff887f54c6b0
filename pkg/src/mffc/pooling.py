"""Strided histogram pooling and sqrt + L2 normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError

POOL_MODES = ("avg", "max", "none")


@dataclass(frozen=True)
class PoolSpec:
    window: int = 2
    stride: int = 2
    mode: str = "avg"

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ParameterError(f"pool window and stride must be >= 1, got {self.window}/{self.stride}")
        if self.mode not in POOL_MODES:
            raise ParameterError(f"unknown pool mode {self.mode!r}")

    def output_length(self, d: int) -> int:
        if self.mode == "none":
            return d
        if d < self.window or (d - self.window) % self.stride:
            raise InputError(
                f"length {d} is not tiled by window {self.window} at stride {self.stride}")
        return (d - self.window) // self.stride + 1


def pool(h, spec: PoolSpec = PoolSpec()) -> np.ndarray:
    """Pool a flat histogram (or an ``(n, d)`` batch of them) along its last axis."""
    h = np.asarray(getattr(h, "values", h), dtype=np.float64)
    d = h.shape[-1]
    n_out = spec.output_length(d)
    if spec.mode == "none":
        return h.copy()
    win = np.lib.stride_tricks.sliding_window_view(h, spec.window, axis=-1)[..., ::spec.stride, :]
    win = win[..., :n_out, :]
    if spec.mode == "avg":
        return win.mean(axis=-1)
    return win.max(axis=-1)


def normalize(v, return_status: bool = False):
    """Elementwise square root followed by L2 normalization.

    A zero vector maps to zero; pass ``return_status=True`` to get
    ``(vector, is_zero)``.
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise InputError("normalize expects nonnegative histogram values")
    r = np.sqrt(v)
    norm = np.linalg.norm(r)
    is_zero = norm == 0
    out = r if is_zero else r / norm
    if return_status:
        return out, bool(is_zero)
    return out
