"""Complex Gabor wavelets and the standard / condensed filter ensembles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError

FILTER_KINDS = ("gabor_std", "gabor_cond", "pca", "ica")


@dataclass(frozen=True)
class GaborParams:
    sigma: float = 2 * math.pi
    k_max: float = math.pi / 2
    f: float = math.sqrt(2)
    u_max: int = 8
    v_max: int = 5
    support: int = 7

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.k_max > 0:
            raise ParameterError(f"k_max must be positive, got {self.k_max}")
        if not self.f > 1:
            raise ParameterError(f"frequency spacing f must exceed 1, got {self.f}")
        if self.u_max < 1 or self.v_max < 1:
            raise ParameterError("u_max and v_max must be >= 1")
        if self.support < 3 or self.support % 2 == 0:
            raise ParameterError(f"support must be odd and >= 3, got {self.support}")

    def theta(self, u: int) -> float:
        # pi/8 spacing at the default u_max = 8
        return u * math.pi / self.u_max

    def k_v(self, v: int) -> float:
        return self.k_max / self.f**v


@dataclass(frozen=True)
class ComplexFilter:
    """A square discrete filter held as separate real and imaginary planes."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re, dtype=np.float64)
        im = np.asarray(self.im, dtype=np.float64)
        if re.ndim != 2 or re.shape[0] != re.shape[1] or re.shape != im.shape:
            raise InputError(f"filter parts must be square and equal-sized, got {re.shape} / {im.shape}")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def real(cls, data) -> "ComplexFilter":
        data = np.asarray(data, dtype=np.float64)
        return cls(data, np.zeros_like(data))

    @property
    def support(self) -> int:
        return self.re.shape[0]

    def part(self, name: str) -> np.ndarray:
        if name == "re":
            return self.re
        if name == "im":
            return self.im
        raise InputError(f"unknown filter part {name!r}")

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im


@dataclass(frozen=True)
class FilterBank:
    """An ordered bank of equal-support filters.

    Stored as two ``(n, k, k)`` stacks; indexing yields :class:`ComplexFilter`.
    """

    re: np.ndarray
    im: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        re = np.asarray(self.re, dtype=np.float64)
        im = np.asarray(self.im, dtype=np.float64)
        if re.ndim != 3 or re.shape[1] != re.shape[2] or re.shape != im.shape:
            raise InputError(f"bank stacks must be (n, k, k) and equal, got {re.shape} / {im.shape}")
        if self.kind not in FILTER_KINDS:
            raise InputError(f"unknown bank kind {self.kind!r}")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_filters(cls, filters, kind: str, meta=None) -> "FilterBank":
        filters = list(filters)
        if not filters:
            raise InputError("a filter bank needs at least one filter")
        sides = {flt.support for flt in filters}
        if len(sides) != 1:
            raise InputError(f"filters in one bank must share a support, got {sorted(sides)}")
        return cls(
            np.stack([flt.re for flt in filters]),
            np.stack([flt.im for flt in filters]),
            kind,
            dict(meta or {}),
        )

    def __len__(self) -> int:
        return self.re.shape[0]

    def __getitem__(self, i: int) -> ComplexFilter:
        return ComplexFilter(self.re[i], self.im[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def filters(self) -> list[ComplexFilter]:
        return list(self)

    @property
    def support(self) -> int:
        return self.re.shape[1]

    @property
    def is_real(self) -> bool:
        return not np.any(self.im)

    def part(self, name: str) -> np.ndarray:
        if name == "re":
            return self.re
        if name == "im":
            return self.im
        raise InputError(f"unknown filter part {name!r}")


def _grid(support: int) -> tuple[np.ndarray, np.ndarray]:
    # x runs along columns, y along rows; centre sample at (0, 0)
    half = (support - 1) // 2
    r = np.arange(-half, half + 1, dtype=np.float64)
    return np.meshgrid(r, r, indexing="xy")


def gabor_filter(u: int, v: int, p: GaborParams | None = None) -> ComplexFilter:
    """Sample the complex Gabor wavelet of orientation ``u`` and scale ``v``.

    The wavelet is evaluated at integer offsets around the filter centre and
    includes the DC-compensation term ``exp(-sigma**2 / 2)``.
    """
    p = p or GaborParams()
    if not 0 <= u < p.u_max:
        raise ParameterError(f"orientation index u={u} outside [0, {p.u_max})")
    if not 0 <= v < p.v_max:
        raise ParameterError(f"scale index v={v} outside [0, {p.v_max})")
    x, y = _grid(p.support)
    kv = p.k_v(v)
    theta = p.theta(u)
    kx, ky = kv * math.cos(theta), kv * math.sin(theta)
    s2 = p.sigma**2
    envelope = (kv**2 / s2) * np.exp(-(kv**2) * (x**2 + y**2) / (2 * s2))
    phase = kx * x + ky * y
    dc = math.exp(-s2 / 2)
    return ComplexFilter(envelope * (np.cos(phase) - dc), envelope * np.sin(phase))


def _params_meta(p: GaborParams) -> dict:
    return {
        "sigma": repr(p.sigma),
        "k_max": repr(p.k_max),
        "f": repr(p.f),
        "u_max": p.u_max,
        "v_max": p.v_max,
        "support": p.support,
    }


def standard_ensemble(p: GaborParams | None = None) -> FilterBank:
    """All ``u_max * v_max`` wavelets, scale-major (v outer, u inner)."""
    p = p or GaborParams()
    filters = [gabor_filter(u, v, p) for v in range(p.v_max) for u in range(p.u_max)]
    return FilterBank.from_filters(filters, "gabor_std", _params_meta(p))


def condensed_ensemble(p: GaborParams | None = None) -> FilterBank:
    """One filter per orientation: the plain average over all scales."""
    p = p or GaborParams()
    std = standard_ensemble(p)
    re = std.re.reshape(p.v_max, p.u_max, p.support, p.support).mean(axis=0)
    im = std.im.reshape(p.v_max, p.u_max, p.support, p.support).mean(axis=0)
    return FilterBank(re, im, "gabor_cond", _params_meta(p))


def power_spectrum(bank: FilterBank, size: int = 64) -> np.ndarray:
    """Per-filter ``|FFT|**2`` of the complex filters, zero-padded to ``size``."""
    spec = np.fft.fft2(bank.re + 1j * bank.im, s=(size, size))
    return np.fft.fftshift(np.abs(spec) ** 2, axes=(-2, -1))
