"""Convolutional stage, binarized encoding and block-wise histogramming."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .diversify import OffspringSet
from .errors import ContractError, InputError

BACKENDS = ("direct", "fft", "auto")
# h*w*K*K above which `auto` switches to the FFT path (see `mffc bench-conv`)
DEFAULT_FFT_CROSSOVER = 16 * 16 * 7 * 7


@dataclass(frozen=True)
class ResponseStack:
    responses: np.ndarray  # (L, h, w)

    @property
    def image_size(self) -> tuple[int, int]:
        return self.responses.shape[1], self.responses.shape[2]

    def __len__(self) -> int:
        return self.responses.shape[0]


@dataclass(frozen=True)
class FeatureImages:
    images: np.ndarray  # (T, h, w) integers in [0, 2**bits - 1]
    bits: int

    @property
    def n_images(self) -> int:
        return self.images.shape[0]


@dataclass(frozen=True)
class BlockSpec:
    rows: int
    cols: int
    overlap_ratio: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InputError(f"block grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.overlap_ratio not in (0.0, 0.5):
            raise InputError(f"overlap ratio must be 0 or 0.5, got {self.overlap_ratio}")

    @property
    def n_blocks(self) -> int:
        return self.rows * self.cols

    @staticmethod
    def _spans(n: int, parts: int, overlap: bool) -> list[tuple[int, int]]:
        base = n // parts
        spans = []
        for i in range(parts):
            start = i * base
            end = n if i == parts - 1 else start + base
            if overlap:
                end = max(end, min(start + 2 * base, n))
            spans.append((start, end))
        return spans

    def blocks(self, h: int, w: int) -> list[tuple[int, int, int, int]]:
        """``(r0, r1, c0, c1)`` per block, row-major over the grid."""
        if self.rows > h or self.cols > w:
            raise InputError(f"{self.rows}x{self.cols} grid does not fit a {h}x{w} image")
        overlap = self.overlap_ratio > 0
        rs = self._spans(h, self.rows, overlap)
        cs = self._spans(w, self.cols, overlap)
        return [(r0, r1, c0, c1) for r0, r1 in rs for c0, c1 in cs]


@dataclass(frozen=True)
class RawHistogram:
    """Concatenated block histograms, laid out as (part, t, block, bin)."""

    values: np.ndarray  # flat, float64 counts
    n_feature_images: int
    n_blocks: int
    bits: int

    @property
    def shape4(self) -> tuple[int, int, int, int]:
        return 2, self.n_feature_images, self.n_blocks, 2**self.bits

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.shape4)

    def __len__(self) -> int:
        return self.values.size


def _conv_direct(image: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    n, K, _ = kernels.shape
    h, w = image.shape
    c = (K - 1) // 2
    padded = np.pad(image, c)
    out = np.zeros((n, h, w))
    for a in range(K):
        for b in range(K):
            tap = kernels[:, a, b]
            if not np.any(tap):
                continue
            window = padded[K - 1 - a:K - 1 - a + h, K - 1 - b:K - 1 - b + w]
            out += tap[:, None, None] * window
    return out


def _conv_fft(image: np.ndarray, kernels: np.ndarray, workers: int | None = None) -> np.ndarray:
    _, K, _ = kernels.shape
    h, w = image.shape
    c = (K - 1) // 2
    shape = (sfft.next_fast_len(h + K - 1, real=True), sfft.next_fast_len(w + K - 1, real=True))
    spec = sfft.rfft2(kernels, s=shape, workers=workers) * sfft.rfft2(image, s=shape, workers=workers)
    full = sfft.irfft2(spec, s=shape, workers=workers)
    return full[:, c:c + h, c:c + w]


def conv_same(image: np.ndarray, kernels: np.ndarray, backend: str = "direct",
              crossover: int = DEFAULT_FFT_CROSSOVER, workers: int | None = None) -> np.ndarray:
    """Convolve ``image`` (zero-padded by ``(K-1)/2``) with each of ``(n, K, K)`` kernels."""
    image = np.asarray(image, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise InputError(f"image must be a nonempty 2-D array, got shape {image.shape}")
    if kernels.ndim != 3 or kernels.shape[1] != kernels.shape[2] or kernels.shape[1] % 2 == 0:
        raise InputError(f"kernels must be (n, K, K) with odd K, got {kernels.shape}")
    if backend not in BACKENDS:
        raise InputError(f"unknown convolution backend {backend!r}")
    if backend == "auto":
        backend = "fft" if image.size * kernels.shape[1] ** 2 > crossover else "direct"
    if backend == "fft":
        return _conv_fft(image, kernels, workers)
    return _conv_direct(image, kernels)


def convolve_stack(image: np.ndarray, oset: OffspringSet, part: str = "re", backend: str = "direct",
                   crossover: int = DEFAULT_FFT_CROSSOVER, workers: int | None = None) -> ResponseStack:
    """Responses of every logical offspring; unique filters are convolved once."""
    unique = conv_same(image, oset.part(part), backend, crossover, workers)
    if oset.dedup is None:
        return ResponseStack(unique)
    return ResponseStack(unique[oset.dedup])


def _code_dtype(bits: int):
    if bits <= 8:
        return np.uint8
    if bits <= 16:
        return np.uint16
    return np.uint32 if bits <= 32 else np.uint64


def binarize_encode(stack: ResponseStack, bits: int) -> FeatureImages:
    """Pack runs of ``bits`` consecutive sign maps into integer feature images.

    Within a run the first response is the least-significant bit; a response
    counts as set only when strictly positive.
    """
    n = len(stack)
    if bits < 1 or n % bits:
        raise ContractError(f"{n} responses cannot be grouped into runs of {bits}")
    h, w = stack.image_size
    signs = (stack.responses > 0).reshape(n // bits, bits, h, w)
    dtype = _code_dtype(bits)
    codes = np.zeros((n // bits, h, w), dtype=dtype)
    for beta in range(bits):
        codes |= signs[:, beta].astype(dtype) << dtype(beta)
    return FeatureImages(codes, bits)


def block_histograms(feat: FeatureImages, spec: BlockSpec) -> np.ndarray:
    """Counts per (t, block, bin) as an ``(T, B, 2**bits)`` int64 array."""
    T, h, w = feat.images.shape
    nbins = 2**feat.bits
    blocks = spec.blocks(h, w)
    out = np.zeros((T, len(blocks), nbins), dtype=np.int64)
    offsets = (np.arange(T, dtype=np.int64) * nbins)[:, None, None]
    for b, (r0, r1, c0, c1) in enumerate(blocks):
        codes = feat.images[:, r0:r1, c0:c1].astype(np.int64) + offsets
        out[:, b] = np.bincount(codes.ravel(), minlength=T * nbins).reshape(T, nbins)
    return out


def assemble(image: np.ndarray, offspring_re: OffspringSet, offspring_im: OffspringSet,
             spec: BlockSpec, backend: str = "direct", crossover: int = DEFAULT_FFT_CROSSOVER,
             workers: int | None = None) -> RawHistogram:
    if offspring_re.fold_sizes != offspring_im.fold_sizes:
        raise ContractError("real and imaginary offspring sets must share a fold shape")
    bits = offspring_re.fold_sizes[-1]
    parts = []
    for oset, part in ((offspring_re, "re"), (offspring_im, "im")):
        stack = convolve_stack(image, oset, part, backend, crossover, workers)
        parts.append(block_histograms(binarize_encode(stack, bits), spec))
    hist = np.stack(parts)
    return RawHistogram(hist.ravel().astype(np.float64), hist.shape[1], hist.shape[2], bits)


def histogram_length(fold_sizes, n_blocks: int) -> int:
    T = int(np.prod(fold_sizes[:-1])) if len(fold_sizes) > 1 else 1
    return 2 ** fold_sizes[-1] * n_blocks * T * 2
