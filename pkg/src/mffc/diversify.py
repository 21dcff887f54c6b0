"""Multi-fold filter convolution (M-FFC): offspring sets from cross-convolved banks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.signal import convolve2d

from .errors import ContractError, InputError
from .gabor import ComplexFilter, FilterBank

OFFSPRING_KINDS = ("gabor_gabor", "gabor_pca", "gabor_ica", "pca_pca", "ica_ica", "generic")


@dataclass(frozen=True)
class OffspringSet:
    """Diversified filters of side ``K``.

    Only the unique filters are stored; ``dedup`` maps each logical index
    (0-based, last fold varying fastest) to its row in ``re``/``im``. With no
    dedup map the logical and stored orders coincide.
    """

    re: np.ndarray
    im: np.ndarray
    fold_sizes: tuple[int, ...]
    kind: str = "generic"
    dedup: np.ndarray | None = None
    self_cross: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        re = np.asarray(self.re, dtype=np.float64)
        im = np.asarray(self.im, dtype=np.float64)
        if re.ndim != 3 or re.shape[1] != re.shape[2] or re.shape != im.shape:
            raise InputError(f"offspring stacks must be (n, K, K), got {re.shape} / {im.shape}")
        if self.kind not in OFFSPRING_KINDS:
            raise InputError(f"unknown offspring kind {self.kind!r}")
        sizes = tuple(int(s) for s in self.fold_sizes)
        total = int(np.prod(sizes))
        dedup = self.dedup
        if dedup is None:
            if re.shape[0] != total:
                raise InputError(f"{re.shape[0]} filters stored but fold sizes {sizes} imply {total}")
        else:
            dedup = np.asarray(dedup, dtype=np.int64)
            if dedup.shape != (total,) or dedup.min() < 0 or dedup.max() >= re.shape[0]:
                raise InputError("dedup map must cover every logical index with a stored filter")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        object.__setattr__(self, "fold_sizes", sizes)
        object.__setattr__(self, "dedup", dedup)

    def __len__(self) -> int:
        return int(np.prod(self.fold_sizes))

    @property
    def n_unique(self) -> int:
        return self.re.shape[0]

    @property
    def offspring_side(self) -> int:
        return self.re.shape[1]

    @property
    def n_folds(self) -> int:
        return len(self.fold_sizes)

    @property
    def index_map(self) -> np.ndarray:
        return self.dedup if self.dedup is not None else np.arange(len(self))

    def __getitem__(self, ell: int) -> ComplexFilter:
        j = self.index_map[ell]
        return ComplexFilter(self.re[j], self.im[j])

    @property
    def filters(self) -> list[ComplexFilter]:
        return [self[ell] for ell in range(len(self))]

    def part(self, name: str) -> np.ndarray:
        """Unique filters of one part, shape ``(n_unique, K, K)``."""
        if name == "re":
            return self.re
        if name == "im":
            return self.im
        raise InputError(f"unknown filter part {name!r}")


def conv2_full(a: ComplexFilter, b: ComplexFilter) -> ComplexFilter:
    """Full 2-D linear convolution of two complex filters."""
    rr = convolve2d(a.re, b.re, mode="full")
    ii = convolve2d(a.im, b.im, mode="full")
    ri = convolve2d(a.re, b.im, mode="full")
    ir = convolve2d(a.im, b.re, mode="full")
    return ComplexFilter(rr - ii, ri + ir)


def _fold_kind(folds: list[FilterBank]) -> str:
    kinds = [bank.kind for bank in folds]
    gabor = {"gabor_std", "gabor_cond"}
    if all(k in gabor for k in kinds):
        return "gabor_gabor"
    if len(folds) == 2 and kinds[0] in gabor and kinds[1] in ("pca", "ica"):
        return f"gabor_{kinds[1]}"
    if all(k == "pca" for k in kinds):
        return "pca_pca"
    if all(k == "ica" for k in kinds):
        return "ica_ica"
    return "generic"


def _same_bank(a: FilterBank, b: FilterBank) -> bool:
    return a.re.shape == b.re.shape and np.array_equal(a.re, b.re) and np.array_equal(a.im, b.im)


def mffc(folds, kind: str | None = None) -> OffspringSet:
    """Convolve one filter from every fold, for every fold combination."""
    folds = list(folds)
    if not folds:
        raise InputError("M-FFC needs at least one fold")
    supports = {bank.support for bank in folds}
    if len(supports) != 1:
        raise InputError(f"all folds must share one support, got {sorted(supports)}")
    sizes = tuple(len(bank) for bank in folds)
    offspring = [
        reduce(conv2_full, (folds[m][i] for m, i in enumerate(combo)))
        for combo in itertools.product(*(range(s) for s in sizes))
    ]
    self_cross = all(_same_bank(folds[0], bank) for bank in folds[1:])
    return OffspringSet(
        np.stack([o.re for o in offspring]),
        np.stack([o.im for o in offspring]),
        sizes,
        kind or _fold_kind(folds),
        None,
        self_cross,
    )


def dedup_commutative(oset: OffspringSet) -> OffspringSet:
    """Keep one representative per multiset of fold indices.

    Valid only for self-cross sets, where convolution commutativity makes
    permuted index tuples produce identical filters.
    """
    if not oset.self_cross:
        raise ContractError("commutative dedup requires every fold to be the same bank")
    if oset.dedup is not None:
        return oset
    combos = list(itertools.product(*(range(s) for s in oset.fold_sizes)))
    keep = [ell for ell, c in enumerate(combos) if all(a <= b for a, b in zip(c, c[1:]))]
    slot = {combos[ell]: j for j, ell in enumerate(keep)}
    dedup = np.array([slot[tuple(sorted(c))] for c in combos], dtype=np.int64)
    return OffspringSet(oset.re[keep], oset.im[keep], oset.fold_sizes, oset.kind, dedup, True, dict(oset.meta))


def central_crop(f: ComplexFilter, k: int) -> ComplexFilter:
    side = f.support
    if k % 2 == 0 or k < 1 or k > side or (side - k) % 2:
        raise InputError(f"cannot centre-crop a {side}x{side} filter to {k}x{k}")
    o = (side - k) // 2
    return ComplexFilter(f.re[o:o + k, o:o + k], f.im[o:o + k, o:o + k])


def crop_set(oset: OffspringSet, k: int) -> OffspringSet:
    side = oset.offspring_side
    central_crop(ComplexFilter.real(np.zeros((side, side))), k)  # validates k
    o = (side - k) // 2
    sl = np.s_[:, o:o + k, o:o + k]
    return OffspringSet(oset.re[sl], oset.im[sl], oset.fold_sizes, oset.kind, oset.dedup,
                        oset.self_cross, dict(oset.meta, cropped=k))


def _constituent(bank: FilterBank, part: str) -> FilterBank:
    data = bank.part(part)
    return FilterBank(data, np.zeros_like(data), bank.kind, dict(bank.meta))


def _to_imag(oset: OffspringSet) -> OffspringSet:
    return OffspringSet(np.zeros_like(oset.re), oset.re, oset.fold_sizes, oset.kind, oset.dedup,
                        oset.self_cross, dict(oset.meta))


def make_offspring(kind: str, gabor: FilterBank, learned: FilterBank | None = None,
                   n_folds: int = 2, crop: int | None = None) -> tuple[OffspringSet, OffspringSet]:
    """Build the real-part and imaginary-part offspring sets.

    ``kind`` is ``gabor`` (self-cross of ``n_folds`` Gabor folds, deduplicated),
    ``gabor_pca`` or ``gabor_ica`` (fold 1 Gabor, fold 2 the learned real
    bank). Each Gabor constituent is diversified on its own: the real-part set
    only ever sees Gabor real parts and is stored in the ``re`` plane, the
    imaginary-part set only the imaginary parts, stored in the ``im`` plane.
    """
    kind = kind.replace("-", "_")
    if gabor.kind not in ("gabor_cond", "gabor_std"):
        raise ContractError(f"fold 1 must be a Gabor bank, got {gabor.kind!r}")
    sets = []
    for part in ("re", "im"):
        g = _constituent(gabor, part)
        if kind in ("gabor", "gabor_gabor"):
            if n_folds < 1:
                raise InputError("need at least one fold")
            oset = mffc([g] * n_folds, kind="gabor_gabor")
            if n_folds > 1:
                oset = dedup_commutative(oset)
        elif kind in ("gabor_pca", "gabor_ica"):
            if learned is None:
                raise ContractError(f"{kind} offspring need a learned fold-2 bank")
            if not learned.is_real:
                raise ContractError("learned fold-2 filters must be real")
            oset = mffc([g, learned], kind=kind)
        else:
            raise InputError(f"unknown offspring kind {kind!r}")
        if crop:
            oset = crop_set(oset, crop)
        sets.append(oset if part == "re" else _to_imag(oset))
    return sets[0], sets[1]
