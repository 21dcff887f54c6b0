"""End-to-end orchestration: filter banks, offspring sets and descriptor extraction."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .descriptor import DEFAULT_FFT_CROSSOVER, BlockSpec, assemble
from .diversify import OffspringSet, make_offspring
from .errors import ConvergenceWarning
from .gabor import FilterBank, condensed_ensemble
from .learning import bank_from_rows, learn_ica_filters, learn_pca_filters, sample_patches
from .pooling import PoolSpec, normalize, pool

log = logging.getLogger(__name__)


def gabor_bank(cfg: PipelineConfig) -> FilterBank:
    return condensed_ensemble(cfg.gabor_params())


def learn_bank(cfg: PipelineConfig, images) -> FilterBank | None:
    """PCA or ICA fold-2 bank for the learned descriptor kinds; ``None`` for plain Gabor."""
    if cfg.kind == "gabor":
        return None
    patches = sample_patches(images, cfg.support, cfg.n_patches, cfg.seed)
    meta = {"seed": cfg.seed, "n_patches": cfg.n_patches, "support": cfg.support}
    if cfg.kind == "gabor_pca":
        model = learn_pca_filters(patches, cfg.n_filters)
        return bank_from_rows(model.w_pca, cfg.support, "pca", meta)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        model = learn_ica_filters(patches, cfg.n_filters, cfg.seed, cfg.ica_max_iter, cfg.ica_tol)
    if caught:
        log.warning("FastICA stopped after %d iterations without converging", model.n_iter)
    meta.update(ica_iterations=model.n_iter, ica_converged=int(model.converged))
    return bank_from_rows(model.w_ica, cfg.support, "ica", meta)


def offspring_sets(cfg: PipelineConfig, gabor: FilterBank, learned: FilterBank | None = None):
    return make_offspring(cfg.kind, gabor, learned, n_folds=cfg.n_folds, crop=cfg.crop or None)


@dataclass
class Extractor:
    """Image -> pooled, square-rooted, L2-normalized histogram descriptor."""

    offspring_re: OffspringSet
    offspring_im: OffspringSet
    blocks: BlockSpec
    pooling: PoolSpec
    backend: str = "auto"
    crossover: int = DEFAULT_FFT_CROSSOVER

    @classmethod
    def from_config(cls, cfg: PipelineConfig, offspring_re, offspring_im) -> "Extractor":
        return cls(offspring_re, offspring_im, cfg.block_spec(), cfg.pool_spec(), cfg.backend, cfg.fft_crossover)

    def raw(self, image):
        return assemble(image, self.offspring_re, self.offspring_im, self.blocks, self.backend,
                        self.crossover, workers=1)

    def __call__(self, image) -> np.ndarray:
        return normalize(pool(self.raw(image), self.pooling))

    def batch(self, images, threads: int = 1) -> np.ndarray:
        images = list(images)
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool_:
                rows = list(pool_.map(self, images))
        else:
            rows = [self(img) for img in images]
        return np.stack(rows)


def build_extractor(cfg: PipelineConfig, training_images=()) -> Extractor:
    learned = learn_bank(cfg, training_images)
    re, im = offspring_sets(cfg, gabor_bank(cfg), learned)
    return Extractor.from_config(cfg, re, im)
