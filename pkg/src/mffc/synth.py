"""Deterministic synthetic face-like corpus for desk-scale evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .evaluation import VerifyPair
from .io import ManifestEntry, save_image, write_manifest, write_pairs

MAX_SHIFT = 2


def base_pattern(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Oriented sinusoid gratings plus a layout of signed Gaussian blobs."""
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros((h, w))
    for _ in range(3):
        theta = rng.uniform(0, np.pi)
        freq = rng.uniform(0.05, 0.25)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.5, 1.0)
        img += amp * np.cos(2 * np.pi * freq * (x * np.cos(theta) + y * np.sin(theta)) + phase)
    for _ in range(6):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        s = rng.uniform(0.05, 0.15) * min(h, w)
        img += rng.choice([-1.5, 1.5]) * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s))
    img = (img - img.mean()) / img.std()
    return 128.0 + 40.0 * img


def class_sample(base: np.ndarray, rng: np.random.Generator, size: tuple[int, int],
                 noise: float) -> np.ndarray:
    h, w = size
    dy, dx = rng.integers(-MAX_SHIFT, MAX_SHIFT + 1, size=2)
    crop = base[MAX_SHIFT + dy:MAX_SHIFT + dy + h, MAX_SHIFT + dx:MAX_SHIFT + dx + w]
    if noise > 0:
        crop = crop + rng.normal(0.0, noise, size=crop.shape)
    return np.clip(np.rint(crop), 0, 255)


def synth_images(classes: int, per_class: int, size=(64, 64), seed: int = 0, noise: float = 20.0):
    """Yield ``(class, index, image)``; every image is 8-bit valued in [0, 255]."""
    if classes < 2:
        raise InputError("a synthetic corpus needs at least two classes")
    if per_class < 1:
        raise InputError("need at least one image per class")
    h, w = size
    for c in range(classes):
        base = base_pattern(np.random.default_rng([seed, c]), h + 2 * MAX_SHIFT, w + 2 * MAX_SHIFT)
        for s in range(per_class):
            yield c, s, class_sample(base, np.random.default_rng([seed, c, s, 1]), (h, w), noise)


@dataclass
class SynthCorpus:
    entries: list[ManifestEntry]
    pairs: list[VerifyPair]
    manifest_path: Path
    pairs_path: Path | None


def _verification_pairs(entries, classes: int, per_class: int, kfold: int, seed: int,
                        pairs_per_fold: int) -> list[VerifyPair]:
    rng = np.random.default_rng([seed, 99])
    by_class = {}
    for e in entries:
        by_class.setdefault(e.subject_id, []).append(e.path)
    fold_of = {f"s{c:03d}": c % kfold + 1 for c in range(classes)}
    pairs = []
    for f in range(1, kfold + 1):
        ids = [sid for sid, g in fold_of.items() if g == f]
        n_half = pairs_per_fold // 2
        same, diff = set(), set()
        while len(same) < n_half:
            sid = ids[rng.integers(len(ids))]
            i, j = sorted(rng.choice(per_class, size=2, replace=False))
            same.add((by_class[sid][i], by_class[sid][j]))
        while len(diff) < n_half:
            s1, s2 = rng.choice(len(ids), size=2, replace=False)
            a = by_class[ids[s1]][rng.integers(per_class)]
            b = by_class[ids[s2]][rng.integers(per_class)]
            diff.add((a, b))
        pairs += [VerifyPair(f, a, b, True) for a, b in sorted(same)]
        pairs += [VerifyPair(f, a, b, False) for a, b in sorted(diff)]
    return pairs


def synth_corpus(out_dir, classes: int = 20, per_class: int = 10, size=(64, 64), seed: int = 0,
                 noise: float = 20.0, task: str = "identification", gallery_per_class: int = 1,
                 kfold: int = 10, pairs_per_fold: int = 20) -> SynthCorpus:
    """Write images, ``manifest.csv`` and (for verification) ``pairs.csv`` under ``out_dir``.

    Identification corpora put the first ``gallery_per_class`` images of each
    class in the gallery and the rest in the probe split. Verification corpora
    assign whole classes to folds round-robin and draw balanced same/not-same
    pairs inside each fold.
    """
    out = Path(out_dir)
    if task not in ("identification", "verification"):
        raise InputError(f"unknown corpus task {task!r}")
    if task == "verification":
        if classes < 2 * kfold:
            raise InputError(f"{kfold}-fold verification needs at least {2 * kfold} classes")
        if per_class < 2:
            raise InputError("verification pairs need at least two images per class")
    elif not 1 <= gallery_per_class < per_class:
        raise InputError("gallery_per_class must leave at least one probe per class")

    entries = []
    for c, s, img in synth_images(classes, per_class, size, seed, noise):
        rel = f"images/s{c:03d}_{s:03d}.pgm"
        save_image(out / rel, img)
        if task == "identification":
            split = "gallery" if s < gallery_per_class else "probe"
        else:
            split = f"fold_{c % kfold + 1}"
        entries.append(ManifestEntry(rel, f"s{c:03d}", split))
    manifest_path = out / "manifest.csv"
    write_manifest(manifest_path, entries)
    pairs, pairs_path = [], None
    if task == "verification":
        pairs = _verification_pairs(entries, classes, per_class, kfold, seed, pairs_per_fold)
        pairs_path = out / "pairs.csv"
        write_pairs(pairs_path, pairs)
    return SynthCorpus(entries, pairs, manifest_path, pairs_path)
