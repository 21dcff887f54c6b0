"""Cosine scoring, rank-1 identification and k-fold verification."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import InputError
from .wpca import fit_wpca, project


@dataclass(frozen=True)
class VerifyPair:
    fold: int
    a: str
    b: str
    same: bool


@dataclass
class FoldResult:
    fold: int
    auc: float
    acc: float
    threshold: float
    n_pairs: int


@dataclass
class EvalReport:
    task: str
    rank1: float | None = None
    auc: float | None = None
    acc_mean: float | None = None
    acc_sd: float | None = None
    per_fold: list[FoldResult] = field(default_factory=list)
    config_hash: str = ""
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"task={self.task}"]
        for key in ("rank1", "auc", "acc_mean", "acc_sd"):
            val = getattr(self, key)
            if val is not None:
                lines.append(f"{key}={val:.4f}")
        if self.per_fold:
            lines.append(f"n_folds={len(self.per_fold)}")
        for key in sorted(self.extra):
            lines.append(f"{key}={self.extra[key]}")
        lines.append(f"config_hash={self.config_hash}")
        return "\n".join(lines) + "\n"

    def fold_rows(self) -> list[dict]:
        return [
            {"fold": f.fold, "auc": f"{f.auc:.4f}", "acc": f"{f.acc:.4f}", "n_pairs": f.n_pairs}
            for f in self.per_fold
        ]


def cosine(a, b, return_status: bool = False):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"cannot compare vectors of shape {a.shape} and {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    degenerate = na == 0 or nb == 0
    score = 0.0 if degenerate else float(np.clip(a @ b / (na * nb), -1.0, 1.0))
    return (score, degenerate) if return_status else score


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def cosine_matrix(a, b) -> np.ndarray:
    """Pairwise cosine similarity between rows of ``a`` and rows of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise InputError(f"descriptor lengths differ: {a.shape[1]} vs {b.shape[1]}")
    return np.clip(_unit_rows(a) @ _unit_rows(b).T, -1.0, 1.0)


def nearest_gallery(gallery, probes) -> np.ndarray:
    # np.argmax breaks ties toward the lowest gallery index
    return np.argmax(cosine_matrix(probes, gallery), axis=1)


def rank1_identify(gallery, gallery_labels: Sequence, probes, probe_labels: Sequence) -> float:
    gallery = np.atleast_2d(gallery)
    probes = np.atleast_2d(probes)
    if len(gallery_labels) == 0 or len(probe_labels) == 0 or gallery.size == 0 or probes.size == 0:
        raise InputError("gallery and probe sets must be nonempty")
    if len(gallery_labels) != gallery.shape[0] or len(probe_labels) != probes.shape[0]:
        raise InputError("label count does not match descriptor count")
    best = nearest_gallery(gallery, probes)
    predicted = np.asarray(gallery_labels, dtype=object)[best]
    correct = np.sum(predicted == np.asarray(probe_labels, dtype=object))
    return 100.0 * correct / len(probe_labels)


def flip_score(a_pair, b_pair) -> float:
    """Mean cosine over the four original/flipped cross pairings."""
    (a, af), (b, bf) = a_pair, b_pair
    return (cosine(a, b) + cosine(a, bf) + cosine(af, b) + cosine(af, bf)) / 4.0


def _split(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError("scores and labels must be equal-length 1-D sequences")
    if labels.all() or not labels.any():
        raise InputError("ROC needs at least one positive and one negative pair")
    return scores, labels


def auc_score(scores, labels) -> float:
    """Area under the ROC in percent; tied scores earn half credit."""
    scores, labels = _split(scores, labels)
    ranks = rankdata(scores)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return 100.0 * u / (n_pos * n_neg)


def roc_curve(scores, labels):
    """Empirical ROC points ``(fpr, tpr, threshold)``; predict same when score >= threshold."""
    scores, labels = _split(scores, labels)
    thresholds = np.unique(scores)[::-1]
    pos = np.sort(scores[labels])
    neg = np.sort(scores[~labels])
    tpr = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    return (np.concatenate([[0.0], fpr]), np.concatenate([[0.0], tpr]),
            np.concatenate([[np.inf], thresholds]))


def best_accuracy(scores, labels) -> tuple[float, float]:
    """Best ``(accuracy %, threshold)``; candidates are midpoints of distinct scores and +-inf."""
    scores, labels = _split(scores, labels)
    distinct = np.unique(scores)
    candidates = np.concatenate([[-np.inf], (distinct[:-1] + distinct[1:]) / 2.0, [np.inf]])
    pos = np.sort(scores[labels])
    neg = np.sort(scores[~labels])
    tp = pos.size - np.searchsorted(pos, candidates, side="right")
    tn = np.searchsorted(neg, candidates, side="right")
    acc = (tp + tn) / scores.size
    best = int(np.argmax(acc))
    return 100.0 * float(acc[best]), float(candidates[best])


def verify_roc(scores, labels) -> tuple[float, float]:
    """``(AUC %, best-threshold accuracy %)`` for one list of scored pairs."""
    return auc_score(scores, labels), best_accuracy(scores, labels)[0]


def video_score(frames_a: tuple, frames_b: tuple, r: int = 20, seed: int = 0) -> float:
    """Average flip-score over ``r`` randomly paired frames of two videos.

    Each video is ``(descriptors, flipped_descriptors)`` with one row per
    frame; every frame pair contributes its four original/flipped cosines.
    """
    rng = np.random.default_rng(seed)
    (a, af), (b, bf) = (tuple(np.atleast_2d(x) for x in frames_a), tuple(np.atleast_2d(x) for x in frames_b))
    ia = rng.choice(a.shape[0], size=r, replace=a.shape[0] < r)
    ib = rng.choice(b.shape[0], size=r, replace=b.shape[0] < r)
    return float(np.mean([flip_score((a[i], af[i]), (b[j], bf[j])) for i, j in zip(ia, ib)]))


def population_sd(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def kfold_verify(pairs: Sequence[VerifyPair], extractor: Callable, k: int, q: int | None = None,
                 flip: bool = True, config_hash: str = "") -> tuple[EvalReport, dict]:
    """k-fold verification with per-fold WPCA and held-out threshold selection.

    ``extractor(key)`` returns ``(descriptor, flipped_descriptor)`` for an
    image key. For fold ``f`` the WPCA model is fit on every image (and its
    flip) appearing in the other folds; scores of fold ``f`` are flip-scores
    in that space. Returns the report and the pooled ROC points.
    """
    if k < 2:
        raise InputError(f"k-fold verification needs k >= 2, got {k}")
    by_fold: dict[int, list[VerifyPair]] = {f: [] for f in range(1, k + 1)}
    for p in pairs:
        if p.fold not in by_fold:
            raise InputError(f"pair fold {p.fold} outside 1..{k}")
        by_fold[p.fold].append(p)
    for f, ps in by_fold.items():
        if not ps:
            raise InputError(f"fold {f} has no pairs")

    cache = {}

    def feats(key):
        if key not in cache:
            d, df = extractor(key)
            cache[key] = (np.asarray(d, dtype=np.float64), np.asarray(df, dtype=np.float64))
        return cache[key]

    per_fold, all_scores, all_labels = [], [], []
    for f in range(1, k + 1):
        held = by_fold[f]
        if q:
            keys = sorted({key for g, ps in by_fold.items() if g != f for p in ps for key in (p.a, p.b)})
            train = [feats(key)[0] for key in keys] + ([feats(key)[1] for key in keys] if flip else [])
            train = np.stack(train)
            q_eff = min(q, train.shape[0] - 1, train.shape[1])
            if q_eff < q:
                warnings.warn(f"fold {f}: WPCA dimension capped at {q_eff}", RuntimeWarning, stacklevel=2)
            model = fit_wpca(train, q_eff)
            tf = lambda key: tuple(project(model, v) for v in feats(key))  # noqa: E731
        else:
            tf = feats
        scores = []
        for p in held:
            a, b = tf(p.a), tf(p.b)
            scores.append(flip_score(a, b) if flip else cosine(a[0], b[0]))
        labels = [p.same for p in held]
        acc, thr = best_accuracy(scores, labels)
        per_fold.append(FoldResult(f, auc_score(scores, labels), acc, thr, len(held)))
        all_scores += scores
        all_labels += labels

    accs = [r.acc for r in per_fold]
    fpr, tpr, thr = roc_curve(all_scores, all_labels)
    report = EvalReport(
        task="verification",
        auc=auc_score(all_scores, all_labels),
        acc_mean=float(np.mean(accs)),
        acc_sd=population_sd(accs),
        per_fold=per_fold,
        config_hash=config_hash,
        extra={"threshold_selection": "held_out_fold", "sd": "population"},
    )
    return report, {"fpr": fpr, "tpr": tpr, "threshold": thr}
