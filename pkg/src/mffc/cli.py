"""Command-line entry point: ``mffc <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import io, plotting
from .config import PipelineConfig
from .descriptor import conv_same
from .diversify import make_offspring
from .errors import MffcError
from .evaluation import EvalReport, cosine_matrix, kfold_verify, nearest_gallery
from .gabor import condensed_ensemble
from .pipeline import Extractor, gabor_bank, learn_bank, offspring_sets
from .wpca import fit_wpca, project

log = logging.getLogger("mffc")

CONFIG_FILE = "config.txt"
GABOR_FILE = "gabor.mffc"
LEARNED_FILE = "learned.mffc"
OFFSPRING_FILES = ("offspring_re.mffc", "offspring_im.mffc")
DESC_FILE = "descriptors.bin"
FLIP_FILE = "descriptors_flip.bin"
INDEX_FILE = "descriptors.csv"
WPCA_FILE = "wpca.mffc"


# --- configuration ------------------------------------------------------------

def resolve_config(args) -> PipelineConfig:
    overrides: dict = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise MffcError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip().replace("-", "_")] = value.strip()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.kind:
        overrides["kind"] = args.kind.replace("-", "_")
    if args.folds is not None:
        overrides["n_folds"] = args.folds
    if args.backend:
        overrides["backend"] = args.backend
    threads = args.threads if args.threads is not None else os.environ.get("MFFC_THREADS")
    if threads is not None:
        overrides["threads"] = int(threads)

    config_path = args.config
    if config_path is None and args.out is not None and (Path(args.out) / CONFIG_FILE).exists():
        config_path = Path(args.out) / CONFIG_FILE
    return PipelineConfig.load(config_path, args.preset, overrides)


def save_config(out: Path, cfg: PipelineConfig) -> None:
    io.atomic_write(out / CONFIG_FILE, cfg.to_text().encode())


def _out(args) -> Path:
    if args.out is None:
        raise MffcError("--out is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args) -> io.DatasetManifest:
    if args.manifest is None:
        raise MffcError("--manifest is required")
    return io.read_manifest(args.manifest)


def _training_entries(manifest: io.DatasetManifest):
    for names in (("train",), ("gallery",)):
        entries = manifest.split(*names)
        if entries:
            return entries
    return manifest.entries


# --- commands --------------------------------------------------------------

def cmd_synth(args) -> int:
    from .synth import synth_corpus

    out = _out(args)
    corpus = synth_corpus(out, args.classes, args.per_class, tuple(args.size), args.seed or 0, args.noise,
                          args.task, args.gallery_per_class, args.kfold, args.pairs_per_fold)
    print(f"wrote {len(corpus.entries)} images and {corpus.manifest_path.name}"
          + (f", {len(corpus.pairs)} pairs" if corpus.pairs else ""))
    return 0


def cmd_learn_filters(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    save_config(out, cfg)
    gabor = gabor_bank(cfg)
    io.save_bank(out / GABOR_FILE, gabor)
    print(f"gabor: {len(gabor)} condensed filters, {gabor.support}x{gabor.support}")
    if cfg.kind != "gabor":
        manifest = _manifest(args)
        entries = _training_entries(manifest)
        images = [io.load_image(manifest.resolve(e), cfg.image_size) for e in entries]
        learned = learn_bank(cfg, images)
        io.save_bank(out / LEARNED_FILE, learned)
        print(f"{learned.kind}: {len(learned)} filters from {cfg.n_patches} patches of {len(images)} images")
    return 0


def cmd_make_offspring(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    gabor = io.load_bank(out / GABOR_FILE) if (out / GABOR_FILE).exists() else gabor_bank(cfg)
    learned = None
    if cfg.kind != "gabor":
        if not (out / LEARNED_FILE).exists():
            raise MffcError(f"{cfg.kind} needs {LEARNED_FILE}; run learn-filters first")
        learned = io.load_bank(out / LEARNED_FILE)
    sets = offspring_sets(cfg, gabor, learned)
    for name, oset in zip(OFFSPRING_FILES, sets):
        io.save_offspring(out / name, oset)
    re_set = sets[0]
    plotting.plot_filters(re_set.re, out / "offspring_re.png")
    save_config(out, cfg)
    print(f"offspring: {len(re_set)} logical / {re_set.n_unique} unique per part, "
          f"{re_set.offspring_side}x{re_set.offspring_side}, folds {re_set.fold_sizes}")
    return 0


def _load_offspring(out: Path, cfg: PipelineConfig):
    if all((out / name).exists() for name in OFFSPRING_FILES):
        return tuple(io.load_offspring(out / name) for name in OFFSPRING_FILES)
    if cfg.kind != "gabor":
        raise MffcError("offspring sets missing; run make-offspring first")
    return offspring_sets(cfg, gabor_bank(cfg))


def cmd_describe(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    manifest = _manifest(args)
    re_set, im_set = _load_offspring(out, cfg)
    extractor = Extractor.from_config(cfg, re_set, im_set)
    images = [io.load_image(manifest.resolve(e), cfg.image_size) for e in manifest.entries]
    start = time.perf_counter()
    rows = extractor.batch(images, cfg.threads)
    io.write_descriptors(out / DESC_FILE, rows, cfg.hash())
    if cfg.flip:
        flips = extractor.batch([io.hflip(img) for img in images], cfg.threads)
        io.write_descriptors(out / FLIP_FILE, flips, cfg.hash())
    io.write_manifest(out / INDEX_FILE, manifest.entries)
    save_config(out, cfg)
    print(f"described {rows.shape[0]} images: dim {rows.shape[1]} "
          f"({time.perf_counter() - start:.1f}s)")
    return 0


def _load_store(out: Path):
    rows, _ = io.read_descriptors(out / DESC_FILE)
    flips = io.read_descriptors(out / FLIP_FILE)[0] if (out / FLIP_FILE).exists() else None
    index = io.read_manifest(out / INDEX_FILE).entries
    return rows, flips, index


def cmd_fit_wpca(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    rows, flips, index = _load_store(out)
    mask = np.array([e.split == cfg.wpca_split for e in index])
    if not mask.any():
        raise MffcError(f"no descriptors in split {cfg.wpca_split!r}")
    train = rows[mask]
    if cfg.flip and flips is not None:
        train = np.vstack([train, flips[mask]])
    q = min(cfg.wpca_dim, train.shape[0] - 1, train.shape[1])
    if q < cfg.wpca_dim:
        print(f"note: WPCA dimension capped at {q} by {train.shape[0]} training rows")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = fit_wpca(train, q)
    io.save_wpca(out / WPCA_FILE, model, {"split": cfg.wpca_split, "config_hash": cfg.hash()})
    save_config(out, cfg)
    print(f"wpca: {model.dim_in} -> {model.dim_out} dims from {train.shape[0]} rows")
    return 0


def cmd_eval_ident(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    rows, _, index = _load_store(out)
    if (out / WPCA_FILE).exists():
        rows = project(io.load_wpca(out / WPCA_FILE), rows)
    labels = np.array([e.subject_id for e in index], dtype=object)
    g = np.array([e.split == "gallery" for e in index])
    p = np.array([e.split == "probe" for e in index])
    if not g.any() or not p.any():
        raise MffcError("identification needs gallery and probe splits")
    best = nearest_gallery(rows[g], rows[p])
    predicted = labels[g][best]
    rank1 = 100.0 * np.mean(predicted == labels[p])
    report = EvalReport("identification", rank1=float(rank1), config_hash=cfg.hash(),
                        extra={"n_gallery": int(g.sum()), "n_probe": int(p.sum())})
    io.atomic_write(out / "ident_report.txt", report.to_text().encode())
    probes = [e for e, keep in zip(index, p) if keep]
    io.write_csv(out / "ident_predictions.csv",
                 [{"path": e.path, "subject_id": e.subject_id, "predicted": pr} for e, pr in zip(probes, predicted)],
                 ["path", "subject_id", "predicted"])
    scores = cosine_matrix(rows[p], rows[g])
    same = labels[p][:, None] == labels[g][None, :]
    plotting.plot_score_hist(scores[same], scores[~same], out / "ident_scores.png")
    print(f"rank1={rank1:.2f}")
    return 0


def cmd_eval_verify(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    rows, flips, index = _load_store(out)
    pairs_path = args.pairs or (Path(args.manifest).parent / "pairs.csv" if args.manifest else None)
    if pairs_path is None:
        raise MffcError("--pairs (or --manifest next to pairs.csv) is required")
    pairs = io.read_pairs(pairs_path)
    lookup = {e.path: i for i, e in enumerate(index)}
    use_flip = cfg.flip and flips is not None

    def extractor(key):
        if key not in lookup:
            raise MffcError(f"pair image {key!r} has no descriptor")
        i = lookup[key]
        return rows[i], (flips[i] if use_flip else rows[i])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        report, roc = kfold_verify(pairs, extractor, cfg.kfold, cfg.wpca_dim or None, use_flip, cfg.hash())
    io.atomic_write(out / "verify_report.txt", report.to_text().encode())
    io.write_csv(out / "folds.csv", report.fold_rows(), ["fold", "auc", "acc", "n_pairs"])
    io.write_csv(out / "roc.csv",
                 [{"fpr": f"{a:.6f}", "tpr": f"{b:.6f}", "threshold": f"{t:.6f}"}
                  for a, b, t in zip(roc["fpr"], roc["tpr"], roc["threshold"])],
                 ["fpr", "tpr", "threshold"])
    plotting.plot_roc(roc["fpr"], roc["tpr"], out / "roc.png", cfg.kind, report.auc)
    print(f"auc={report.auc:.2f} acc={report.acc_mean:.2f}+-{report.acc_sd:.2f} over {cfg.kfold} folds")
    return 0


def cmd_bench_conv(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    rng = np.random.default_rng(cfg.seed)
    gabor = condensed_ensemble(cfg.gabor_params())
    re_set, _ = make_offspring("gabor", gabor, n_folds=cfg.n_folds)
    kernels = re_set.re
    K = kernels.shape[1]
    table = []
    for size in args.sizes:
        image = rng.uniform(0, 255, size=(size, size))
        timing = {}
        results = {}
        for backend in ("direct", "fft"):
            best = np.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                results[backend] = conv_same(image, kernels, backend, workers=1)
                best = min(best, time.perf_counter() - t0)
            timing[backend] = best
        scale = np.abs(results["direct"]).max()
        table.append({
            "size": size, "K": K, "L": kernels.shape[0],
            "direct_s": timing["direct"], "fft_s": timing["fft"],
            "max_rel_diff": float(np.abs(results["direct"] - results["fft"]).max() / scale),
        })
    cols = ["size", "K", "L", "direct_s", "fft_s", "max_rel_diff"]
    io.write_csv(out / "bench.csv", [{c: (f"{r[c]:.3e}" if isinstance(r[c], float) else r[c]) for c in cols}
                                     for r in table], cols)
    plotting.plot_bench(table, out / "bench.png")
    print("size  K   L   direct_s   fft_s      max_rel_diff")
    for r in table:
        print(f"{r['size']:<5} {r['K']:<3} {r['L']:<3} {r['direct_s']:.3e}  {r['fft_s']:.3e}  {r['max_rel_diff']:.1e}")
    return 0


def cmd_run(args) -> int:
    """learn-filters -> make-offspring -> describe -> fit-wpca -> eval."""
    for step in (cmd_learn_filters, cmd_make_offspring, cmd_describe):
        step(args)
    if args.task == "identification":
        cmd_fit_wpca(args)
        return cmd_eval_ident(args)
    return cmd_eval_verify(args)


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--preset", help="parameter preset (feret1, feret2, ar, lfw_a, lfw_hpen, ytf, synth)")
    common.add_argument("--manifest", type=Path, help="dataset manifest CSV")
    common.add_argument("--out", type=Path, help="run directory for all artifacts")
    common.add_argument("--seed", type=int)
    common.add_argument("--kind", choices=["gabor", "gabor-pca", "gabor-ica"])
    common.add_argument("--folds", type=int, metavar="M", help="number of M-FFC folds")
    common.add_argument("--backend", choices=["direct", "fft", "auto"])
    common.add_argument("--threads", type=int, metavar="N", help="worker threads (default $MFFC_THREADS or 1)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mffc", description="M-fold filter convolution face descriptor")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--per-class", type=int, default=10)
    p.add_argument("--size", type=int, nargs=2, default=(64, 64), metavar=("H", "W"))
    p.add_argument("--noise", type=float, default=20.0)
    p.add_argument("--task", choices=["identification", "verification"], default="identification")
    p.add_argument("--gallery-per-class", type=int, default=1)
    p.add_argument("--kfold", type=int, default=10)
    p.add_argument("--pairs-per-fold", type=int, default=20)
    p.set_defaults(func=cmd_synth)

    for name, func, text in (
        ("learn-filters", cmd_learn_filters, "build the Gabor bank and learn PCA/ICA filters"),
        ("make-offspring", cmd_make_offspring, "diversify filter banks into offspring sets"),
        ("describe", cmd_describe, "extract descriptors for every manifest image"),
        ("fit-wpca", cmd_fit_wpca, "fit the whitening PCA projection"),
        ("eval-ident", cmd_eval_ident, "rank-1 identification, gallery vs probe"),
    ):
        sub.add_parser(name, parents=[common], help=text).set_defaults(func=func)

    p = sub.add_parser("eval-verify", parents=[common], help="k-fold verification over a pairs file")
    p.add_argument("--pairs", type=Path)
    p.set_defaults(func=cmd_eval_verify)

    p = sub.add_parser("bench-conv", parents=[common], help="time direct vs FFT convolution")
    p.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128, 256])
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench_conv)

    p = sub.add_parser("run", parents=[common], help="run the full chain on a manifest")
    p.add_argument("--task", choices=["identification", "verification"], default="identification")
    p.add_argument("--pairs", type=Path)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MffcError, OSError) as exc:
        print(f"mffc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
