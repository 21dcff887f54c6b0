"""Report figures rendered to files next to the tabular outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
    # stable bytes across runs
    "svg.hashsalt": "mffc",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def plot_roc(fpr, tpr, path, label: str = "", auc: float | None = None) -> Path:
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.6, 3.4))
        name = f"{label} (AUC {auc:.2f}%)" if auc is not None else label
        ax.plot(fpr, tpr, lw=1.5, label=name or None)
        ax.plot([0, 1], [0, 1], ls=":", c="0.6", lw=0.8)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.01)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        if name:
            ax.legend(loc="lower right", frameon=False)
        return _save(fig, path)


def plot_score_hist(genuine, impostor, path) -> Path:
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.0, 2.8))
        bins = np.linspace(-1, 1, 61)
        ax.hist(impostor, bins=bins, alpha=0.6, density=True, label="different subject")
        ax.hist(genuine, bins=bins, alpha=0.6, density=True, label="same subject")
        ax.set_xlabel("cosine similarity")
        ax.set_ylabel("density")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_bench(rows: list[dict], path) -> Path:
    """Direct vs FFT convolution time against image side, one line per offspring side."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        for K in sorted({r["K"] for r in rows}):
            sub = sorted((r for r in rows if r["K"] == K), key=lambda r: r["size"])
            sizes = [r["size"] for r in sub]
            ax.plot(sizes, [r["direct_s"] for r in sub], marker="o", label=f"direct, K={K}")
            ax.plot(sizes, [r["fft_s"] for r in sub], marker="s", ls="--", label=f"fft, K={K}")
        ax.set_yscale("log")
        ax.set_xlabel("image side (px)")
        ax.set_ylabel("seconds per image")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_filters(stack: np.ndarray, path, cols: int = 8) -> Path:
    """Montage of a ``(n, K, K)`` filter stack, each tile scaled to its own range."""
    n = stack.shape[0]
    rows = int(np.ceil(n / cols))
    with plt.rc_context(RC):
        fig, axes = plt.subplots(rows, cols, figsize=(cols * 0.7, rows * 0.7), squeeze=False)
        for i, ax in enumerate(axes.flat):
            ax.axis("off")
            if i < n:
                ax.imshow(stack[i], cmap="gray", interpolation="nearest")
        return _save(fig, path)
