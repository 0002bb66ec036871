"""Render the per-run report figures next to the delimited output. Everything
draws from epochs.csv / per_sample.csv, so figures can be regenerated from a
finished run directory."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import read_epochs_csv


def render_run_figures(out_dir: str | Path) -> list[Path]:
    """Write the standard figure set for one run directory; returns the paths."""
    out = Path(out_dir)
    reports = read_epochs_csv(out / "epochs.csv")
    epochs = [r.epoch for r in reports]
    written: list[Path] = []

    def save(fig, name: str) -> None:
        path = out / name
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [r.test_acc for r in reports], marker=".", color="tab:blue")
    ax.set_xlabel("epoch")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0, 1)
    ax.grid(alpha=0.3)
    save(fig, "learning_curve.png")

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [r.tau_mu for r in reports], label=r"clean threshold $\tau_\mu$")
    ax.plot(epochs, [r.tau_nu for r in reports], label=r"noisy threshold $\tau_\nu$")
    ax.plot(epochs, [r.eta for r in reports], label=r"clean-set weight $\eta$", ls="--")
    ax.set_xlabel("epoch")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(alpha=0.3)
    save(fig, "thresholds.png")

    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharex=True)
    for ax, metric, title in (
        (axes[0], ("split_f1_splitnet", "split_f1_gmm"), "split F1"),
        (axes[1], ("split_acc_splitnet", "split_acc_gmm"), "split accuracy"),
    ):
        ax.plot(epochs, [getattr(r, metric[0]) for r in reports], label="splitter")
        ax.plot(epochs, [getattr(r, metric[1]) for r in reports], label="mixture posterior")
        ax.set_xlabel("epoch")
        ax.set_title(title)
        ax.set_ylim(0, 1.02)
        ax.legend()
        ax.grid(alpha=0.3)
    save(fig, "split_quality.png")

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [r.pseudo_correct for r in reports], label="correct pseudo-labels",
            color="tab:green")
    ax.plot(epochs, [r.pseudo_wrong for r in reports], label="wrong pseudo-labels",
            color="tab:red")
    ax.plot(epochs, [r.mask_count for r in reports], label="mask-passing samples",
            color="tab:gray", ls=":")
    ax.set_xlabel("epoch")
    ax.set_ylabel("count")
    ax.legend()
    ax.grid(alpha=0.3)
    save(fig, "pseudo_labels.png")

    per_sample = out / "per_sample.csv"
    if per_sample.exists():
        written.append(_loss_histogram(per_sample, out))
    return written


def _loss_histogram(per_sample: Path, out: Path) -> Path:
    """Normalized-loss histogram of the final dumped epoch, split by the
    ground-truth clean flag."""
    rows = per_sample.read_text().strip().splitlines()[1:]
    last_epoch = rows[-1].split(",")[0]
    norm, clean = [], []
    for row in rows:
        cells = row.split(",")
        if cells[0] != last_epoch:
            continue
        norm.append(float(cells[3]))
        clean.append(cells[8] == "1")
    norm = np.asarray(norm)
    clean = np.asarray(clean)

    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.linspace(0, 1, 41)
    ax.hist(norm[clean], bins=bins, alpha=0.6, label="clean labels", color="tab:blue")
    ax.hist(norm[~clean], bins=bins, alpha=0.6, label="noisy labels", color="tab:orange")
    ax.set_xlabel("normalized loss")
    ax.set_ylabel("samples")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = out / "loss_hist.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
