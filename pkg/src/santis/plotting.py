"""Matplotlib figures for reports. Uses the non-interactive Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_slice_png(path, recon, ref, title=""):
    """Reconstruction magnitude next to its absolute difference map (x5)."""
    a, b = np.abs(recon), np.abs(ref)
    vmax = b.max() or 1.0
    fig, axes = plt.subplots(1, 2, figsize=(6, 3.2))
    axes[0].imshow(a, cmap="gray", vmin=0, vmax=vmax)
    axes[0].set_title("recon")
    axes[1].imshow(np.abs(a - b) * 5, cmap="gray", vmin=0, vmax=vmax)
    axes[1].set_title("|diff| x5")
    for ax in axes:
        ax.axis("off")
    if title:
        fig.suptitle(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=80)
    plt.close(fig)


def metric_bars(summary: list, path, metrics=("nRMSE(%)", "SSIM(%)", "Tenengrad(%)")) -> Path:
    """One panel per metric, grouped by method with one bar per pattern."""
    methods = list(dict.fromkeys(s["method"] for s in summary))
    patterns = list(dict.fromkeys(s["pattern"] for s in summary))
    fig, axes = plt.subplots(1, len(metrics), figsize=(4 * len(metrics), 3.5))
    axes = np.atleast_1d(axes)
    width = 0.8 / max(len(patterns), 1)
    for ax, metric in zip(axes, metrics):
        for j, p in enumerate(patterns):
            means, stds = [], []
            for m in methods:
                hit = next((s for s in summary if s["method"] == m and s["pattern"] == p), None)
                v = hit and hit.get(metric)
                means.append(v["mean"] if v else np.nan)
                stds.append(v["std"] if v else 0.0)
            xs = np.arange(len(methods)) + (j - (len(patterns) - 1) / 2) * width
            ax.bar(xs, means, width, yerr=stds, capsize=2, label=p)
        ax.set_xticks(np.arange(len(methods)), methods, rotation=20)
        ax.set_title(metric)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def seen_unseen(summary: list, path, metric="nRMSE(%)") -> Path:
    """Per-method line from the seen to the unseen pattern; flat lines mean robust."""
    methods = list(dict.fromkeys(s["method"] for s in summary))
    patterns = list(dict.fromkeys(s["pattern"] for s in summary))
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for m in methods:
        ys = []
        for p in patterns:
            hit = next((s for s in summary if s["method"] == m and s["pattern"] == p), None)
            ys.append(hit[metric]["mean"] if hit and hit.get(metric) else np.nan)
        ax.plot(patterns, ys, marker="o", label=m)
    ax.set_ylabel(metric)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def loss_curves(histories: dict, path, keys=("loss1", "loss2")) -> Path:
    """Training losses per method against iteration (log scale)."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for method, hist in histories.items():
        it = [h["iteration"] for h in hist]
        for k in keys:
            ax.plot(it, [h[k] for h in hist], lw=0.8, label=f"{method} {k}")
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def objective_history(curves: dict, path) -> Path:
    """CS-PI objective per iteration, one line per ``(pattern, slice)`` key."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, ys in curves.items():
        ax.plot(ys, lw=0.7, label=label if len(curves) <= 6 else None)
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    if len(curves) <= 6:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)
