"""Matplotlib renderings of the report tables, written straight to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_residuals_figure(path, series_by_feature: dict) -> None:
    """Box plot of per-trial mean residuals per feature."""
    features = list(series_by_feature.keys())
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.boxplot([series_by_feature[f] for f in features], tick_labels=features)
    ax.set_ylabel("registration residual (mm)")
    ax.set_title("Per-feature residuals across trials")
    ax.tick_params(axis="x", rotation=45)
    _finish(fig, path)


def save_fle_figure(path, features, pre, post, reduction) -> None:
    """Grouped bars of localization error before/after line-fit correction."""
    x = np.arange(len(features))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(x - 0.2, pre, width=0.4, label="pre-correction")
    ax.bar(x + 0.2, post, width=0.4, label="post-correction")
    for xi, r in zip(x, reduction):
        ax.annotate(f"-{r:.0f}%", (xi, max(pre[xi], post[xi])), ha="center",
                    xytext=(0, 3), textcoords="offset points", fontsize=8)
    ax.set_xticks(x)
    ax.set_xticklabels(features, rotation=45)
    ax.set_ylabel("localization error (mm)")
    ax.set_title("Localization error and its correction by line fitting")
    ax.legend()
    _finish(fig, path)


def save_repeatability_figure(path, methods, translation_stds, rotation_stds) -> None:
    """Per-axis scatter of repeated calibrations, per method."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    x = np.arange(3)
    width = 0.8 / max(1, len(methods))
    for k, method in enumerate(methods):
        axes[0].bar(x + k * width, translation_stds[k], width=width, label=method)
        axes[1].bar(x + k * width, rotation_stds[k], width=width, label=method)
    for ax, labels, ylabel in (
        (axes[0], ["x", "y", "z"], "translation std (mm)"),
        (axes[1], ["rx", "ry", "rz"], "rotation std (deg)"),
    ):
        ax.set_xticks(x + width * (len(methods) - 1) / 2)
        ax.set_xticklabels(labels)
        ax.set_ylabel(ylabel)
        ax.legend()
    fig.suptitle("Calibration repeatability")
    _finish(fig, path)


def save_workspace_figure(path, vectors_by_group: dict) -> None:
    """Transform clusters as vectors: position encodes translation,
    direction encodes the rotation vector, color encodes the group."""
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    for label, vec in vectors_by_group.items():
        vec = np.asarray(vec, dtype=float)
        t = vec[:, :3]
        r = vec[:, 3:]
        norms = np.linalg.norm(r, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        d = r / norms
        ax.quiver(t[:, 0], t[:, 1], t[:, 2], d[:, 0], d[:, 1], d[:, 2],
                  length=1.0, normalize=False, label=label)
    ax.set_xlabel("tx (mm)")
    ax.set_ylabel("ty (mm)")
    ax.set_zlabel("tz (mm)")
    ax.set_title("Calibration results by workspace")
    ax.legend(fontsize=7)
    _finish(fig, path)


def save_alignment_figure(path, mean, std) -> None:
    """Alignment errors: translation and rotation axes side by side."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    fig, axes = plt.subplots(1, 2, figsize=(8, 4))
    axes[0].bar(["x", "y", "z"], mean[:3], yerr=std[:3], capsize=4)
    axes[0].set_ylabel("translation error (mm)")
    axes[1].bar(["rx", "ry", "rz"], mean[3:], yerr=std[3:], capsize=4)
    axes[1].set_ylabel("rotation error (deg)")
    fig.suptitle("Tool alignment errors")
    _finish(fig, path)
