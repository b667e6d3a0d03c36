"""Matplotlib figure rendering for the report paths.

Every report the CLI writes as delimited output (loss curves, timing
tables, evaluation summaries) gets a rendered PNG next to it.  All
figures go through the Agg backend so the CLI works headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evalbench import STAGES


def save_loss_curve_figure(curve, path):
    steps = [s for s, _ in curve]
    losses = [l for _, l in curve]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(steps, losses, lw=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title("training loss")
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)


def save_timing_figure(report, path):
    names = [s for s in STAGES if s != "total"]
    millis = [report.stages[s].millis for s in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.barh(range(len(names)), millis)
    ax.set_yticks(range(len(names)), names)
    ax.invert_yaxis()
    ax.set_xlabel("milliseconds")
    ax.set_title(f"stage runtime (total {report.stages['total'].millis:.1f} ms)")
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)


def save_disparity_figure(disp, path, title="disparity"):
    values = np.where(disp.valid, disp.values, np.nan)
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(values, cmap="turbo")
    fig.colorbar(im, ax=ax, shrink=0.8, label="px")
    ax.set_title(title)
    ax.set_axis_off()
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)


def save_error_figure(pred, gt, path):
    err = np.abs(pred.values.astype(np.float64) - gt.values)
    err = np.where(gt.valid, err, np.nan)
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(err, cmap="magma")
    fig.colorbar(im, ax=ax, shrink=0.8, label="|error| px")
    ax.set_title("disparity error")
    ax.set_axis_off()
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)


def save_weight_figure(maps, path):
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, m, name in zip(axes, (maps.w_hor, maps.w_vert), ("horizontal", "vertical")):
        im = ax.imshow(m, cmap="gray", vmin=0.0, vmax=1.0)
        ax.set_title(f"{name} weights")
        ax.set_axis_off()
    fig.colorbar(im, ax=list(axes), shrink=0.8)
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)
