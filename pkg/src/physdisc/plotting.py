"""Matplotlib figures for reports (headless Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evalkit import SurpriseCurve  # noqa: E402


def plot_surprise(curves: Sequence[SurpriseCurve], path: Path, violation_frame: int | None = None,
                  title: str = "") -> Path:
    """Line plot of one or more surprise curves, with the violation marked."""
    fig, ax = plt.subplots(figsize=(6, 3.2), dpi=100)
    for c in curves:
        ax.plot(c.frames, c.values, marker="o", ms=3, label=c.video_id or None)
    if violation_frame is not None:
        ax.axvline(violation_frame, color="0.4", ls="--", lw=1, label="violation")
    ax.set_xlabel("frame")
    ax.set_ylabel("surprise")
    if title:
        ax.set_title(title)
    if any(c.video_id for c in curves) or violation_frame is not None:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def plot_loss_curve(steps, values, path: Path, switch_step: int | None = None, xlabel: str = "step") -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.2), dpi=100)
    ax.plot(steps, values, lw=1)
    if switch_step is not None:
        ax.axvline(switch_step, color="0.4", ls="--", lw=1, label="physics on")
        ax.legend(fontsize=8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("total loss")
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return Path(path)
