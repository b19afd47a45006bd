"""Figure rendering for the CLI report paths. All figures go straight to
files; no interactive backend is ever required."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .agreement import AgreementReport
from .bench import BenchReport
from .core import FrameDetections, ScoredBox

__all__ = ["plot_track", "plot_bench", "plot_agreement"]


def plot_track(
    path: str,
    boxes: Sequence[ScoredBox],
    detections: Sequence[FrameDetections] | None = None,
    truth: Sequence[ScoredBox] | None = None,
    title: str = "track",
) -> None:
    """Center trajectory over the image plane, colored by frame index, with
    the candidate detections and ground truth overlaid when available."""
    fig, ax = plt.subplots(figsize=(6, 5))
    if detections is not None:
        xs = [b.cx for fd in detections for b in fd.boxes]
        ys = [b.cy for fd in detections for b in fd.boxes]
        ax.scatter(xs, ys, s=8, c="lightgray", label="detections")
    if truth is not None:
        ax.plot([b.cx for b in truth], [b.cy for b in truth], "k--", lw=1, label="truth")
    frames = [b.frame for b in boxes]
    sc = ax.scatter(
        [b.cx for b in boxes], [b.cy for b in boxes], c=frames, cmap="viridis", s=20
    )
    ax.plot([b.cx for b in boxes], [b.cy for b in boxes], lw=0.8, alpha=0.6)
    fig.colorbar(sc, ax=ax, label="frame")
    ax.set_xlabel("x (px)")
    ax.set_ylabel("y (px)")
    ax.set_title(title)
    ax.invert_yaxis()
    if ax.get_legend_handles_labels()[1]:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_bench(path: str, report: BenchReport) -> None:
    """Log-log runtime vs. cell count for both engines, with linear and
    quadratic reference slopes."""
    cells = np.array([r.cells for r in report.rows], dtype=float)
    tq = np.array([r.t_quadratic for r in report.rows])
    tl = np.array([r.t_linear for r in report.rows])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(cells, tq, "o-", label="quadratic engine")
    ax.loglog(cells, tl, "s-", label="transform engine")
    ax.loglog(cells, tl[0] * cells / cells[0], ":", c="gray", label="~N")
    ax.loglog(cells, tq[0] * (cells / cells[0]) ** 2, "--", c="gray", label="~N^2")
    ax.set_xlabel("prism cells per frame")
    ax.set_ylabel("seconds")
    ax.set_title(f"tracking runtime, T={report.frames}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_agreement(path: str, reports: dict[str, AgreementReport]) -> None:
    """Histogram of pooled per-frame overlaps, one panel per class."""
    fig, axes = plt.subplots(1, len(reports), figsize=(4.5 * len(reports), 3.5))
    if len(reports) == 1:
        axes = [axes]
    for ax, (cls, rep) in zip(axes, sorted(reports.items())):
        pooled = [o for va in rep.per_video for o in va.overlaps]
        ax.hist(pooled, bins=20, range=(0.0, 1.0), color="steelblue")
        ax.axvline(rep.mean, color="crimson", label=f"mean={rep.mean:.3f}")
        ax.set_title(f"{cls} (N={rep.videos}, sd={rep.std:.3f})")
        ax.set_xlabel("overlap")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
