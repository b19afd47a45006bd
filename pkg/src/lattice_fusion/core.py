"""Shared domain types: scored boxes, per-frame detection sets, motion models,
score normalization, and detection-source pooling.

Scores are log-domain throughout so that detection, coherency, emission, and
transition terms are addable in a single objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

__all__ = [
    "ScoredBox",
    "FrameDetections",
    "MotionModel",
    "forward_project",
    "otsu_offset",
    "pool_detections",
    "top_k",
]

OTSU_BINS = 64


@dataclass(frozen=True)
class ScoredBox:
    """One candidate detection: axis-aligned box plus log-domain score.

    Geometry is center+size (cx, cy, w, h) in frame pixels.
    """

    frame: int
    cx: float
    cy: float
    w: float
    h: float
    score: float
    source_id: int = 0
    projected: bool = False

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got w={self.w}, h={self.h}")
        if not math.isfinite(self.score):
            raise ValueError(f"box score must be finite, got {self.score}")

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class FrameDetections:
    """Ordered candidate detections for one frame. May be empty: an empty
    frame is the documented failure mode of plain detection-based tracking."""

    frame: int
    boxes: tuple[ScoredBox, ...] = ()

    def __post_init__(self):
        boxes = tuple(self.boxes)
        object.__setattr__(self, "boxes", boxes)
        for b in boxes:
            if b.frame != self.frame:
                raise ValueError(
                    f"box frame {b.frame} does not match container frame {self.frame}"
                )

    def __len__(self) -> int:
        return len(self.boxes)


@dataclass(frozen=True)
class MotionModel:
    """Forward projection of a detection by one frame.

    A constant-velocity surrogate stands in for optical-flow/KLT projection;
    the identity model keeps geometry fixed.
    """

    kind: str = "identity"  # "identity" | "constant-velocity"
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "constant-velocity"):
            raise ValueError(f"unknown motion model kind {self.kind!r}")
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)):
            raise ValueError("motion velocity must be finite")

    @classmethod
    def identity(cls) -> "MotionModel":
        return cls(kind="identity")

    @classmethod
    def constant_velocity(cls, vx: float, vy: float) -> "MotionModel":
        return cls(kind="constant-velocity", vx=vx, vy=vy)


def forward_project(box: ScoredBox, model: MotionModel) -> ScoredBox:
    """Project a detection forward one frame under the motion model.

    The frame index increments; the identity model preserves geometry, the
    constant-velocity model displaces the center. Score is carried over.
    """
    if model.kind == "identity":
        return replace(box, frame=box.frame + 1)
    return replace(box, frame=box.frame + 1, cx=box.cx + model.vx, cy=box.cy + model.vy)


def otsu_offset(scores: Sequence[float], trained_threshold: float, epsilon: float) -> float:
    """Per-source score offset for pooling detections from multiple sources.

    Returns the minimum of (a) the histogram bipartition threshold maximizing
    between-class variance and (b) the trained acceptance threshold offset by
    epsilon. The histogram uses 64 equal-width bins spanning [min, max]; the
    bipartition search is exhaustive over interior bin boundaries, ties broken
    toward the lowest threshold. When every score is equal the bipartition
    threshold degenerates to the common value.
    """
    if len(scores) == 0:
        raise ValueError("no scores to normalize")
    lo = min(scores)
    hi = max(scores)
    if lo == hi:
        return min(lo, trained_threshold + epsilon)

    width = (hi - lo) / OTSU_BINS
    counts = [0] * OTSU_BINS
    for s in scores:
        i = int((s - lo) / width)
        if i >= OTSU_BINS:  # s == hi lands past the last bin
            i = OTSU_BINS - 1
        counts[i] = counts[i] + 1

    centers = [lo + (i + 0.5) * width for i in range(OTSU_BINS)]
    total = len(scores)
    total_mass = sum(c * n for c, n in zip(centers, counts))

    best_var = -1.0
    best_cut = 0
    n0 = 0
    mass0 = 0.0
    # Cut after bin i places bins 0..i below the threshold lo + (i+1)*width.
    for i in range(OTSU_BINS - 1):
        n0 += counts[i]
        mass0 += centers[i] * counts[i]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        mu0 = mass0 / n0
        mu1 = (total_mass - mass0) / n1
        var = n0 * n1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var = var
            best_cut = i
    bipartition = lo + (best_cut + 1) * width
    return min(bipartition, trained_threshold + epsilon)


def pool_detections(
    per_source: Sequence[tuple[FrameDetections, float]],
    frame: int | None = None,
) -> FrameDetections:
    """Union the detections of several sources, subtracting each source's
    score offset. Ordering is source order, then within-source order.

    `frame` disambiguates the frame index when `per_source` is empty.
    """
    if not per_source:
        return FrameDetections(frame=0 if frame is None else frame, boxes=())
    t = per_source[0][0].frame
    if frame is not None and frame != t:
        raise ValueError(f"frame mismatch: expected {frame}, got {t}")
    pooled: list[ScoredBox] = []
    for dets, offset in per_source:
        if dets.frame != t:
            raise ValueError(f"frame mismatch across sources: {dets.frame} != {t}")
        for b in dets.boxes:
            pooled.append(replace(b, score=b.score - offset))
    return FrameDetections(frame=t, boxes=tuple(pooled))


def top_k(dets: FrameDetections, k: int) -> FrameDetections:
    """Keep the k highest-scoring detections, in descending score order.

    Stable: equal scores keep their original relative order. A k larger than
    the list returns the whole list sorted.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(enumerate(dets.boxes), key=lambda ib: (-ib[1].score, ib[0]))
    return FrameDetections(frame=dets.frame, boxes=tuple(b for _, b in ranked[:k]))
