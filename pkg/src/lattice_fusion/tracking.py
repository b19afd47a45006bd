"""Detection-based tracking: select one detection per frame maximizing total
detection score plus adjacent-frame temporal coherency, by Viterbi dynamic
programming over the per-frame candidate sets. Quadratic in detections per
frame, linear in frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .core import FrameDetections, MotionModel, ScoredBox, forward_project

__all__ = [
    "CoherencyParams",
    "Track",
    "EmptyFrameError",
    "coherency_score",
    "viterbi_track",
    "viterbi_track_augmented",
    "greedy_track",
]


class EmptyFrameError(ValueError):
    """A frame with no detections makes every track infeasible."""


@dataclass(frozen=True)
class CoherencyParams:
    """How adjacent-frame coherency is scored.

    ``form`` selects negative Euclidean distance (the default) or negative
    squared Euclidean distance between the forward-projected previous center
    and the next center. The squared form is what the prism-level transform
    engines implement, so it is provided here for like-for-like comparisons.
    """

    motion: MotionModel = MotionModel.identity()
    form: str = "negative-euclidean"

    def __post_init__(self):
        if self.form not in ("negative-euclidean", "negative-squared-euclidean"):
            raise ValueError(f"unknown coherency form {self.form!r}")


@dataclass(frozen=True)
class Track:
    """One selected detection per frame plus the accumulated objective.

    ``per_frame_scores`` holds (detection-term, coherency-term) pairs for
    audit; the coherency term of the first frame is zero.
    """

    picks: tuple[ScoredBox, ...]
    objective: float
    per_frame_scores: tuple[tuple[float, float], ...]
    pick_indices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "picks", tuple(self.picks))
        object.__setattr__(
            self, "per_frame_scores", tuple(tuple(p) for p in self.per_frame_scores)
        )
        object.__setattr__(self, "pick_indices", tuple(self.pick_indices))
        frames = [b.frame for b in self.picks]
        if frames != sorted(set(frames)):
            raise ValueError("track picks must be strictly increasing in frame")


def coherency_score(prev: ScoredBox, next: ScoredBox, params: CoherencyParams) -> float:
    """Temporal-coherency score between detections in adjacent frames.

    Projects ``prev`` forward one frame under the motion model and returns the
    negative (squared) Euclidean distance between the projected center and the
    center of ``next``.
    """
    if next.frame != prev.frame + 1:
        raise ValueError(
            f"coherency requires adjacent frames, got {prev.frame} -> {next.frame}"
        )
    proj = forward_project(prev, params.motion)
    dx = proj.cx - next.cx
    dy = proj.cy - next.cy
    d2 = dx * dx + dy * dy
    if params.form == "negative-squared-euclidean":
        return -d2
    return -math.sqrt(d2)


def _check_frames(frames: Sequence[FrameDetections]) -> None:
    if len(frames) == 0:
        raise ValueError("need at least one frame")
    for i, fd in enumerate(frames):
        if fd.frame != frames[0].frame + i:
            raise ValueError("frame indices must be contiguous")


def viterbi_track(frames: Sequence[FrameDetections], params: CoherencyParams) -> Track:
    """Optimal track over per-frame candidate sets.

    Maximizes the sum of per-frame detection scores plus adjacent-frame
    coherency scores, with backpointers. Ties break toward the smaller
    detection index at the latest differing frame. O(T * J^2).
    """
    _check_frames(frames)
    for fd in frames:
        if len(fd) == 0:
            raise EmptyFrameError(f"frame {fd.frame} has no detections")

    delta = [b.score for b in frames[0].boxes]
    back: list[list[int]] = []
    for t in range(1, len(frames)):
        prev_boxes = frames[t - 1].boxes
        cur_boxes = frames[t].boxes
        new_delta = []
        new_back = []
        for j, b in enumerate(cur_boxes):
            best_val = -math.inf
            best_prev = 0
            for jp, bp in enumerate(prev_boxes):
                val = coherency_score(bp, b, params) + delta[jp]
                if val > best_val:
                    best_val = val
                    best_prev = jp
            new_delta.append(b.score + best_val)
            new_back.append(best_prev)
        delta = new_delta
        back.append(new_back)

    last = max(range(len(delta)), key=lambda j: (delta[j], -j))
    objective = delta[last]
    picks_idx = [last]
    for t in range(len(frames) - 1, 0, -1):
        picks_idx.append(back[t - 1][picks_idx[-1]])
    picks_idx.reverse()

    picks = tuple(frames[t].boxes[j] for t, j in enumerate(picks_idx))
    return Track(
        picks=picks,
        objective=objective,
        per_frame_scores=_audit(picks, params),
        pick_indices=tuple(picks_idx),
    )


def _audit(picks: Sequence[ScoredBox], params: CoherencyParams) -> tuple[tuple[float, float], ...]:
    terms = []
    for t, b in enumerate(picks):
        g = coherency_score(picks[t - 1], b, params) if t > 0 else 0.0
        terms.append((b.score, g))
    return tuple(terms)


def viterbi_track_augmented(
    frames: Sequence[FrameDetections],
    params: CoherencyParams,
    project_missing: bool = True,
    projection_penalty: float = 0.0,
) -> Track:
    """Tracking with forward-projected detections filling in recall gaps.

    When ``project_missing`` is set, every frame after the first is augmented
    with forward-projected copies of the previous frame's (augmented)
    detections, flagged ``projected`` and carrying their source score less
    ``projection_penalty``. With it off this is exactly ``viterbi_track``.
    """
    _check_frames(frames)
    if not project_missing:
        return viterbi_track(frames, params)
    if len(frames[0]) == 0:
        raise EmptyFrameError(
            f"frame {frames[0].frame} has no detections and none to project"
        )
    augmented = [frames[0]]
    for t in range(1, len(frames)):
        carried = tuple(
            replace(
                forward_project(b, params.motion),
                projected=True,
                score=b.score - projection_penalty,
            )
            for b in augmented[t - 1].boxes
        )
        augmented.append(
            FrameDetections(frame=frames[t].frame, boxes=frames[t].boxes + carried)
        )
    return viterbi_track(augmented, params)


def greedy_track(frames: Sequence[FrameDetections]) -> list[ScoredBox]:
    """Per-frame argmax baseline: the best-scoring detection in each frame,
    ignoring coherency. The paper-level claim is that Viterbi tracking beats
    this at the objective level."""
    picks = []
    for fd in frames:
        if len(fd) == 0:
            raise EmptyFrameError(f"frame {fd.frame} has no detections")
        picks.append(max(fd.boxes, key=lambda b: b.score))
    return picks
