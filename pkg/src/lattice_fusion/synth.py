"""Synthetic scenarios: ground-truth trajectories with noisy detections,
score prisms, and fixture event models.

Stands in for real video: detectors over-generate (false positives, dropped
true boxes), prisms carry a score bump on the true cell plus distractor bumps
and a noise floor. Everything is reproducible from the scenario seed via a
fixed, platform-independent generator (PCG64).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .core import FrameDetections, ScoredBox
from .events import HmmModel
from .pyramid import DetectionPrism, ScaleMap

__all__ = [
    "Scenario",
    "gen_detections",
    "gen_prisms",
    "fixture_models",
]


@dataclass(frozen=True)
class Scenario:
    """Full specification of one synthetic sequence."""

    seed: int = 0
    frames: int = 20
    width: float = 64.0
    height: float = 64.0
    # ground-truth trajectory: linear motion of a fixed-size box
    start_cx: float = 16.0
    start_cy: float = 32.0
    vx: float = 1.5
    vy: float = 0.0
    box_w: float = 16.0
    box_h: float = 16.0
    # detection noise
    dropout: float = 0.0
    fp_rate: float = 1.0
    jitter: float = 1.0
    true_score_mean: float = 2.0
    true_score_std: float = 0.5
    fp_score_mean: float = 0.0
    fp_score_std: float = 0.5
    # prism generation
    stride: float = 4.0
    levels: int = 2
    true_level: int = 0
    bump_width: float = 1.0
    bump_scale_width: float = 1.0
    true_amp: float = 3.0
    distractor_count: int = 2
    distractor_amp: float = 2.0
    drop_factor: float = 0.2
    noise_floor: float = 0.05
    level_size_step: float = 1.25

    def __post_init__(self):
        if not (0.0 <= self.dropout <= 1.0):
            raise ValueError("dropout must be in [0, 1]")
        if self.fp_rate < 0:
            raise ValueError("false-positive rate must be >= 0")
        if self.frames < 1:
            raise ValueError("need at least one frame")
        if self.levels < 1 or not (0 <= self.true_level < self.levels):
            raise ValueError("true level must index a valid prism level")

    def true_box(self, t: int) -> ScoredBox:
        return ScoredBox(
            frame=t,
            cx=self.start_cx + t * self.vx,
            cy=self.start_cy + t * self.vy,
            w=self.box_w,
            h=self.box_h,
            score=0.0,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(sc: Scenario) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(sc.seed))


def gen_detections(sc: Scenario) -> tuple[list[FrameDetections], list[ScoredBox]]:
    """Noisy per-frame detection sets plus the ground-truth boxes.

    Each frame emits the jittered true box with probability 1 - dropout
    (source 0) and a Poisson-distributed count of uniformly placed false
    positives (source 1), scored from a lower distribution.
    """
    rng = _rng(sc)
    frames = []
    truth = []
    for t in range(sc.frames):
        gt = sc.true_box(t)
        truth.append(gt)
        boxes = []
        if rng.random() >= sc.dropout:
            boxes.append(
                ScoredBox(
                    frame=t,
                    cx=gt.cx + rng.normal(0.0, sc.jitter),
                    cy=gt.cy + rng.normal(0.0, sc.jitter),
                    w=sc.box_w,
                    h=sc.box_h,
                    score=float(rng.normal(sc.true_score_mean, sc.true_score_std)),
                    source_id=0,
                )
            )
        for _ in range(int(rng.poisson(sc.fp_rate))):
            boxes.append(
                ScoredBox(
                    frame=t,
                    cx=float(rng.uniform(0.0, sc.width)),
                    cy=float(rng.uniform(0.0, sc.height)),
                    w=sc.box_w,
                    h=sc.box_h,
                    score=float(rng.normal(sc.fp_score_mean, sc.fp_score_std)),
                    source_id=1,
                )
            )
        frames.append(FrameDetections(frame=t, boxes=tuple(boxes)))
    return frames, truth


def _prism_dims(sc: Scenario) -> tuple[int, int, int]:
    X = int(round(sc.width / sc.stride)) + 1
    Y = int(round(sc.height / sc.stride)) + 1
    return X, Y, sc.levels


def true_cell(sc: Scenario, t: int) -> tuple[int, int, int]:
    """Prism cell closest to the ground-truth box at frame t."""
    X, Y, _ = _prism_dims(sc)
    gt = sc.true_box(t)
    x = min(max(int(round(gt.cx / sc.stride)), 0), X - 1)
    y = min(max(int(round(gt.cy / sc.stride)), 0), Y - 1)
    return x, y, sc.true_level


def gen_prisms(sc: Scenario) -> tuple[list[DetectionPrism], list[ScoredBox]]:
    """Per-frame score prisms plus the ground-truth boxes.

    Each prism carries a Gaussian score bump on the true cell (attenuated by
    ``drop_factor`` in dropout frames), ``distractor_count`` bumps at random
    cells, and an i.i.d. noise floor. Levels share a common grid (unit scale
    map), so no resampling is needed before tracking.
    """
    rng = _rng(sc)
    X, Y, S = _prism_dims(sc)
    xs = np.arange(X, dtype=float)[:, None, None]
    ys = np.arange(Y, dtype=float)[None, :, None]
    ss = np.arange(S, dtype=float)[None, None, :]

    def bump(cx: float, cy: float, cs: float, amp: float) -> np.ndarray:
        pos = ((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * sc.bump_width**2)
        lev = (ss - cs) ** 2 / (2.0 * sc.bump_scale_width**2)
        return amp * np.exp(-pos - lev)

    box_w = tuple(sc.box_w * sc.level_size_step ** (s - sc.true_level) for s in range(S))
    box_h = tuple(sc.box_h * sc.level_size_step ** (s - sc.true_level) for s in range(S))

    prisms = []
    truth = []
    for t in range(sc.frames):
        truth.append(sc.true_box(t))
        xt, yt, st = true_cell(sc, t)
        scores = (
            rng.normal(0.0, sc.noise_floor, (X, Y, S))
            if sc.noise_floor > 0
            else np.zeros((X, Y, S))
        )
        dropped = rng.random() < sc.dropout
        amp = sc.true_amp * (sc.drop_factor if dropped else 1.0)
        scores += bump(xt, yt, st, amp)
        for _ in range(sc.distractor_count):
            dx = int(rng.integers(0, X))
            dy = int(rng.integers(0, Y))
            ds = int(rng.integers(0, S))
            scores += bump(dx, dy, ds, sc.distractor_amp)
        prisms.append(
            DetectionPrism(
                frame=t,
                scores=scores,
                scale_map=ScaleMap(factors=(1.0,) * S),
                alpha=1.0,
                stride=sc.stride,
                box_w=box_w,
                box_h=box_h,
            )
        )
    return prisms, truth


def fixture_models(frame_w: float = 1.0, frame_h: float = 1.0) -> list[HmmModel]:
    """Hand-specified event models for tests and demos.

    Position means are in normalized frame coordinates; log-size variances
    are wide so box size is effectively uninformative. All rows are strictly
    positive so every score stays finite.
    """
    big = 25.0  # log-size variance: effectively ignore size
    mid_y = 0.5

    def means(cxs: list[float]) -> np.ndarray:
        return np.array([[cx, mid_y, 0.0, 0.0] for cx in cxs])

    def variances(k: int, pos: float) -> np.ndarray:
        return np.array([[pos, pos, big, big]] * k)

    stationary = HmmModel(
        name="stationary",
        log_init=np.log([0.5, 0.5]),
        log_trans=np.log([[0.95, 0.05], [0.05, 0.95]]),
        means=means([0.5, 0.5]),
        variances=variances(2, 0.01),
        frame_w=frame_w,
        frame_h=frame_h,
    )
    translate_right = HmmModel(
        name="translate-right",
        log_init=np.log([0.998, 0.001, 0.001]),
        log_trans=np.log(
            [
                [0.799, 0.200, 0.001],
                [0.001, 0.799, 0.200],
                [0.001, 0.001, 0.998],
            ]
        ),
        means=means([0.2, 0.5, 0.8]),
        variances=variances(3, 0.02),
        frame_w=frame_w,
        frame_h=frame_h,
    )
    approach_then_carry = HmmModel(
        name="approach-then-carry",
        log_init=np.log([0.899, 0.100, 0.001]),
        log_trans=np.log(
            [
                [0.850, 0.149, 0.001],
                [0.001, 0.850, 0.149],
                [0.001, 0.001, 0.998],
            ]
        ),
        means=means([0.15, 0.4, 0.65]),
        variances=variances(3, 0.03),
        frame_w=frame_w,
        frame_h=frame_h,
    )
    return [stationary, translate_right, approach_then_carry]
