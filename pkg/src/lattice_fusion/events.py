"""HMM event recognition over tracks, and joint tracking + recognition.

Event models are HMMs whose states emit per-detection feature vectors
(normalized center position and log box size) under diagonal Gaussians.
Recognition on a fixed track uses the forward algorithm (likelihood) or
Viterbi (best state sequence). Joint inference runs Viterbi over the cross
product of per-frame detections and HMM states, so the event model can pull
the track toward event-consistent detections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FrameDetections, ScoredBox
from .tracking import CoherencyParams, EmptyFrameError, Track, coherency_score

__all__ = [
    "HmmModel",
    "JointResult",
    "CoherencyCounter",
    "emission_logprob",
    "forward_log_likelihood",
    "map_states",
    "joint_track_event",
    "joint_multi_model",
    "classify",
    "joint_decompose",
]

FEATURE_NAMES = ("cx_norm", "cy_norm", "log_w", "log_h")


@dataclass
class HmmModel:
    """An event model: K states with log-domain dynamics and diagonal-Gaussian
    emissions over detection features (cx/frame_w, cy/frame_h, log w, log h).

    ``log_trans[i, j]`` is the log probability of moving from state i to
    state j; rows are stochastic. ``log_init`` defaults to uniform when not
    given. ``frame_w``/``frame_h`` normalize positions so models are
    resolution-independent.
    """

    name: str
    log_trans: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_init: np.ndarray | None = None
    frame_w: float = 1.0
    frame_h: float = 1.0

    def __post_init__(self):
        self.log_trans = np.asarray(self.log_trans, dtype=float)
        if self.log_init is None:
            k = self.log_trans.shape[0]
            self.log_init = np.full(k, -math.log(k))
        self.log_init = np.asarray(self.log_init, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        k = self.K
        if self.log_trans.shape != (k, k):
            raise ValueError(f"transition matrix must be {k}x{k}")
        if self.means.shape != (k, len(FEATURE_NAMES)):
            raise ValueError(f"means must be {k}x{len(FEATURE_NAMES)}")
        if self.variances.shape != self.means.shape:
            raise ValueError("variances must match means shape")
        if np.any(self.variances <= 0):
            raise ValueError("emission variances must be positive")
        if abs(np.exp(self.log_init).sum() - 1.0) > 1e-6:
            raise ValueError("initial distribution must sum to 1")
        rows = np.exp(self.log_trans).sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-6):
            raise ValueError("transition rows must sum to 1")
        if self.frame_w <= 0 or self.frame_h <= 0:
            raise ValueError("frame dims must be positive")

    @property
    def K(self) -> int:
        return len(self.log_init)

    def features(self, box: ScoredBox) -> np.ndarray:
        return np.array(
            [
                box.cx / self.frame_w,
                box.cy / self.frame_h,
                math.log(box.w),
                math.log(box.h),
            ]
        )

    def emission_row(self, box: ScoredBox) -> np.ndarray:
        """Log emission density of one box under every state at once."""
        feats = self.features(box)
        return (
            -0.5 * np.log(2.0 * np.pi * self.variances)
            - (feats[None, :] - self.means) ** 2 / (2.0 * self.variances)
        ).sum(axis=1)


@dataclass(frozen=True)
class JointResult:
    """Jointly optimal track and state sequence for one event model."""

    track: Track
    states: tuple[int, ...]
    objective: float
    event: str


class CoherencyCounter:
    """Counts pairwise coherency evaluations, to demonstrate that the
    coherency tables are shared across event models."""

    def __init__(self):
        self.count = 0


def emission_logprob(model: HmmModel, k: int, box: ScoredBox) -> float:
    """Log probability of a detection's features under state k."""
    if not (0 <= k < model.K):
        raise ValueError(f"state {k} out of range for {model.K}-state model")
    return float(model.emission_row(box)[k])


def _boxes_of(track: Track | Sequence[ScoredBox]) -> Sequence[ScoredBox]:
    return track.picks if isinstance(track, Track) else track


def _logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values))
    if m == -math.inf:
        return m
    return m + math.log(float(np.exp(values - m).sum()))


def forward_log_likelihood(track: Track | Sequence[ScoredBox], model: HmmModel) -> float:
    """Log likelihood of the track under the model, summed over all state
    sequences by the forward recursion with log-sum-exp stabilization."""
    boxes = _boxes_of(track)
    if len(boxes) == 0:
        raise ValueError("track must have at least one frame")
    alpha = model.log_init + model.emission_row(boxes[0])
    for b in boxes[1:]:
        h = model.emission_row(b)
        alpha = np.array(
            [_logsumexp(alpha + model.log_trans[:, k]) + h[k] for k in range(model.K)]
        )
    return _logsumexp(alpha)


def map_states(track: Track | Sequence[ScoredBox], model: HmmModel) -> tuple[list[int], float]:
    """Most probable state sequence (Viterbi) and its log score. Ties break
    to the smallest state index."""
    boxes = _boxes_of(track)
    if len(boxes) == 0:
        raise ValueError("track must have at least one frame")
    delta = model.log_init + model.emission_row(boxes[0])
    back: list[np.ndarray] = []
    for b in boxes[1:]:
        h = model.emission_row(b)
        cand = delta[:, None] + model.log_trans  # [k_prev, k]
        best_prev = np.argmax(cand, axis=0)
        delta = cand[best_prev, np.arange(model.K)] + h
        back.append(best_prev)
    last = int(np.argmax(delta))
    score = float(delta[last])
    states = [last]
    for bp in reversed(back):
        states.append(int(bp[states[-1]]))
    states.reverse()
    return states, score


def _coherency_table(
    prev: FrameDetections,
    cur: FrameDetections,
    params: CoherencyParams,
    counter: CoherencyCounter | None,
) -> np.ndarray:
    table = np.empty((len(prev), len(cur)))
    for jp, bp in enumerate(prev.boxes):
        for j, b in enumerate(cur.boxes):
            table[jp, j] = coherency_score(bp, b, params)
            if counter is not None:
                counter.count += 1
    return table


def _joint_dp(
    frames: Sequence[FrameDetections],
    model: HmmModel,
    params: CoherencyParams,
    tables: Sequence[np.ndarray],
    factored: bool,
) -> JointResult:
    """Viterbi over the detections x states cross-product lattice.

    The factored form hoists the state maximization inside the detection
    maximization so each coherency entry is consulted once per detection
    pair; the unfactored form scans all four indices directly. Both group
    the floating-point sums identically, so they are bit-for-bit equal.
    """
    K = model.K
    T = len(frames)
    delta = np.empty((len(frames[0]), K))
    for j, b in enumerate(frames[0].boxes):
        delta[j] = model.log_init + model.emission_row(b) + b.score

    backs: list[np.ndarray] = []
    for t in range(1, T):
        g = tables[t - 1]
        Jp, J = g.shape
        h = np.stack([model.emission_row(b) for b in frames[t].boxes])
        new_delta = np.empty((J, K))
        back = np.empty((J, K, 2), dtype=np.intp)
        if factored:
            # inner[jp, k] = max over k_prev, with its argmax
            inner = delta[:, :, None] + model.log_trans[None, :, :]  # [jp, kp, k]
            inner_arg = np.argmax(inner, axis=1)  # [jp, k]
            inner_max = np.take_along_axis(inner, inner_arg[:, None, :], axis=1)[:, 0, :]
            for j in range(J):
                cand = g[:, j][:, None] + inner_max  # [jp, k]
                jp_best = np.argmax(cand, axis=0)
                new_delta[j] = cand[jp_best, np.arange(K)] + frames[t].boxes[j].score + h[j]
                back[j, :, 0] = jp_best
                back[j, :, 1] = inner_arg[jp_best, np.arange(K)]
        else:
            for j in range(J):
                for k in range(K):
                    best = -math.inf
                    best_jp = 0
                    best_kp = 0
                    for jp in range(Jp):
                        gv = g[jp, j]
                        for kp in range(K):
                            val = gv + (model.log_trans[kp, k] + delta[jp, kp])
                            if val > best:
                                best = val
                                best_jp = jp
                                best_kp = kp
                    new_delta[j, k] = best + frames[t].boxes[j].score + h[j, k]
                    back[j, k, 0] = best_jp
                    back[j, k, 1] = best_kp
        delta = new_delta
        backs.append(back)

    flat = int(np.argmax(delta))  # row-major: smallest (j, k) on ties
    j, k = np.unravel_index(flat, delta.shape)
    objective = float(delta[j, k])
    path = [(int(j), int(k))]
    for t in range(T - 1, 0, -1):
        jp, kp = backs[t - 1][path[-1][0], path[-1][1]]
        path.append((int(jp), int(kp)))
    path.reverse()

    picks = tuple(frames[t].boxes[j] for t, (j, _) in enumerate(path))
    states = tuple(k for _, k in path)
    f_sum = sum(b.score for b in picks)
    g_sum = sum(
        coherency_score(picks[t - 1], picks[t], params) for t in range(1, T)
    )
    track = Track(
        picks=picks,
        objective=f_sum + g_sum,
        per_frame_scores=tuple(
            (b.score, coherency_score(picks[t - 1], b, params) if t > 0 else 0.0)
            for t, b in enumerate(picks)
        ),
        pick_indices=tuple(j for j, _ in path),
    )
    return JointResult(track=track, states=states, objective=objective, event=model.name)


def _require_nonempty(frames: Sequence[FrameDetections]) -> None:
    if len(frames) == 0:
        raise ValueError("need at least one frame")
    for fd in frames:
        if len(fd) == 0:
            raise EmptyFrameError(f"frame {fd.frame} has no detections")


def joint_track_event(
    frames: Sequence[FrameDetections],
    model: HmmModel,
    params: CoherencyParams,
    factored: bool = True,
    counter: CoherencyCounter | None = None,
) -> JointResult:
    """Jointly optimal detection track and HMM state sequence.

    Maximizes detection + coherency + emission + transition (plus the initial
    state term) over all track/state combinations on the cross-product
    lattice. ``factored=False`` runs the direct four-index maximization;
    results are identical.
    """
    _require_nonempty(frames)
    tables = [
        _coherency_table(frames[t - 1], frames[t], params, counter)
        for t in range(1, len(frames))
    ]
    return _joint_dp(frames, model, params, tables, factored)


def joint_multi_model(
    frames: Sequence[FrameDetections],
    models: Sequence[HmmModel],
    params: CoherencyParams,
    counter: CoherencyCounter | None = None,
) -> list[JointResult]:
    """Joint inference against several event models, sharing the coherency
    tables across models (they do not depend on the model). Results are
    sorted by objective, best first; ties break by model name."""
    if len(models) == 0:
        raise ValueError("need at least one event model")
    _require_nonempty(frames)
    tables = [
        _coherency_table(frames[t - 1], frames[t], params, counter)
        for t in range(1, len(frames))
    ]
    results = [_joint_dp(frames, m, params, tables, factored=True) for m in models]
    results.sort(key=lambda r: (-r.objective, r.event))
    return results


def classify(
    subject: Track | Sequence[ScoredBox] | Sequence[FrameDetections],
    models: Sequence[HmmModel],
    mode: str = "ml-on-fixed-track",
    params: CoherencyParams | None = None,
) -> list[tuple[str, float]]:
    """Rank event models against a fixed track or raw per-frame detections.

    Modes: ``ml-on-fixed-track`` scores by forward log likelihood,
    ``map-on-fixed-track`` by the best single state sequence, ``joint`` by
    the joint track+event objective (requires detections, not a track).
    Returns (label, score) pairs sorted by score descending, ties by name.
    """
    if len(models) == 0:
        raise ValueError("need at least one event model")
    if mode == "ml-on-fixed-track":
        scored = [(m.name, forward_log_likelihood(subject, m)) for m in models]
    elif mode == "map-on-fixed-track":
        scored = [(m.name, map_states(subject, m)[1]) for m in models]
    elif mode == "joint":
        if params is None:
            params = CoherencyParams()
        results = joint_multi_model(subject, models, params)
        scored = [(r.event, r.objective) for r in results]
    else:
        raise ValueError(f"unknown classification mode {mode!r}")
    scored.sort(key=lambda ns: (-ns[1], ns[0]))
    return scored


def joint_decompose(
    result: JointResult,
    model: HmmModel,
    params: CoherencyParams,
) -> dict[str, float]:
    """Recompute the joint objective term by term from the chosen track and
    states, for auditing. Sums to the reported objective within tolerance."""
    picks = result.track.picks
    states = result.states
    f_sum = sum(b.score for b in picks)
    g_sum = sum(coherency_score(picks[t - 1], picks[t], params) for t in range(1, len(picks)))
    h_sum = sum(emission_logprob(model, k, b) for k, b in zip(states, picks))
    a_sum = sum(
        float(model.log_trans[states[t - 1], states[t]]) for t in range(1, len(states))
    )
    init = float(model.log_init[states[0]])
    return {
        "score_detection": f_sum,
        "score_coherency": g_sum,
        "score_emission": h_sum,
        "score_transition": a_sum,
        "score_init": init,
    }
