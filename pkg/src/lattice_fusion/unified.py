"""Fully joint inference: detection, tracking, and event recognition in one
Viterbi lattice whose per-frame nodes are (prism cell) x (HMM state).

For each previous state the spatial maximization over cells is one 3-D max
transform, so a frame costs O(XYS * K^2) with the cell factor linear; event
information can therefore pull both the track and the per-frame detection
choices, at full prism resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ScoredBox
from .events import HmmModel
from .gdt import Grid3D, transform_3d
from .pyramid import DetectionPrism, _check_prisms, prism_distance, realize_box

__all__ = [
    "UnifiedResult",
    "detect_track_recognize",
    "recognize_all",
    "unified_decompose",
]


@dataclass(frozen=True)
class UnifiedResult:
    """Jointly optimal prism cells and HMM states for one event model."""

    cells: tuple[tuple[int, int, int], ...]
    states: tuple[int, ...]
    objective: float
    boxes: tuple[ScoredBox, ...]
    event: str


def _raw_cell_features(prism: DetectionPrism) -> np.ndarray:
    """Unnormalized per-cell features (cx_px, cy_px, log w, log h), shape
    (X, Y, S, 4). Model-independent, so multi-model drivers share it."""
    X, Y, S = prism.dims
    feats = np.empty((X, Y, S, 4))
    xs = np.arange(X, dtype=float)
    ys = np.arange(Y, dtype=float)
    for s in range(S):
        f = prism.stride * prism.scale_map[s]
        feats[:, :, s, 0] = (f * xs)[:, None]
        feats[:, :, s, 1] = (f * ys)[None, :]
        feats[:, :, s, 2] = math.log(prism.box_w[s])
        feats[:, :, s, 3] = math.log(prism.box_h[s])
    return feats


def _emission_grid(model: HmmModel, raw_feats: np.ndarray) -> np.ndarray:
    """Log emission density of every cell under every state: (K, X, Y, S)."""
    feats = raw_feats.copy()
    feats[..., 0] /= model.frame_w
    feats[..., 1] /= model.frame_h
    diff = feats[None, ...] - model.means[:, None, None, None, :]
    terms = (
        -0.5 * np.log(2.0 * np.pi * model.variances[:, None, None, None, :])
        - diff**2 / (2.0 * model.variances[:, None, None, None, :])
    )
    return terms.sum(axis=-1)


def _unified_dp(
    prisms: Sequence[DetectionPrism],
    model: HmmModel,
    alpha: float,
    weights: tuple[float, float, float],
    emissions: np.ndarray,
) -> UnifiedResult:
    K = model.K
    T = len(prisms)
    dims = prisms[0].dims

    # delta[k] over cells; emissions are frame-independent because every
    # prism shares geometry.
    delta = emissions + model.log_init[:, None, None, None] + prisms[0].scores[None, ...]

    backs: list[tuple[np.ndarray, np.ndarray]] = []
    for t in range(1, T):
        spread = np.empty_like(delta)
        args = np.empty((K,) + dims + (3,), dtype=np.intp)
        for kp in range(K):
            transformed, argmax = transform_3d(Grid3D(values=delta[kp], weights=weights))
            spread[kp] = transformed.values
            args[kp] = argmax
        # cand[kp, k, cells] = a(prev -> cur) + spread[kp, cells]
        cand = model.log_trans[:, :, None, None, None] + spread[:, None, ...]
        kp_best = np.argmax(cand, axis=0)  # (K,) + dims
        best = np.take_along_axis(cand, kp_best[None, ...], axis=0)[0]
        delta = emissions + prisms[t].scores[None, ...] + best
        backs.append((kp_best, args))

    flat = int(np.argmax(delta))  # smallest (k, x, y, s) on ties
    k, x, y, s = np.unravel_index(flat, delta.shape)
    objective = float(delta[k, x, y, s])
    path = [(int(k), (int(x), int(y), int(s)))]
    for t in range(T - 1, 0, -1):
        kp_best, args = backs[t - 1]
        k, cell = path[-1]
        kp = int(kp_best[(k,) + cell])
        prev_cell = tuple(int(c) for c in args[(kp,) + cell])
        path.append((kp, prev_cell))
    path.reverse()

    cells = tuple(cell for _, cell in path)
    states = tuple(k for k, _ in path)
    boxes = tuple(realize_box(p, c) for p, c in zip(prisms, cells))
    return UnifiedResult(
        cells=cells, states=states, objective=objective, boxes=boxes, event=model.name
    )


def detect_track_recognize(
    prisms: Sequence[DetectionPrism],
    model: HmmModel,
    alpha: float,
) -> UnifiedResult:
    """Maximize detection + coherency + emission + transition scores jointly
    over per-frame prism cells and HMM states.

    Prisms must share dimensions and a uniform scale map (resample first).
    Emissions depend only on each cell's realized geometry, so they are
    evaluated once per (state, cell) and reused across frames.
    """
    factor = _check_prisms(prisms)
    weights = (factor * factor, factor * factor, float(alpha))
    emissions = _emission_grid(model, _raw_cell_features(prisms[0]))
    return _unified_dp(prisms, model, alpha, weights, emissions)


def recognize_all(
    prisms: Sequence[DetectionPrism],
    models: Sequence[HmmModel],
    alpha: float,
) -> list[UnifiedResult]:
    """Run the unified inference for each model and rank by objective.

    The model-independent inputs (per-cell realized features) are computed
    once and shared; per-model results equal independent runs."""
    if len(models) == 0:
        raise ValueError("need at least one event model")
    factor = _check_prisms(prisms)
    weights = (factor * factor, factor * factor, float(alpha))
    raw = _raw_cell_features(prisms[0])
    results = [
        _unified_dp(prisms, m, alpha, weights, _emission_grid(m, raw)) for m in models
    ]
    results.sort(key=lambda r: (-r.objective, r.event))
    return results


def unified_decompose(
    result: UnifiedResult,
    prisms: Sequence[DetectionPrism],
    model: HmmModel,
    alpha: float,
) -> dict[str, float]:
    """Term-by-term audit of a unified result, recomputed from its cells and
    states alone."""
    smap = prisms[0].scale_map
    egrid = _emission_grid(model, _raw_cell_features(prisms[0]))
    f_sum = sum(float(p.scores[c]) for p, c in zip(prisms, result.cells))
    g_sum = -sum(
        prism_distance(result.cells[t - 1], result.cells[t], smap, alpha)
        for t in range(1, len(result.cells))
    )
    h_sum = sum(float(egrid[(k,) + c]) for k, c in zip(result.states, result.cells))
    a_sum = sum(
        float(model.log_trans[result.states[t - 1], result.states[t]])
        for t in range(1, len(result.states))
    )
    init = float(model.log_init[result.states[0]])
    return {
        "score_detection": f_sum,
        "score_coherency": g_sum,
        "score_emission": h_sum,
        "score_transition": a_sum,
        "score_init": init,
    }
