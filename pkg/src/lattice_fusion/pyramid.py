"""Simultaneous detection and tracking over dense per-frame score prisms.

A prism holds a detection score for every (x, y, scale) cell of one frame.
Tracking treats every cell as a candidate detection; the per-frame inner
maximization is a 3-D max transform, so the whole pass is linear in the cell
count instead of quadratic. A reference quadratic engine is provided for
benchmarking and cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ScoredBox
from .gdt import Grid3D, transform_3d

__all__ = [
    "ScaleMap",
    "DetectionPrism",
    "PrismTrack",
    "prism_distance",
    "resample_to_reference",
    "track_prisms",
    "track_prisms_quadratic",
    "realize_box",
]


@dataclass(frozen=True)
class ScaleMap:
    """Per-level factors mapping level coordinates to base-grid coordinates."""

    factors: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(float(f) for f in self.factors))
        if len(self.factors) == 0:
            raise ValueError("scale map needs at least one level")
        for f in self.factors:
            if not (math.isfinite(f) and f > 0):
                raise ValueError(f"scale factors must be positive and finite, got {f}")

    def __len__(self) -> int:
        return len(self.factors)

    def __getitem__(self, s: int) -> float:
        return self.factors[s]

    @property
    def uniform_factor(self) -> float | None:
        """The common factor if all levels share one, else None."""
        first = self.factors[0]
        return first if all(f == first for f in self.factors) else None


@dataclass
class DetectionPrism:
    """Dense (X, Y, S) grid of detection scores for one frame.

    Cell (x, y, s) has base-grid position (factor(s)*x, factor(s)*y); the
    ``stride`` converts base-grid units to frame pixels when realizing boxes.
    ``box_w``/``box_h`` give the realized detection size per level, in pixels;
    resampling preserves them.
    """

    frame: int
    scores: np.ndarray
    scale_map: ScaleMap
    alpha: float
    stride: float = 1.0
    box_w: tuple[float, ...] = ()
    box_h: tuple[float, ...] = ()

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 3:
            raise ValueError("prism scores must be a 3-D (X, Y, S) array")
        if self.scores.shape[2] != len(self.scale_map):
            raise ValueError(
                f"prism S dimension {self.scores.shape[2]} does not match "
                f"scale map length {len(self.scale_map)}"
            )
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError("alpha must be finite and >= 0")
        if self.stride <= 0:
            raise ValueError("stride must be positive")
        if not self.box_w:
            self.box_w = tuple(self.stride * f for f in self.scale_map.factors)
        if not self.box_h:
            self.box_h = tuple(self.stride * f for f in self.scale_map.factors)
        if len(self.box_w) != len(self.scale_map) or len(self.box_h) != len(self.scale_map):
            raise ValueError("per-level box sizes must match scale map length")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.scores.shape


@dataclass(frozen=True)
class PrismTrack:
    """One prism cell per frame, with the realized boxes and total objective."""

    cells: tuple[tuple[int, int, int], ...]
    objective: float
    boxes: tuple[ScoredBox, ...]


def prism_distance(
    a: tuple[int, int, int],
    b: tuple[int, int, int],
    maps: ScaleMap,
    alpha: float,
) -> float:
    """Scaled squared Euclidean distance between two prism cells.

    Position terms compare base-grid coordinates (level coordinates scaled by
    the per-level factor); the scale term compares level indices weighted by
    alpha.
    """
    xa, ya, sa = a
    xb, yb, sb = b
    fa = maps[sa]
    fb = maps[sb]
    dx = fa * xa - fb * xb
    dy = fa * ya - fb * yb
    ds = sa - sb
    return dx * dx + dy * dy + alpha * ds * ds


def realize_box(prism: DetectionPrism, cell: tuple[int, int, int]) -> ScoredBox:
    """Concrete detection box for a prism cell, in frame pixels."""
    x, y, s = cell
    f = prism.scale_map[s]
    return ScoredBox(
        frame=prism.frame,
        cx=prism.stride * f * x,
        cy=prism.stride * f * y,
        w=prism.box_w[s],
        h=prism.box_h[s],
        score=float(prism.scores[x, y, s]),
    )


def resample_to_reference(prism: DetectionPrism, reference_stride: float) -> DetectionPrism:
    """Resample every scale level onto one common pixel grid.

    Output cell x corresponds to pixel x * reference_stride at every level, so
    the cross-scale position terms of the distance become separable per axis.
    Scores are nearest-neighbor sampled within each level; the output scale
    map is all ones relative to the reference grid.
    """
    if reference_stride <= 0:
        raise ValueError("reference stride must be positive")
    X, Y, S = prism.dims
    # Base-grid extent of the reference grid, covering every level's span.
    span_x = max(prism.scale_map[s] * (X - 1) for s in range(S))
    span_y = max(prism.scale_map[s] * (Y - 1) for s in range(S))
    unit = reference_stride / prism.stride  # reference cell size in base units
    Xr = int(math.floor(span_x / unit)) + 1
    Yr = int(math.floor(span_y / unit)) + 1

    out = np.empty((Xr, Yr, S), dtype=float)
    xr = np.arange(Xr, dtype=float)
    yr = np.arange(Yr, dtype=float)
    for s in range(S):
        f = prism.scale_map[s]
        xi = np.clip(np.rint(xr * unit / f).astype(np.intp), 0, X - 1)
        yi = np.clip(np.rint(yr * unit / f).astype(np.intp), 0, Y - 1)
        out[:, :, s] = prism.scores[xi[:, None], yi[None, :], s]
    return DetectionPrism(
        frame=prism.frame,
        scores=out,
        scale_map=ScaleMap(factors=(1.0,) * S),
        alpha=prism.alpha,
        stride=reference_stride,
        box_w=prism.box_w,
        box_h=prism.box_h,
    )


def _check_prisms(prisms: Sequence[DetectionPrism]) -> float:
    if len(prisms) == 0:
        raise ValueError("need at least one prism")
    dims = prisms[0].dims
    smap = prisms[0].scale_map
    for i, p in enumerate(prisms):
        if p.dims != dims:
            raise ValueError(f"prism {i} dims {p.dims} do not match {dims}")
        if p.scale_map.factors != smap.factors:
            raise ValueError(f"prism {i} scale map differs; resample first")
        if p.frame != prisms[0].frame + i:
            raise ValueError("prism frames must be contiguous")
    factor = smap.uniform_factor
    if factor is None:
        raise ValueError(
            "scale map must be uniform across levels for separable tracking; "
            "resample to a reference grid first"
        )
    return factor


def track_prisms(prisms: Sequence[DetectionPrism], alpha: float) -> PrismTrack:
    """Optimal cell-per-frame track through a sequence of prisms.

    The coherency between adjacent cells is the negative prism distance; each
    per-frame inner maximization runs as one 3-D max transform with quadratic
    weights (factor^2, factor^2, alpha), so the pass is O(T * X * Y * S).
    """
    factor = _check_prisms(prisms)
    weights = (factor * factor, factor * factor, float(alpha))

    delta = prisms[0].scores
    backs: list[np.ndarray] = []
    for t in range(1, len(prisms)):
        transformed, argmax = transform_3d(Grid3D(values=delta, weights=weights))
        delta = prisms[t].scores + transformed.values
        backs.append(argmax)

    flat = int(np.argmax(delta))  # first occurrence: smallest linear index
    cell = np.unravel_index(flat, delta.shape)
    objective = float(delta[cell])
    cells = [tuple(int(c) for c in cell)]
    for t in range(len(prisms) - 1, 0, -1):
        cell = tuple(int(c) for c in backs[t - 1][cells[-1]])
        cells.append(cell)
    cells.reverse()

    boxes = tuple(realize_box(p, c) for p, c in zip(prisms, cells))
    return PrismTrack(cells=tuple(cells), objective=objective, boxes=boxes)


def track_prisms_quadratic(
    prisms: Sequence[DetectionPrism],
    alpha: float,
    chunk: int = 256,
) -> PrismTrack:
    """Reference engine evaluating every cell pair: O(T * (XYS)^2).

    Exists to benchmark the linear engine against and to cross-check its
    objectives; handles non-uniform scale maps since it never needs the
    distance to be separable. The pairwise term expands to a rank-3 product,
    so each transition is a chunked matmul plus an argmax scan.
    """
    if len(prisms) == 0:
        raise ValueError("need at least one prism")
    dims = prisms[0].dims
    for i, p in enumerate(prisms):
        if p.dims != dims:
            raise ValueError(f"prism {i} dims {p.dims} do not match {dims}")
    X, Y, S = dims
    n = X * Y * S
    smap = prisms[0].scale_map
    xs, ys, ss = np.unravel_index(np.arange(n), dims)
    factors = np.array([smap[s] for s in range(S)])[ss]
    bx = factors * xs
    by = factors * ys
    sl = ss.astype(float)

    # -(d(p,q)) = -|q|^2 - |p|^2 + 2 q.p with the scale axis carrying alpha.
    sq = bx * bx + by * by + alpha * sl * sl
    q_feats = np.stack([bx, by, sl], axis=1)
    p_feats = np.stack([2.0 * bx, 2.0 * by, 2.0 * alpha * sl], axis=1)

    delta = prisms[0].scores.reshape(-1).copy()
    backs: list[np.ndarray] = []
    buf = np.empty((min(chunk, n), n))
    for t in range(1, len(prisms)):
        scores_t = prisms[t].scores.reshape(-1)
        base = delta - sq  # per-source part of every candidate
        new_delta = np.empty(n)
        back = np.empty(n, dtype=np.intp)
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            m = buf[: hi - lo]
            np.dot(q_feats[lo:hi], p_feats.T, out=m)
            m += base[None, :]
            back[lo:hi] = np.argmax(m, axis=1)
            new_delta[lo:hi] = (
                m[np.arange(hi - lo), back[lo:hi]] - sq[lo:hi] + scores_t[lo:hi]
            )
        delta = new_delta
        backs.append(back)

    last = int(np.argmax(delta))
    objective = float(delta[last])
    flat_cells = [last]
    for t in range(len(prisms) - 1, 0, -1):
        flat_cells.append(int(backs[t - 1][flat_cells[-1]]))
    flat_cells.reverse()
    cells = tuple(tuple(int(c) for c in np.unravel_index(f, dims)) for f in flat_cells)
    boxes = tuple(realize_box(p, c) for p, c in zip(prisms, cells))
    return PrismTrack(cells=cells, objective=objective, boxes=boxes)
