"""Generalized distance transform in the max domain.

Computes, for every grid point q, the maximum over all points p of
``values[p] - w * (p - q)**2`` in linear time via the lower envelope of
parabolas (run in min form on negated values). The 3-D transform applies the
1-D pass independently per axis, which is exact because the quadratic penalty
is separable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NEG_SENTINEL",
    "Grid1D",
    "Grid3D",
    "envelope_1d",
    "transform_3d",
]

# Large negative finite stand-in for impossible cells; keeps parabola
# intersection arithmetic finite where -inf would poison it.
NEG_SENTINEL = -1e30


@dataclass
class Grid1D:
    """1-D array of log-domain values with a quadratic penalty weight."""

    values: np.ndarray
    weight: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("Grid1D requires a non-empty 1-D value array")
        if self.weight < 0:
            raise ValueError("quadratic weight must be >= 0")


@dataclass
class Grid3D:
    """Dense (X, Y, S) array of log-domain values with per-axis weights."""

    values: np.ndarray
    weights: tuple[float, float, float]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.size == 0:
            raise ValueError("Grid3D requires a non-empty 3-D value array")
        if any(w < 0 for w in self.weights):
            raise ValueError("quadratic weights must be >= 0")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape


def _envelope_pass(values: list[float], w: float) -> tuple[list[float], list[int]]:
    """Max-envelope of one row. Ties in the maximizer go to the smallest index."""
    n = len(values)
    if w == 0.0:
        best = 0
        for p in range(1, n):
            if values[p] > values[best]:
                best = p
        return [values[best]] * n, [best] * n

    # Min-form on negated values: cost[p] = -values[p], parabola
    # c_p(q) = w*(q-p)^2 + cost[p]; track the lower envelope.
    cost = [-v for v in values]
    v = [0] * n          # vertex indices of envelope parabolas
    z = [0.0] * (n + 1)  # active ranges: parabola v[k] covers [z[k], z[k+1])
    z[0] = -np.inf
    z[1] = np.inf
    k = 0
    for q in range(1, n):
        cq = cost[q] + w * q * q
        while True:
            p = v[k]
            s = (cq - (cost[p] + w * p * p)) / (2.0 * w * (q - p))
            if s > z[k]:
                break
            k -= 1
            if k < 0:
                # Division overflow with subnormal weights can drive the
                # intersection to -inf: the new parabola dominates everywhere.
                break
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
        else:
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf

    out = [0.0] * n
    arg = [0] * n
    k = 0
    for q in range(n):
        # Strict comparison keeps the smaller-vertex parabola on exact ties.
        while z[k + 1] < q:
            k += 1
        p = v[k]
        out[q] = values[p] - w * (q - p) * (q - p)
        arg[q] = p
    return out, arg


def envelope_1d(grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """1-D max transform: ``out[q] = max_p values[p] - w*(p-q)**2``.

    Returns (transformed values, argmax indices). Runs in O(n).
    """
    out, arg = _envelope_pass(list(grid.values), float(grid.weight))
    return np.asarray(out, dtype=float), np.asarray(arg, dtype=np.intp)


def _axis_pass(values: np.ndarray, axis: int, w: float) -> tuple[np.ndarray, np.ndarray]:
    """Apply the 1-D envelope along one axis of a 3-D array.

    Length-1/2 rows and weightless rows take vectorized shortcuts that are
    bit-identical to the envelope loop, including its smallest-index ties;
    short rows dominate the scale axis, where the loop's call overhead would
    otherwise swamp the linear-time work.
    """
    moved = np.moveaxis(values, axis, -1)
    lead_shape = moved.shape[:-1]
    n = moved.shape[-1]
    rows = np.ascontiguousarray(moved).reshape(-1, n)
    if w == 0.0:
        arg_row = np.argmax(rows, axis=1)
        out_row = rows[np.arange(rows.shape[0]), arg_row]
        out = np.broadcast_to(out_row[:, None], rows.shape).copy()
        arg = np.broadcast_to(arg_row[:, None], rows.shape).astype(np.intp)
    elif n == 1:
        out = rows.copy()
        arg = np.zeros(rows.shape, dtype=np.intp)
    elif n == 2:
        v0 = rows[:, 0]
        v1 = rows[:, 1]
        out = np.empty_like(rows)
        arg = np.empty(rows.shape, dtype=np.intp)
        take1 = v1 - w > v0  # ties keep index 0
        out[:, 0] = np.where(take1, v1 - w, v0)
        arg[:, 0] = take1
        take0 = v0 - w >= v1  # ties keep index 0
        out[:, 1] = np.where(take0, v0 - w, v1)
        arg[:, 1] = np.where(take0, 0, 1)
    else:
        out = np.empty_like(rows)
        arg = np.empty(rows.shape, dtype=np.intp)
        for i, row in enumerate(rows.tolist()):
            o, a = _envelope_pass(row, w)
            out[i] = o
            arg[i] = a
    out = np.moveaxis(out.reshape(*lead_shape, n), -1, axis)
    arg = np.moveaxis(arg.reshape(*lead_shape, n), -1, axis)
    return out, arg


_AXIS_INDEX = {"x": 0, "y": 1, "s": 2}


def transform_3d(
    grid: Grid3D,
    axis_order: tuple[str, str, str] = ("s", "y", "x"),
) -> tuple[Grid3D, np.ndarray]:
    """3-D max transform via three sequential 1-D passes.

    ``out[q] = max_p values[p] - wx*dx^2 - wy*dy^2 - ws*ds^2`` for every
    cell q, in O(X*Y*S). Returns the transformed grid and an integer array of
    shape (X, Y, S, 3) giving the maximizing source cell for each query cell;
    per-pass ties resolve to the smallest index.
    """
    values = grid.values
    passes: list[tuple[int, np.ndarray]] = []
    for name in axis_order:
        axis = _AXIS_INDEX[name]
        values, arg = _axis_pass(values, axis, float(grid.weights[axis]))
        passes.append((axis, arg))

    shape = grid.values.shape
    coords = np.indices(shape)  # (3, X, Y, S); coords[a] = index along axis a
    source = [coords[0].copy(), coords[1].copy(), coords[2].copy()]
    # Walk passes last-to-first: each pass's argmax rewrites its own axis
    # coordinate, looked up at the source cell found so far.
    for axis, arg in reversed(passes):
        source[axis] = arg[source[0], source[1], source[2]]
    argmax = np.stack(source, axis=-1)
    return Grid3D(values=values, weights=grid.weights), argmax
