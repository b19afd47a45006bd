"""Scaling benchmark: quadratic all-pairs tracking vs. the linear transform
engine over a doubling ladder of prism cell counts.

Adjacent-size runtime ratios separate the two regimes: a linear engine
doubles (ratio near 2) while the quadratic one quadruples (ratio near 4) once
the pairwise term dominates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .pyramid import DetectionPrism, ScaleMap, track_prisms, track_prisms_quadratic

__all__ = [
    "BenchRow",
    "BenchReport",
    "ladder_dims",
    "make_bench_prisms",
    "run_bench",
]


@dataclass(frozen=True)
class BenchRow:
    cells: int
    dims: tuple[int, int, int]
    t_quadratic: float
    t_linear: float
    objectives_equal: bool


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    frames: int
    alpha: float
    seed: int

    def ratios(self, attr: str) -> list[float]:
        times = [getattr(r, attr) for r in self.rows]
        return [times[i + 1] / times[i] for i in range(len(times) - 1)]

    def table(self) -> str:
        """Aligned text table with adjacent-size runtime ratios."""
        header = (
            f"{'cells':>8} {'dims':>12} {'t_quadratic':>12} {'t_linear':>10} "
            f"{'ratio_quad':>10} {'ratio_lin':>10} {'obj_equal':>9}"
        )
        lines = [header]
        rq = self.ratios("t_quadratic")
        rl = self.ratios("t_linear")
        for i, r in enumerate(self.rows):
            dims = "x".join(str(d) for d in r.dims)
            ratio_q = f"{rq[i - 1]:.2f}" if i > 0 else "n/a"
            ratio_l = f"{rl[i - 1]:.2f}" if i > 0 else "n/a"
            lines.append(
                f"{r.cells:>8} {dims:>12} {r.t_quadratic:>12.6f} {r.t_linear:>10.6f} "
                f"{ratio_q:>10} {ratio_l:>10} {'yes' if r.objectives_equal else 'NO':>9}"
            )
        return "\n".join(lines)

    def plot_rows(self) -> list[tuple[int, float, float]]:
        return [(r.cells, r.t_quadratic, r.t_linear) for r in self.rows]


def ladder_dims(cells: int, levels: int = 2) -> tuple[int, int, int]:
    """Factor a cell count into near-square (X, Y, levels) dims."""
    if cells % levels != 0:
        raise ValueError(f"cell count {cells} not divisible by {levels} levels")
    xy = cells // levels
    for d in range(int(math.isqrt(xy)), 0, -1):
        if xy % d == 0:
            return d, xy // d, levels
    raise AssertionError("unreachable")


def make_bench_prisms(
    cells: int, frames: int, seed: int, alpha: float, levels: int = 2
) -> list[DetectionPrism]:
    X, Y, S = ladder_dims(cells, levels)
    rng = np.random.Generator(np.random.PCG64(seed))
    return [
        DetectionPrism(
            frame=t,
            scores=rng.normal(0.0, 1.0, (X, Y, S)),
            scale_map=ScaleMap(factors=(1.0,) * S),
            alpha=alpha,
        )
        for t in range(frames)
    ]


def _time_min(fn: Callable[[], object], repeats: int) -> tuple[float, object]:
    best = math.inf
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def run_bench(
    ladder: Sequence[int],
    frames: int = 4,
    seed: int = 0,
    alpha: float = 1.0,
    repeats: int = 3,
) -> BenchReport:
    """Time both engines on identical random prisms at each ladder size.

    The reported time per size is the minimum over ``repeats`` runs, which
    suppresses one-off scheduler and allocator stalls; BLAS thread pools are
    pinned to one thread while timing so ratios reflect arithmetic rather
    than thread scheduling. Both engines' objectives are cross-checked at
    every size."""
    rows = []
    with threadpool_limits(limits=1):
        for i, cells in enumerate(ladder):
            prisms = make_bench_prisms(cells, frames, seed + i, alpha)
            t_lin, lin = _time_min(lambda: track_prisms(prisms, alpha), repeats)
            t_quad, quad = _time_min(
                lambda: track_prisms_quadratic(prisms, alpha), repeats
            )
            rows.append(
                BenchRow(
                    cells=cells,
                    dims=prisms[0].dims,
                    t_quadratic=t_quad,
                    t_linear=t_lin,
                    objectives_equal=abs(lin.objective - quad.objective) <= 1e-9,
                )
            )
    return BenchReport(rows=tuple(rows), frames=frames, alpha=alpha, seed=seed)
