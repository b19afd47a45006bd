"""Shared builders for random test instances."""

from __future__ import annotations

import numpy as np
import pytest

from lattice_fusion import DetectionPrism, FrameDetections, HmmModel, ScaleMap, ScoredBox


def rand_frames(rng, T, J, jmax=None, spread=50.0):
    """Random per-frame candidate sets; J boxes per frame, or 1..jmax each."""
    frames = []
    for t in range(T):
        count = J if jmax is None else int(rng.integers(1, jmax + 1))
        boxes = tuple(
            ScoredBox(
                frame=t,
                cx=float(rng.uniform(0, spread)),
                cy=float(rng.uniform(0, spread)),
                w=float(rng.uniform(2, 10)),
                h=float(rng.uniform(2, 10)),
                score=float(rng.normal(0, 2)),
            )
            for _ in range(count)
        )
        frames.append(FrameDetections(frame=t, boxes=boxes))
    return frames


def rand_model(rng, K, name="m", frame_w=1.0, frame_h=1.0):
    init = rng.dirichlet(np.ones(K))
    trans = rng.dirichlet(np.ones(K), size=K)
    return HmmModel(
        name=name,
        log_init=np.log(init),
        log_trans=np.log(trans),
        means=rng.normal(0.5, 1.0, (K, 4)),
        variances=rng.uniform(0.1, 3.0, (K, 4)),
        frame_w=frame_w,
        frame_h=frame_h,
    )


def uniform_model(name="uniform"):
    """K=1 model whose emission is numerically constant across boxes."""
    return HmmModel(
        name=name,
        log_init=np.zeros(1),
        log_trans=np.zeros((1, 1)),
        means=np.zeros((1, 4)),
        variances=np.full((1, 4), 1e30),
    )


def rand_prisms(rng, T, X, Y, S, alpha=1.0, factors=None, stride=1.0):
    smap = ScaleMap(factors=factors if factors is not None else (1.0,) * S)
    return [
        DetectionPrism(
            frame=t,
            scores=rng.normal(0, 3, (X, Y, S)),
            scale_map=smap,
            alpha=alpha,
            stride=stride,
        )
        for t in range(T)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
