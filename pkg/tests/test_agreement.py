import math
from itertools import permutations

import pytest

from lattice_fusion import (
    AnnotationSet,
    ScoredBox,
    best_permutation,
    corpus_agreement,
    overlap,
)
from oracles import iou_raster, pooled_agreement


def box(frame=0, cx=0.0, cy=0.0, w=1.0, h=1.0):
    return ScoredBox(frame=frame, cx=cx, cy=cy, w=w, h=h, score=0.0)


def annotation(video, tracks):
    """tracks: {track_id: (label, {frame: box})}"""
    a = AnnotationSet(video=video)
    for track_id, (label, frames) in tracks.items():
        for frame, b in frames.items():
            a.add(track_id, label, frame, b)
    return a


class TestOverlap:
    def test_identical_boxes(self):
        b = box(cx=3, cy=4, w=2, h=5)
        assert overlap(b, b) == 1.0

    def test_disjoint_boxes(self):
        assert overlap(box(cx=0, cy=0), box(cx=10, cy=0)) == 0.0

    def test_half_shifted_unit_squares(self):
        a = box(cx=0.5, cy=0.5)
        b = box(cx=1.0, cy=0.5)
        got = overlap(a, b)
        assert got == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert got == pytest.approx(iou_raster(a, b), abs=2e-3)

    def test_symmetry_random(self, rng):
        for _ in range(30):
            a = box(cx=rng.uniform(0, 5), cy=rng.uniform(0, 5), w=rng.uniform(0.5, 3), h=rng.uniform(0.5, 3))
            b = box(cx=rng.uniform(0, 5), cy=rng.uniform(0, 5), w=rng.uniform(0.5, 3), h=rng.uniform(0.5, 3))
            assert overlap(a, b) == overlap(b, a)
            assert 0.0 <= overlap(a, b) <= 1.0

    def test_one_iff_identical(self, rng):
        a = box(cx=1, cy=1, w=2, h=2)
        b = box(cx=1.1, cy=1, w=2, h=2)
        assert overlap(a, b) < 1.0

    def test_matches_raster_oracle_random(self, rng):
        for _ in range(10):
            a = box(cx=rng.uniform(0, 4), cy=rng.uniform(0, 4), w=rng.uniform(1, 3), h=rng.uniform(1, 3))
            b = box(cx=rng.uniform(0, 4), cy=rng.uniform(0, 4), w=rng.uniform(1, 3), h=rng.uniform(1, 3))
            assert overlap(a, b) == pytest.approx(iou_raster(a, b), abs=5e-3)

    def test_zero_area_rejected(self):
        # zero-area boxes cannot be constructed; the guard still protects
        # overlap itself from degenerate inputs
        with pytest.raises(ValueError):
            ScoredBox(frame=0, cx=0, cy=0, w=0.0, h=1.0, score=0.0)


class TestBestPermutation:
    def test_single_track_each(self):
        u = annotation("v", {"a": ("person", {0: box(cx=1), 1: box(cx=2)})})
        v = annotation("v", {"x": ("person", {0: box(cx=1), 1: box(cx=2)})})
        res = best_permutation(u, v, "person")
        assert res.mapping == (("a", "x"),)
        assert res.mean == 1.0

    def test_picks_better_pairing_over_swap(self):
        # pairing (a-x, b-y) gives mean 0.9ish; the swap gives far less
        u = annotation(
            "v",
            {
                "a": ("person", {0: box(cx=0.0)}),
                "b": ("person", {0: box(cx=10.0)}),
            },
        )
        v = annotation(
            "v",
            {
                "x": ("person", {0: box(cx=0.1)}),
                "y": ("person", {0: box(cx=10.0)}),
            },
        )
        res = best_permutation(u, v, "person")
        assert dict(res.mapping) == {"a": "x", "b": "y"}
        direct = (overlap(box(cx=0.0), box(cx=0.1)) + 1.0) / 2.0
        assert res.mean == pytest.approx(direct, abs=1e-12)

    def test_disjoint_frames_contribute_nothing(self):
        u = annotation("v", {"a": ("person", {0: box()})})
        v = annotation("v", {"x": ("person", {5: box()})})
        res = best_permutation(u, v, "person")
        assert math.isnan(res.mean)
        assert res.overlaps == ()

    def test_cap_exceeded(self):
        tracks_u = {f"u{i}": ("person", {0: box(cx=i)}) for i in range(4)}
        tracks_v = {f"v{i}": ("person", {0: box(cx=i)}) for i in range(4)}
        u = annotation("v", tracks_u)
        v = annotation("v", tracks_v)
        with pytest.raises(ValueError, match="permutation space too large"):
            best_permutation(u, v, "person", perm_cap=3)

    def test_exhaustive_optimality_small(self, rng):
        # every permutation's frame-weighted mean, recomputed independently,
        # never beats the returned one (track counts up to 4)
        for trial in range(10):
            L = int(rng.integers(1, 5))
            frames = range(3)
            u = annotation(
                "v",
                {
                    f"u{i}": ("person", {t: box(frame=t, cx=rng.uniform(0, 6)) for t in frames})
                    for i in range(L)
                },
            )
            v = annotation(
                "v",
                {
                    f"v{i}": ("person", {t: box(frame=t, cx=rng.uniform(0, 6)) for t in frames})
                    for i in range(L)
                },
            )
            res = best_permutation(u, v, "person")
            tu = sorted(u.tracks)
            tv = sorted(v.tracks)
            for perm in permutations(range(L)):
                ovs = []
                for i in range(L):
                    for t in frames:
                        ovs.append(overlap(u.tracks[tu[i]][t], v.tracks[tv[perm[i]]][t]))
                assert res.mean >= sum(ovs) / len(ovs) - 1e-12

    def test_class_filter(self):
        u = annotation(
            "v",
            {
                "p": ("person", {0: box(cx=0)}),
                "car": ("vehicle", {0: box(cx=5)}),
            },
        )
        v = annotation(
            "v",
            {
                "q": ("human", {0: box(cx=0)}),
                "truck": ("vehicle", {0: box(cx=5)}),
            },
        )
        person = best_permutation(u, v, "person")
        assert dict(person.mapping) == {"p": "q"}
        nonperson = best_permutation(u, v, "nonperson")
        assert dict(nonperson.mapping) == {"car": "truck"}


class TestCorpusAgreement:
    def test_perfect_agreement(self):
        u = annotation("v", {"a": ("person", {t: box(frame=t) for t in range(4)})})
        v = annotation("v", {"x": ("person", {t: box(frame=t) for t in range(4)})})
        rep = corpus_agreement([(u, v)], "person")
        assert rep.mean == 1.0 and rep.std == 0.0 and rep.videos == 1

    def test_half_and_half(self):
        # overlaps {0, 1} equally: mean 1/2, population std 1/2
        u = annotation(
            "v",
            {"a": ("person", {0: box(cx=0), 1: box(cx=0)})},
        )
        v = annotation(
            "v",
            {"x": ("person", {0: box(cx=0), 1: box(cx=100)})},
        )
        rep = corpus_agreement([(u, v)], "person")
        assert rep.mean == 0.5 and rep.std == 0.5

    def test_three_video_pooled_oracle(self, rng):
        pairs = []
        for n in range(3):
            tracks_u = {}
            tracks_v = {}
            for i in range(int(rng.integers(1, 3))):
                frames = {
                    t: box(frame=t, cx=float(rng.uniform(0, 3)))
                    for t in range(int(rng.integers(1, 5)))
                }
                tracks_u[f"u{i}"] = ("person", frames)
                tracks_v[f"v{i}"] = (
                    "person",
                    {
                        t: box(frame=t, cx=b.cx + float(rng.uniform(-0.5, 0.5)))
                        for t, b in frames.items()
                    },
                )
            pairs.append((annotation(f"vid{n}", tracks_u), annotation(f"vid{n}", tracks_v)))
        rep = corpus_agreement(pairs, "person")
        mean, std = pooled_agreement([va.overlaps for va in rep.per_video])
        assert rep.mean == pytest.approx(mean, abs=1e-12)
        assert rep.std == pytest.approx(std, abs=1e-12)

    def test_no_shared_frames_error(self):
        u = annotation("v", {"a": ("person", {0: box()})})
        v = annotation("v", {"x": ("person", {9: box()})})
        with pytest.raises(ValueError, match="no shared frames"):
            corpus_agreement([(u, v)], "person")

    def test_empty_corpus_error(self):
        with pytest.raises(ValueError, match="at least one"):
            corpus_agreement([], "person")
