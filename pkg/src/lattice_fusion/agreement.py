"""Track-agreement scoring between two annotation sources.

For each shared video, the tracks of one annotator are matched to the other's
by the permutation maximizing frame-weighted mean box overlap (intersection
over union); overlaps are then pooled over all shared frames, tracks, and
videos for the corpus mean and standard deviation, every overlap weighted
equally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

from .core import ScoredBox

__all__ = [
    "AnnotationSet",
    "VideoAgreement",
    "AgreementReport",
    "person_class",
    "overlap",
    "best_permutation",
    "corpus_agreement",
]

PERSON_LABELS = ("person", "human")


def person_class(label: str) -> str:
    """Collapse free-form track labels into person / nonperson classes."""
    return "person" if label.lower() in PERSON_LABELS else "nonperson"


@dataclass
class AnnotationSet:
    """One annotator's tracks for one video: per-track class label and a
    frame -> box map (at most one box per track per frame)."""

    video: str
    labels: dict[str, str] = field(default_factory=dict)  # track id -> raw label
    tracks: dict[str, dict[int, ScoredBox]] = field(default_factory=dict)

    def add(self, track_id: str, label: str, frame: int, box: ScoredBox) -> None:
        if track_id in self.tracks and frame in self.tracks[track_id]:
            raise ValueError(
                f"duplicate annotation for video {self.video!r} track {track_id!r} "
                f"frame {frame}"
            )
        self.labels.setdefault(track_id, label)
        self.tracks.setdefault(track_id, {})[frame] = box

    def tracks_of_class(self, cls: str) -> list[str]:
        return sorted(t for t, lab in self.labels.items() if person_class(lab) == cls)


@dataclass(frozen=True)
class VideoAgreement:
    """Best permutation mapping for one video and the overlaps under it."""

    video: str
    mapping: tuple[tuple[str, str], ...]  # (track in u, track in v) pairs
    mean: float  # nan when no shared frames
    overlaps: tuple[float, ...]


@dataclass(frozen=True)
class AgreementReport:
    """Corpus-level agreement: pooled mean/std over every per-frame overlap."""

    per_video: tuple[VideoAgreement, ...]
    mean: float
    std: float
    videos: int


def overlap(a: ScoredBox, b: ScoredBox) -> float:
    """Intersection area over union area of two axis-aligned boxes."""
    if a.area == 0 or b.area == 0:
        raise ValueError("overlap is undefined for zero-area boxes")
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def _mapping_overlaps(
    u: AnnotationSet,
    v: AnnotationSet,
    pairs: list[tuple[str, str]],
) -> list[float]:
    out = []
    for tu, tv in pairs:
        fu = u.tracks[tu]
        fv = v.tracks[tv]
        for frame in sorted(fu.keys() & fv.keys()):
            out.append(overlap(fu[frame], fv[frame]))
    return out


def best_permutation(
    u: AnnotationSet,
    v: AnnotationSet,
    cls: str = "person",
    perm_cap: int = 8,
) -> VideoAgreement:
    """Best track assignment between two annotations of one video.

    Compares min(l_u, l_v) tracks of the class, exhaustively over all
    permutation mappings, scoring each by the mean overlap across shared
    frames (every overlap weighted equally). Tracks with no shared frames
    contribute no terms; a video with no shared frames anywhere yields a NaN
    mean and an empty overlap pool.
    """
    if u.video != v.video:
        raise ValueError(f"annotations cover different videos: {u.video!r} vs {v.video!r}")
    tu = u.tracks_of_class(cls)
    tv = v.tracks_of_class(cls)
    L = min(len(tu), len(tv))
    if L > perm_cap:
        raise ValueError(
            f"permutation space too large: {L} tracks exceeds cap {perm_cap}"
        )
    if L == 0:
        return VideoAgreement(video=u.video, mapping=(), mean=math.nan, overlaps=())

    tu = tu[:L]
    tv = tv[:L]
    best: tuple[float, list[tuple[str, str]], list[float]] | None = None
    for perm in permutations(range(L)):
        pairs = [(tu[i], tv[perm[i]]) for i in range(L)]
        ovs = _mapping_overlaps(u, v, pairs)
        score = sum(ovs) / len(ovs) if ovs else -math.inf
        if best is None or score > best[0]:
            best = (score, pairs, ovs)
    score, pairs, ovs = best
    mean = score if ovs else math.nan
    return VideoAgreement(
        video=u.video, mapping=tuple(pairs), mean=mean, overlaps=tuple(ovs)
    )


def corpus_agreement(
    pairs: list[tuple[AnnotationSet, AnnotationSet]],
    cls: str = "person",
    perm_cap: int = 8,
) -> AgreementReport:
    """Pooled agreement over a corpus of shared videos.

    The mean and (population) standard deviation are computed over the
    multiset of all per-frame overlaps across all videos and tracks, each
    under its video's best permutation mapping."""
    if len(pairs) == 0:
        raise ValueError("need at least one shared video")
    per_video = []
    pooled: list[float] = []
    for u, v in pairs:
        va = best_permutation(u, v, cls=cls, perm_cap=perm_cap)
        per_video.append(va)
        pooled.extend(va.overlaps)
    if not pooled:
        raise ValueError("no shared frames anywhere in the corpus")
    n = len(pooled)
    mean = sum(pooled) / n
    std = math.sqrt(sum((o - mean) ** 2 for o in pooled) / n)
    return AgreementReport(
        per_video=tuple(per_video), mean=mean, std=std, videos=len(pairs)
    )
