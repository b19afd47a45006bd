"""Line-delimited file formats, one versioned header per format.

All floats are written with shortest round-trip precision, so write/read
cycles are bit-exact. Malformed inputs raise FormatError with a one-line
description.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .agreement import AnnotationSet
from .core import FrameDetections, ScoredBox
from .events import HmmModel
from .pyramid import DetectionPrism, ScaleMap
from .synth import Scenario
from .tracking import Track
from .unified import UnifiedResult

__all__ = [
    "FormatError",
    "DETECTIONS_HEADER",
    "TRACK_HEADER",
    "PRISM_HEADER",
    "HMM_HEADER",
    "ANNOT_HEADER",
    "UNIFIED_HEADER",
    "SCENARIO_HEADER",
    "write_detections",
    "read_detections",
    "write_track",
    "read_track",
    "write_prisms",
    "read_prisms",
    "write_models",
    "read_models",
    "write_annotations",
    "read_annotations",
    "write_unified",
    "read_unified",
    "write_scenario",
    "read_scenario",
    "write_plot_data",
]

DETECTIONS_HEADER = "#lattice-fusion/detections/v1"
TRACK_HEADER = "#lattice-fusion/track/v1"
PRISM_HEADER = "#lattice-fusion/prism/v1"
HMM_HEADER = "#lattice-fusion/hmm/v1"
ANNOT_HEADER = "#lattice-fusion/annot/v1"
UNIFIED_HEADER = "#lattice-fusion/unified/v1"
SCENARIO_HEADER = "#lattice-fusion/scenario/v1"


class FormatError(ValueError):
    """Input file does not conform to its declared format."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _check_header(line: str, expected: str, path: str) -> None:
    if line.strip() != expected:
        raise FormatError(f"{path}: expected header {expected!r}, got {line.strip()!r}")


def _data_lines(lines: list[str]) -> Iterable[tuple[int, list[str]]]:
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield i, line.split()


def _read_lines(path: str, expected_header: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    _check_header(lines[0], expected_header, path)
    return lines


def _parse_float(tok: str, path: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: bad number {tok!r}") from None
    return v


def _parse_int(tok: str, path: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: bad integer {tok!r}") from None


# -- detections ---------------------------------------------------------------

def write_detections(path: str, frames: Sequence[FrameDetections]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(DETECTIONS_HEADER + "\n")
        for fd in frames:
            for b in fd.boxes:
                fh.write(
                    f"{fd.frame} {_fmt(b.cx)} {_fmt(b.cy)} {_fmt(b.w)} {_fmt(b.h)} "
                    f"{_fmt(b.score)} {b.source_id}\n"
                )


def read_detections(path: str) -> list[FrameDetections]:
    """Load a detections file into contiguous per-frame sets.

    Frames absent from the file but inside the spanned range come back
    empty, which downstream tracking treats as infeasible unless projection
    fills them in."""
    lines = _read_lines(path, DETECTIONS_HEADER)
    by_frame: dict[int, list[ScoredBox]] = {}
    for lineno, toks in _data_lines(lines):
        if len(toks) != 7:
            raise FormatError(f"{path}:{lineno}: expected 7 fields, got {len(toks)}")
        frame = _parse_int(toks[0], path, lineno)
        try:
            box = ScoredBox(
                frame=frame,
                cx=_parse_float(toks[1], path, lineno),
                cy=_parse_float(toks[2], path, lineno),
                w=_parse_float(toks[3], path, lineno),
                h=_parse_float(toks[4], path, lineno),
                score=_parse_float(toks[5], path, lineno),
                source_id=_parse_int(toks[6], path, lineno),
            )
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: {e}") from None
        by_frame.setdefault(frame, []).append(box)
    if not by_frame:
        raise FormatError(f"{path}: no detection records")
    lo = min(by_frame)
    hi = max(by_frame)
    return [
        FrameDetections(frame=t, boxes=tuple(by_frame.get(t, ()))) for t in range(lo, hi + 1)
    ]


# -- tracks -------------------------------------------------------------------

def write_track(path: str, track: Track) -> None:
    indices = track.pick_indices or tuple(-1 for _ in track.picks)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACK_HEADER + "\n")
        for b, j in zip(track.picks, indices):
            fh.write(
                f"{b.frame} {_fmt(b.cx)} {_fmt(b.cy)} {_fmt(b.w)} {_fmt(b.h)} "
                f"{j} {int(b.projected)}\n"
            )


def read_track(path: str) -> list[ScoredBox]:
    """Track files carry geometry only; scores read back as zero."""
    lines = _read_lines(path, TRACK_HEADER)
    boxes = []
    for lineno, toks in _data_lines(lines):
        if len(toks) != 7:
            raise FormatError(f"{path}:{lineno}: expected 7 fields, got {len(toks)}")
        boxes.append(
            ScoredBox(
                frame=_parse_int(toks[0], path, lineno),
                cx=_parse_float(toks[1], path, lineno),
                cy=_parse_float(toks[2], path, lineno),
                w=_parse_float(toks[3], path, lineno),
                h=_parse_float(toks[4], path, lineno),
                score=0.0,
                projected=bool(_parse_int(toks[6], path, lineno)),
            )
        )
    if not boxes:
        raise FormatError(f"{path}: no track records")
    boxes.sort(key=lambda b: b.frame)
    return boxes


# -- prisms -------------------------------------------------------------------

def write_prisms(path: str, prisms: Sequence[DetectionPrism]) -> None:
    """One record line per frame: frame X Y S stride alpha, the per-level
    scale factors, then the row-major scores."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PRISM_HEADER + "\n")
        for p in prisms:
            X, Y, S = p.dims
            head = f"{p.frame} {X} {Y} {S} {_fmt(p.stride)} {_fmt(p.alpha)}"
            factors = " ".join(_fmt(f) for f in p.scale_map.factors)
            scores = " ".join(_fmt(v) for v in p.scores.reshape(-1))
            fh.write(f"{head} {factors} {scores}\n")


def read_prisms(path: str) -> list[DetectionPrism]:
    lines = _read_lines(path, PRISM_HEADER)
    prisms = []
    for lineno, toks in _data_lines(lines):
        if len(toks) < 6:
            raise FormatError(f"{path}:{lineno}: truncated prism record")
        frame = _parse_int(toks[0], path, lineno)
        X = _parse_int(toks[1], path, lineno)
        Y = _parse_int(toks[2], path, lineno)
        S = _parse_int(toks[3], path, lineno)
        stride = _parse_float(toks[4], path, lineno)
        alpha = _parse_float(toks[5], path, lineno)
        need = 6 + S + X * Y * S
        if len(toks) != need:
            raise FormatError(
                f"{path}:{lineno}: expected {need} fields for dims "
                f"{X}x{Y}x{S}, got {len(toks)}"
            )
        factors = [_parse_float(t, path, lineno) for t in toks[6 : 6 + S]]
        values = np.array(
            [_parse_float(t, path, lineno) for t in toks[6 + S :]]
        ).reshape(X, Y, S)
        try:
            prisms.append(
                DetectionPrism(
                    frame=frame,
                    scores=values,
                    scale_map=ScaleMap(factors=tuple(factors)),
                    alpha=alpha,
                    stride=stride,
                )
            )
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: {e}") from None
    if not prisms:
        raise FormatError(f"{path}: no prism records")
    prisms.sort(key=lambda p: p.frame)
    return prisms


# -- event models -------------------------------------------------------------

def write_models(path: str, models: Sequence[HmmModel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HMM_HEADER + "\n")
        for m in models:
            fh.write(f"model {m.name}\n")
            fh.write(f"states {m.K}\n")
            fh.write(f"dims {_fmt(m.frame_w)} {_fmt(m.frame_h)}\n")
            fh.write("init " + " ".join(_fmt(v) for v in m.log_init) + "\n")
            for row in m.log_trans:
                fh.write("trans " + " ".join(_fmt(v) for v in row) + "\n")
            for k in range(m.K):
                mean = " ".join(_fmt(v) for v in m.means[k])
                var = " ".join(_fmt(v) for v in m.variances[k])
                fh.write(f"state {k} mean {mean} var {var}\n")


def read_models(path: str) -> list[HmmModel]:
    lines = _read_lines(path, HMM_HEADER)
    models: list[HmmModel] = []
    cur: dict | None = None

    def finish() -> None:
        nonlocal cur
        if cur is None:
            return
        try:
            models.append(
                HmmModel(
                    name=cur["name"],
                    log_init=np.array(cur["init"]),
                    log_trans=np.array(cur["trans"]),
                    means=np.array([s[0] for s in cur["states"]]),
                    variances=np.array([s[1] for s in cur["states"]]),
                    frame_w=cur["dims"][0],
                    frame_h=cur["dims"][1],
                )
            )
        except (KeyError, ValueError) as e:
            raise FormatError(f"{path}: model {cur.get('name', '?')!r}: {e}") from None
        cur = None

    for lineno, toks in _data_lines(lines):
        key = toks[0]
        if key == "model":
            finish()
            if len(toks) != 2:
                raise FormatError(f"{path}:{lineno}: model line needs one name")
            cur = {"name": toks[1], "dims": (1.0, 1.0), "trans": [], "states": []}
            continue
        if cur is None:
            raise FormatError(f"{path}:{lineno}: {key!r} before any model line")
        if key == "states":
            cur["K"] = _parse_int(toks[1], path, lineno)
        elif key == "dims":
            cur["dims"] = (
                _parse_float(toks[1], path, lineno),
                _parse_float(toks[2], path, lineno),
            )
        elif key == "init":
            cur["init"] = [_parse_float(t, path, lineno) for t in toks[1:]]
        elif key == "trans":
            cur["trans"].append([_parse_float(t, path, lineno) for t in toks[1:]])
        elif key == "state":
            rest = toks[1:]
            if len(rest) != 11 or rest[1] != "mean" or rest[6] != "var":
                raise FormatError(f"{path}:{lineno}: malformed state line")
            mean = [_parse_float(t, path, lineno) for t in rest[2:6]]
            var = [_parse_float(t, path, lineno) for t in rest[7:11]]
            cur["states"].append((mean, var))
        else:
            raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
    finish()
    if not models:
        raise FormatError(f"{path}: no models")
    return models


# -- annotations --------------------------------------------------------------

def write_annotations(path: str, sets: Sequence[AnnotationSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ANNOT_HEADER + "\n")
        for a in sets:
            for track_id in sorted(a.tracks):
                label = a.labels[track_id]
                for frame in sorted(a.tracks[track_id]):
                    b = a.tracks[track_id][frame]
                    fh.write(
                        f"{a.video} {track_id} {label} {frame} "
                        f"{_fmt(b.x1)} {_fmt(b.y1)} {_fmt(b.x2)} {_fmt(b.y2)}\n"
                    )


def read_annotations(path: str) -> dict[str, AnnotationSet]:
    """Returns one AnnotationSet per video id."""
    lines = _read_lines(path, ANNOT_HEADER)
    sets: dict[str, AnnotationSet] = {}
    for lineno, toks in _data_lines(lines):
        if len(toks) != 8:
            raise FormatError(f"{path}:{lineno}: expected 8 fields, got {len(toks)}")
        video, track_id, label = toks[0], toks[1], toks[2]
        frame = _parse_int(toks[3], path, lineno)
        x1 = _parse_float(toks[4], path, lineno)
        y1 = _parse_float(toks[5], path, lineno)
        x2 = _parse_float(toks[6], path, lineno)
        y2 = _parse_float(toks[7], path, lineno)
        if x2 <= x1 or y2 <= y1:
            raise FormatError(f"{path}:{lineno}: degenerate box corners")
        box = ScoredBox(
            frame=frame,
            cx=(x1 + x2) / 2.0,
            cy=(y1 + y2) / 2.0,
            w=x2 - x1,
            h=y2 - y1,
            score=0.0,
        )
        try:
            sets.setdefault(video, AnnotationSet(video=video)).add(
                track_id, label, frame, box
            )
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: {e}") from None
    if not sets:
        raise FormatError(f"{path}: no annotation records")
    return sets


# -- unified results ----------------------------------------------------------

def write_unified(path: str, result: UnifiedResult) -> None:
    """Per-frame chosen cell, state, realized box, and running objective."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(UNIFIED_HEADER + "\n")
        fh.write(f"event {result.event}\n")
        fh.write(f"objective {_fmt(result.objective)}\n")
        for (x, y, s), k, b in zip(result.cells, result.states, result.boxes):
            fh.write(
                f"{b.frame} {x} {y} {s} {k} {_fmt(b.cx)} {_fmt(b.cy)} "
                f"{_fmt(b.w)} {_fmt(b.h)} {_fmt(b.score)}\n"
            )


def read_unified(path: str) -> dict:
    lines = _read_lines(path, UNIFIED_HEADER)
    meta: dict = {"rows": []}
    for lineno, toks in _data_lines(lines):
        if toks[0] == "event":
            meta["event"] = toks[1]
        elif toks[0] == "objective":
            meta["objective"] = _parse_float(toks[1], path, lineno)
        else:
            if len(toks) != 10:
                raise FormatError(f"{path}:{lineno}: expected 10 fields, got {len(toks)}")
            meta["rows"].append(
                {
                    "frame": _parse_int(toks[0], path, lineno),
                    "cell": (
                        _parse_int(toks[1], path, lineno),
                        _parse_int(toks[2], path, lineno),
                        _parse_int(toks[3], path, lineno),
                    ),
                    "state": _parse_int(toks[4], path, lineno),
                    "box": tuple(_parse_float(t, path, lineno) for t in toks[5:10]),
                }
            )
    if "event" not in meta or "objective" not in meta:
        raise FormatError(f"{path}: missing event/objective metadata")
    return meta


# -- scenarios ----------------------------------------------------------------

def write_scenario(path: str, sc: Scenario) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCENARIO_HEADER + "\n")
        for key, value in sc.to_dict().items():
            if isinstance(value, float):
                fh.write(f"{key} {_fmt(value)}\n")
            else:
                fh.write(f"{key} {value}\n")


def read_scenario(path: str) -> Scenario:
    lines = _read_lines(path, SCENARIO_HEADER)
    fields = {f.name: f.type for f in Scenario.__dataclass_fields__.values()}
    kwargs: dict = {}
    for lineno, toks in _data_lines(lines):
        if len(toks) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'key value'")
        key, tok = toks
        if key not in fields:
            raise FormatError(f"{path}:{lineno}: unknown scenario field {key!r}")
        if fields[key] in ("int", int):
            kwargs[key] = _parse_int(tok, path, lineno)
        else:
            kwargs[key] = _parse_float(tok, path, lineno)
    try:
        return Scenario(**kwargs)
    except (TypeError, ValueError) as e:
        raise FormatError(f"{path}: {e}") from None


def write_plot_data(path: str, header: str, rows: Iterable[Sequence[float]]) -> None:
    """Generic (N, time, ...) column dump used by the bench report."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(" ".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
