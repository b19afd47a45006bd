"""Command-line pipelines over the library: tracking, prism tracking, event
recognition, joint and unified inference, agreement scoring, synthetic data,
and the scaling benchmark.

Every result subcommand prints the objective and its per-term decomposition
(detection, coherency, emission, transition sums) so objective-level audits
are scriptable, writes its delimited output file, and renders a matplotlib
figure alongside it unless --no-figure is given. Exit codes: 0 success,
2 malformed input, 3 infeasible instance.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import agreement as agr
from . import formats
from .bench import run_bench
from .core import FrameDetections, MotionModel, otsu_offset, pool_detections, top_k
from .events import classify, joint_decompose, joint_multi_model
from .pyramid import prism_distance, resample_to_reference, track_prisms
from .synth import Scenario, fixture_models, gen_detections, gen_prisms
from .tracking import (
    CoherencyParams,
    EmptyFrameError,
    Track,
    viterbi_track,
    viterbi_track_augmented,
)
from .unified import recognize_all, unified_decompose

__all__ = ["main"]

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_INFEASIBLE = 3


class InfeasibleError(RuntimeError):
    pass


def _figure_path(output: str) -> str:
    return str(Path(output).with_suffix(".png"))


def _print_decomposition(objective: float, terms: dict[str, float]) -> None:
    print(f"objective {objective!r}")
    for key, value in terms.items():
        print(f"{key} {value!r}")


def _coherency_params(args: argparse.Namespace) -> CoherencyParams:
    motion = (
        MotionModel.constant_velocity(args.vx, args.vy)
        if args.motion == "constant-velocity"
        else MotionModel.identity()
    )
    return CoherencyParams(motion=motion, form=args.g_form)


def _apply_top_k(frames, k):
    if k is None:
        return frames
    return [top_k(fd, k) if len(fd) else fd for fd in frames]


def _pool_sources(frames, trained_threshold: float, epsilon: float):
    """Normalize scores per detection source and re-pool.

    Each source's offset comes from the bipartition threshold of its
    top-detection-per-frame score histogram, capped at the trained threshold
    plus epsilon."""
    sources = sorted({b.source_id for fd in frames for b in fd.boxes})
    offsets = {}
    for sid in sources:
        tops = [
            max(b.score for b in fd.boxes if b.source_id == sid)
            for fd in frames
            if any(b.source_id == sid for b in fd.boxes)
        ]
        offsets[sid] = otsu_offset(tops, trained_threshold, epsilon)
    pooled = []
    for fd in frames:
        per_source = [
            (
                FrameDetections(
                    frame=fd.frame,
                    boxes=tuple(b for b in fd.boxes if b.source_id == sid),
                ),
                offsets[sid],
            )
            for sid in sources
        ]
        pooled.append(pool_detections(per_source, frame=fd.frame))
    return pooled


def _track_terms(track: Track) -> dict[str, float]:
    return {
        "score_detection": sum(f for f, _ in track.per_frame_scores),
        "score_coherency": sum(g for _, g in track.per_frame_scores),
    }


def cmd_track(args: argparse.Namespace) -> int:
    frames = formats.read_detections(args.input)
    if args.pool_sources:
        frames = _pool_sources(frames, args.trained_threshold, args.epsilon)
    frames = _apply_top_k(frames, args.top_k)
    params = _coherency_params(args)
    if args.project_missing:
        track = viterbi_track_augmented(
            frames, params, project_missing=True, projection_penalty=args.projection_penalty
        )
    else:
        track = viterbi_track(frames, params)
    formats.write_track(args.output, track)
    _print_decomposition(track.objective, _track_terms(track))
    if not args.no_figure:
        from .plots import plot_track

        plot_track(_figure_path(args.output), track.picks, detections=frames)
    return EXIT_OK


def cmd_pyramid(args: argparse.Namespace) -> int:
    prisms = formats.read_prisms(args.input)
    if args.resample is not None:
        prisms = [resample_to_reference(p, args.resample) for p in prisms]
    result = track_prisms(prisms, args.alpha)
    track = Track(
        picks=result.boxes,
        objective=result.objective,
        per_frame_scores=tuple((b.score, 0.0) for b in result.boxes),
        pick_indices=tuple(
            int(x * prisms[0].dims[1] * prisms[0].dims[2] + y * prisms[0].dims[2] + s)
            for x, y, s in result.cells
        ),
    )
    formats.write_track(args.output, track)
    f_sum = sum(b.score for b in result.boxes)
    g_sum = -sum(
        prism_distance(result.cells[t - 1], result.cells[t], prisms[0].scale_map, args.alpha)
        for t in range(1, len(result.cells))
    )
    _print_decomposition(
        result.objective, {"score_detection": f_sum, "score_coherency": g_sum}
    )
    if not args.no_figure:
        from .plots import plot_track

        plot_track(_figure_path(args.output), result.boxes, title="prism track")
    return EXIT_OK


def cmd_recognize(args: argparse.Namespace) -> int:
    boxes = formats.read_track(args.input)
    models = formats.read_models(args.models)
    mode = {"ml": "ml-on-fixed-track", "map": "map-on-fixed-track"}[args.mode]
    ranking = classify(boxes, models, mode=mode)
    for label, score in ranking:
        print(f"{label} {score!r}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write("#lattice-fusion/ranking/v1\n")
            for label, score in ranking:
                fh.write(f"{label} {score!r}\n")
    return EXIT_OK


def cmd_joint(args: argparse.Namespace) -> int:
    frames = _apply_top_k(formats.read_detections(args.input), args.top_k)
    models = formats.read_models(args.models)
    params = _coherency_params(args)
    results = joint_multi_model(frames, models, params)
    best = results[0]
    model = next(m for m in models if m.name == best.event)
    print("ranking " + " ".join(f"{r.event}:{r.objective!r}" for r in results))
    _print_decomposition(best.objective, joint_decompose(best, model, params))
    formats.write_track(args.output, best.track)
    if not args.no_figure:
        from .plots import plot_track

        plot_track(
            _figure_path(args.output),
            best.track.picks,
            detections=frames,
            title=f"joint track ({best.event})",
        )
    return EXIT_OK


def cmd_unified(args: argparse.Namespace) -> int:
    prisms = formats.read_prisms(args.input)
    if args.resample is not None:
        prisms = [resample_to_reference(p, args.resample) for p in prisms]
    models = formats.read_models(args.models)
    results = recognize_all(prisms, models, args.alpha)
    best = results[0]
    model = next(m for m in models if m.name == best.event)
    print("ranking " + " ".join(f"{r.event}:{r.objective!r}" for r in results))
    _print_decomposition(best.objective, unified_decompose(best, prisms, model, args.alpha))
    formats.write_unified(args.output, best)
    if not args.no_figure:
        from .plots import plot_track

        plot_track(
            _figure_path(args.output), best.boxes, title=f"unified track ({best.event})"
        )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    ours = formats.read_annotations(args.input)
    refs = formats.read_annotations(args.reference)
    shared = sorted(ours.keys() & refs.keys())
    if not shared:
        raise InfeasibleError("no shared videos between the two annotation files")
    reports = {}
    for cls in ("person", "nonperson"):
        pairs = [(ours[v], refs[v]) for v in shared]
        try:
            reports[cls] = agr.corpus_agreement(pairs, cls=cls, perm_cap=args.perm_cap)
        except ValueError:
            continue  # no tracks of this class with shared frames
    if not reports:
        raise InfeasibleError("no shared frames in any class")

    lines = [f"{'class':<12} {'N':>5} {'mu':>8} {'sigma':>8}"]
    for cls, rep in sorted(reports.items()):
        lines.append(f"{cls:<12} {rep.videos:>5} {rep.mean:>8.4f} {rep.std:>8.4f}")
    table = "\n".join(lines)
    print(table)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    if not args.no_figure:
        from .plots import plot_agreement

        plot_agreement(_figure_path(args.output), reports)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    if args.spec:
        sc = formats.read_scenario(args.spec)
        if args.seed is not None:
            sc = replace(sc, seed=args.seed)
    else:
        sc = Scenario(
            seed=args.seed if args.seed is not None else 0,
            frames=args.frames,
            dropout=args.dropout,
            fp_rate=args.fp_rate,
        )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames, truth = gen_detections(sc)
    prisms, _ = gen_prisms(sc)
    models = fixture_models(frame_w=sc.width, frame_h=sc.height)

    formats.write_scenario(str(out / "scenario.txt"), sc)
    formats.write_detections(str(out / "detections.txt"), frames)
    formats.write_prisms(str(out / "prisms.txt"), prisms)
    formats.write_track(
        str(out / "truth.txt"),
        Track(
            picks=tuple(truth),
            objective=0.0,
            per_frame_scores=tuple((0.0, 0.0) for _ in truth),
        ),
    )
    formats.write_models(str(out / "models.txt"), models)

    # two annotators of the same ground truth: one exact, one jittered,
    # so the agreement pipeline can run on generated data alone
    video = f"synth-{sc.seed}"
    exact = agr.AnnotationSet(video=video)
    noisy = agr.AnnotationSet(video=video)
    jitter_rng = np.random.Generator(np.random.PCG64(sc.seed + 0x5EED))
    for gt in truth:
        exact.add("t0", "person", gt.frame, gt)
        noisy.add(
            "t0",
            "person",
            gt.frame,
            replace(
                gt,
                cx=gt.cx + float(jitter_rng.normal(0.0, sc.jitter)),
                cy=gt.cy + float(jitter_rng.normal(0.0, sc.jitter)),
            ),
        )
    formats.write_annotations(str(out / "annotations.txt"), [exact])
    formats.write_annotations(str(out / "annotations_b.txt"), [noisy])

    print(f"scenario seed={sc.seed} frames={sc.frames} -> {out}")
    for name in (
        "scenario.txt",
        "detections.txt",
        "prisms.txt",
        "truth.txt",
        "models.txt",
        "annotations.txt",
        "annotations_b.txt",
    ):
        print(f"wrote {out / name}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    ladder = [int(tok) for tok in args.ladder.split(",") if tok]
    if not ladder:
        raise formats.FormatError("empty bench ladder")
    report = run_bench(
        ladder, frames=args.frames, seed=args.seed, alpha=args.alpha, repeats=args.repeats
    )
    table = report.table()
    print(table)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
    if args.plot_data:
        formats.write_plot_data(
            args.plot_data, "#lattice-fusion/bench/v1", report.plot_rows()
        )
    if args.plot_data and not args.no_figure:
        from .plots import plot_bench

        plot_bench(_figure_path(args.plot_data), report)
    return EXIT_OK


def _add_coherency_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--g-form",
        choices=["negative-euclidean", "negative-squared-euclidean"],
        default="negative-euclidean",
        help="temporal coherency form",
    )
    p.add_argument("--motion", choices=["identity", "constant-velocity"], default="identity")
    p.add_argument("--vx", type=float, default=0.0, help="constant-velocity x (px/frame)")
    p.add_argument("--vy", type=float, default=0.0, help="constant-velocity y (px/frame)")
    p.add_argument("--top-k", type=int, default=None, help="keep only the k best detections per frame")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lattice-fusion",
        description="Detection-based tracking, prism-level simultaneous detection "
        "and tracking, HMM event recognition, and fully joint inference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="detection-based tracking over a detections file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_coherency_flags(p)
    p.add_argument("--project-missing", action="store_true", help="augment frames with forward-projected detections")
    p.add_argument("--projection-penalty", type=float, default=0.0)
    p.add_argument("--pool-sources", action="store_true", help="normalize per-source scores before tracking")
    p.add_argument("--trained-threshold", type=float, default=float("inf"), help="detector acceptance threshold used as the normalization cap")
    p.add_argument("--epsilon", type=float, default=1.0, help="offset added to the trained threshold when capping")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("pyramid", help="simultaneous detection and tracking over prisms")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--alpha", type=float, default=1.0, help="scale-difference weight")
    p.add_argument("--resample", type=float, default=None, help="resample prisms to this reference stride first")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_pyramid)

    p = sub.add_parser("recognize", help="rank event models against a fixed track")
    p.add_argument("--input", required=True, help="track file")
    p.add_argument("--models", required=True)
    p.add_argument("--mode", choices=["ml", "map"], default="ml")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("joint", help="joint tracking + event recognition")
    p.add_argument("--input", required=True, help="detections file")
    p.add_argument("--models", required=True)
    p.add_argument("--output", required=True, help="track file for the best model")
    _add_coherency_flags(p)
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_joint)

    p = sub.add_parser("unified", help="joint detection + tracking + event recognition")
    p.add_argument("--input", required=True, help="prism file")
    p.add_argument("--models", required=True)
    p.add_argument("--output", required=True, help="unified result file")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--resample", type=float, default=None)
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_unified)

    p = sub.add_parser("eval", help="intercoder agreement between two annotation files")
    p.add_argument("--input", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--perm-cap", type=int, default=8, help="max tracks per class for permutation search")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic scenario bundle")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--spec", default=None, help="scenario spec file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--fp-rate", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="scaling benchmark: quadratic vs transform engine")
    p.add_argument("--ladder", default="2000,4000,8000,16000", help="comma-separated cell counts")
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--output", default=None, help="table file")
    p.add_argument("--plot-data", default=None, help="(N, time) pairs file")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except formats.FormatError as e:
        print(f"error {EXIT_MALFORMED}: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except EmptyFrameError as e:
        print(f"error {EXIT_INFEASIBLE}: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InfeasibleError as e:
        print(f"error {EXIT_INFEASIBLE}: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as e:
        print(f"error {EXIT_MALFORMED}: {e}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
