import pathlib

import numpy as np
import pytest

from lattice_fusion import Scenario, fixture_models, formats, gen_detections
from lattice_fusion.cli import main
from lattice_fusion.events import HmmModel

DATA = pathlib.Path(__file__).resolve().parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_clean_scenario_files(tmp_path, seed=3, frames=6):
    sc = Scenario(seed=seed, frames=frames, dropout=0.0, fp_rate=0.0, jitter=0.0)
    frames_list, truth = gen_detections(sc)
    dets = tmp_path / "dets.txt"
    formats.write_detections(str(dets), frames_list)
    return sc, dets, truth


def uniform_model_file(tmp_path):
    model = HmmModel(
        name="uniform",
        log_init=np.zeros(1),
        log_trans=np.zeros((1, 1)),
        means=np.zeros((1, 4)),
        variances=np.full((1, 4), 1e30),
    )
    path = tmp_path / "uniform.txt"
    formats.write_models(str(path), [model])
    return path


class TestCmdTrack:
    def test_clean_scenario_recovers_truth(self, tmp_path, capsys):
        sc, dets, truth = write_clean_scenario_files(tmp_path)
        out_file = tmp_path / "track.txt"
        code, out, err = run(
            capsys, "track", "--input", str(dets), "--output", str(out_file)
        )
        assert code == 0
        boxes = formats.read_track(str(out_file))
        assert [(b.cx, b.cy) for b in boxes] == [(g.cx, g.cy) for g in truth]
        assert "objective" in out and "score_detection" in out and "score_coherency" in out
        assert (tmp_path / "track.png").exists()

    def test_no_figure_flag(self, tmp_path, capsys):
        _, dets, _ = write_clean_scenario_files(tmp_path)
        out_file = tmp_path / "track.txt"
        code, _, _ = run(
            capsys, "track", "--input", str(dets), "--output", str(out_file), "--no-figure"
        )
        assert code == 0
        assert not (tmp_path / "track.png").exists()

    def test_malformed_input_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("not a header\n")
        code, _, err = run(
            capsys, "track", "--input", str(bad), "--output", str(tmp_path / "o.txt")
        )
        assert code == 2
        assert err.startswith("error 2")

    def test_empty_frame_exit_3(self, tmp_path, capsys):
        sc = Scenario(seed=5, frames=4, dropout=1.0, fp_rate=0.5)
        frames, _ = gen_detections(sc)
        assert any(len(fd) == 0 for fd in frames)
        dets = tmp_path / "dets.txt"
        formats.write_detections(str(dets), frames)
        code, _, err = run(
            capsys, "track", "--input", str(dets), "--output", str(tmp_path / "o.txt")
        )
        assert code == 3
        assert err.startswith("error 3")

    def test_top_k_and_pooling_flags(self, tmp_path, capsys):
        sc = Scenario(seed=8, frames=5, dropout=0.0, fp_rate=2.0)
        frames, _ = gen_detections(sc)
        dets = tmp_path / "dets.txt"
        formats.write_detections(str(dets), frames)
        code, out, _ = run(
            capsys,
            "track",
            "--input", str(dets),
            "--output", str(tmp_path / "o.txt"),
            "--top-k", "3",
            "--pool-sources",
            "--epsilon", "0.5",
            "--no-figure",
        )
        assert code == 0


class TestCmdJoint:
    def test_k1_uniform_matches_track_output(self, tmp_path, capsys):
        _, dets, _ = write_clean_scenario_files(tmp_path, seed=9)
        models = uniform_model_file(tmp_path)
        t_out = tmp_path / "plain.txt"
        j_out = tmp_path / "joint.txt"
        code, _, _ = run(
            capsys, "track", "--input", str(dets), "--output", str(t_out), "--no-figure"
        )
        assert code == 0
        code, out, _ = run(
            capsys,
            "joint",
            "--input", str(dets),
            "--models", str(models),
            "--output", str(j_out),
            "--no-figure",
        )
        assert code == 0
        assert t_out.read_text() == j_out.read_text()
        assert "score_emission" in out and "score_transition" in out


class TestCmdPyramidAndUnified:
    def test_pyramid_runs_and_reports(self, tmp_path, capsys):
        sc = Scenario(seed=4, frames=4, dropout=0.0, distractor_count=1)
        from lattice_fusion import gen_prisms

        prisms, _ = gen_prisms(sc)
        ppath = tmp_path / "prisms.txt"
        formats.write_prisms(str(ppath), prisms)
        out_file = tmp_path / "ptrack.txt"
        code, out, _ = run(
            capsys,
            "pyramid",
            "--input", str(ppath),
            "--output", str(out_file),
            "--alpha", "1.0",
        )
        assert code == 0
        assert (tmp_path / "ptrack.png").exists()
        boxes = formats.read_track(str(out_file))
        assert len(boxes) == 4

    def test_unified_matches_committed_golden(self, tmp_path, capsys):
        out_file = tmp_path / "unified.txt"
        code, out, _ = run(
            capsys,
            "unified",
            "--input", str(DATA / "golden_prisms.txt"),
            "--models", str(DATA / "golden_models.txt"),
            "--output", str(out_file),
            "--alpha", "1.0",
            "--no-figure",
        )
        assert code == 0
        golden = float((DATA / "golden_unified_objective.txt").read_text())
        result = formats.read_unified(str(out_file))
        assert result["objective"] == pytest.approx(golden, abs=1e-9)


class TestCmdRecognize:
    def test_ranking_on_synthetic_track(self, tmp_path, capsys):
        sc, dets, truth = write_clean_scenario_files(tmp_path, seed=6, frames=8)
        track_file = tmp_path / "track.txt"
        run(capsys, "track", "--input", str(dets), "--output", str(track_file), "--no-figure")
        models_file = tmp_path / "models.txt"
        formats.write_models(str(models_file), fixture_models(sc.width, sc.height))
        out_file = tmp_path / "ranking.txt"
        code, out, _ = run(
            capsys,
            "recognize",
            "--input", str(track_file),
            "--models", str(models_file),
            "--mode", "ml",
            "--output", str(out_file),
        )
        assert code == 0
        lines = [l for l in out.splitlines() if l]
        assert len(lines) == 3
        scores = [float(l.split()[1]) for l in lines]
        assert scores == sorted(scores, reverse=True)


class TestCmdEval:
    def _write_annot(self, path, shift=0.0):
        lines = ["#lattice-fusion/annot/v1"]
        for video in ("v1", "v2"):
            for t in range(4):
                x1 = 10 + t + shift
                lines.append(f"{video} p1 person {t} {x1} 5.0 {x1 + 8} 13.0")
        path.write_text("\n".join(lines) + "\n")

    def test_self_comparison_is_perfect(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        self._write_annot(a)
        out_file = tmp_path / "report.txt"
        code, out, _ = run(
            capsys,
            "eval",
            "--input", str(a),
            "--reference", str(a),
            "--output", str(out_file),
        )
        assert code == 0
        report = out_file.read_text()
        assert "person" in report
        assert "1.0000" in report and "0.0000" in report
        assert (tmp_path / "report.png").exists()

    def test_disjoint_videos_exit_3(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("#lattice-fusion/annot/v1\nva p1 person 0 0.0 0.0 4.0 4.0\n")
        b.write_text("#lattice-fusion/annot/v1\nvb p1 person 0 0.0 0.0 4.0 4.0\n")
        code, _, err = run(
            capsys, "eval", "--input", str(a), "--reference", str(b),
            "--output", str(tmp_path / "r.txt"),
        )
        assert code == 3
        assert err.startswith("error 3")


class TestCmdSynthAndBench:
    def test_synth_bundle_round_trips(self, tmp_path, capsys):
        out_dir = tmp_path / "bundle"
        code, out, _ = run(
            capsys, "synth", "--out-dir", str(out_dir), "--seed", "12", "--frames", "5"
        )
        assert code == 0
        for name in (
            "scenario.txt",
            "detections.txt",
            "prisms.txt",
            "truth.txt",
            "models.txt",
            "annotations.txt",
            "annotations_b.txt",
        ):
            assert (out_dir / name).exists()
        sc = formats.read_scenario(str(out_dir / "scenario.txt"))
        assert sc.seed == 12 and sc.frames == 5
        formats.read_detections(str(out_dir / "detections.txt"))
        formats.read_prisms(str(out_dir / "prisms.txt"))
        formats.read_models(str(out_dir / "models.txt"))
        annots = formats.read_annotations(str(out_dir / "annotations.txt"))
        assert set(annots) == {"synth-12"}

    def test_synth_then_eval_pipeline(self, tmp_path, capsys):
        out_dir = tmp_path / "bundle"
        run(capsys, "synth", "--out-dir", str(out_dir), "--seed", "3", "--frames", "8")
        report = tmp_path / "report.txt"
        code, out, _ = run(
            capsys,
            "eval",
            "--input", str(out_dir / "annotations.txt"),
            "--reference", str(out_dir / "annotations_b.txt"),
            "--output", str(report),
            "--no-figure",
        )
        assert code == 0
        person_row = [l for l in report.read_text().splitlines() if l.startswith("person")]
        assert len(person_row) == 1
        mu = float(person_row[0].split()[2])
        assert 0.0 < mu < 1.0  # jittered annotator: imperfect but positive overlap

    def test_bench_single_size_table(self, tmp_path, capsys):
        table_file = tmp_path / "bench.txt"
        data_file = tmp_path / "bench_data.txt"
        code, out, _ = run(
            capsys,
            "bench",
            "--ladder", "200",
            "--frames", "3",
            "--repeats", "1",
            "--output", str(table_file),
            "--plot-data", str(data_file),
            "--no-figure",
        )
        assert code == 0
        assert "n/a" in out  # single row: ratios not defined
        assert "yes" in out  # objectives cross-check column
        lines = data_file.read_text().splitlines()
        assert lines[0] == "#lattice-fusion/bench/v1"
        assert len(lines) == 2
