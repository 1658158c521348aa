import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from glucast.cli import main
from glucast.synth import make_synthetic_series, to_csv

TG_FLAGS = [
    "--window", "10", "--hidden", "6", "--attn-dim", "6", "--decoder-hidden", "6",
    "--encoder-layers", "1", "--epochs", "2", "--seed", "7",
]


@pytest.fixture
def small_csv(tmp_path):
    series = make_synthetic_series(days=1.5, seed=3)
    path = tmp_path / "cgm.csv"
    path.write_text(to_csv(series))
    return path


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)

    def _run(*args):
        return main([str(a) for a in args])

    return _run


class TestStats:
    def test_summary_and_manifest(self, run, small_csv, tmp_path, capsys):
        assert run("stats", small_csv) == 0
        out = capsys.readouterr().out
        assert "mg/dL" in out and "TIR" in out
        manifest = json.loads((tmp_path / "stats-manifest.json").read_text())
        assert manifest["command"] == "stats"
        assert str(small_csv) in manifest["inputs"]

    def test_svg_is_valid_xml_with_polylines(self, run, small_csv, tmp_path):
        assert run("stats", small_csv, "--svg", tmp_path / "profile.svg") == 0
        tree = ET.parse(tmp_path / "profile.svg")
        polylines = [e for e in tree.iter() if e.tag.endswith("polyline")]
        assert len(polylines) >= 1

    def test_missing_file_exits_2(self, run, capsys):
        assert run("stats", "/no/such/file.csv") == 2

    def test_empty_file_exits_2(self, run, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("timestamp,glucose\n")
        assert run("stats", path) == 2

    def test_usage_error_exits_1(self, run, small_csv):
        assert run("stats", small_csv, "--lo", "200", "--hi", "100") == 1
        assert run("nonsense-command") == 1


class TestFitForecast:
    def test_des_fit_then_forecast_continues_line(self, run, tmp_path):
        values = 100 + 0.5 * np.arange(60)
        lines = ["timestamp,glucose"] + [
            f"{1477267200 + 300 * i},{v:.4f}" for i, v in enumerate(values)
        ]
        path = tmp_path / "linear.csv"
        path.write_text("\n".join(lines) + "\n")
        model_path = tmp_path / "des.json"
        assert run(
            "fit", path, "--model", "des", "--out", model_path,
            "--timestamp-format", "epoch",
        ) == 0
        fc_path = tmp_path / "fc.json"
        assert run(
            "forecast", path, "--model-file", model_path, "--horizon", "4",
            "--timestamp-format", "epoch", "--out", fc_path,
        ) == 0
        fc = json.loads(fc_path.read_text())["forecast"]
        expected = 100 + 0.5 * (60 + np.arange(4))
        assert np.allclose(fc["values"], expected, atol=1e-6)

    def test_timeglu_fit_deterministic_files(self, run, small_csv, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert run("fit", small_csv, "--model", "timeglu", "--out", out1, *TG_FLAGS) == 0
        assert run("fit", small_csv, "--model", "timeglu", "--out", out2, *TG_FLAGS) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_auto_arima_manifest_records_grid(self, run, small_csv, tmp_path):
        manifest_path = tmp_path / "m.json"
        assert run(
            "fit", small_csv, "--model", "auto-arima", "--max-p", "1", "--max-q", "1",
            "--out", tmp_path / "arima.json", "--manifest", manifest_path,
        ) == 0
        manifest = json.loads(manifest_path.read_text())
        assert manifest["extra"]["search_grid_size"] == 4
        assert manifest["extra"]["d_candidates"] == 3

    def test_fit_failure_exits_3(self, run, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("timestamp,glucose\n0,100\n300,101\n600,102\n")
        assert run(
            "fit", path, "--model", "auto-arima", "--order", "5,0,5",
            "--out", tmp_path / "m.json", "--timestamp-format", "epoch",
        ) == 3

    def test_bad_model_file_exits_2(self, run, small_csv, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert run("forecast", small_csv, "--model-file", bad) == 2

    def test_loss_log_written(self, run, small_csv, tmp_path):
        log_path = tmp_path / "loss.csv"
        assert run(
            "fit", small_csv, "--model", "timeglu", "--out", tmp_path / "tg.json",
            "--loss-log", log_path, *TG_FLAGS,
        ) == 0
        lines = log_path.read_text().strip().splitlines()
        assert lines[0] == "epoch,mean_loss"
        assert len(lines) == 3  # header + 2 epochs


class TestEvaluateCompare:
    def test_evaluate_report_and_svg(self, run, small_csv, tmp_path):
        report_path = tmp_path / "report.json"
        svg_dir = tmp_path / "plots"
        assert run(
            "evaluate", small_csv, "--model", "des", "--horizon", "2",
            "--stride", "12", "--report", report_path, "--svg", svg_dir,
        ) == 0
        doc = json.loads(report_path.read_text())
        assert doc["format"] == "glucast-report"
        labels = [r["label"] for r in doc["models"]]
        assert "DFS" in labels and "Persistence" in labels
        svgs = list(svg_dir.glob("*.svg"))
        assert len(svgs) == 2
        for svg in svgs:
            tree = ET.parse(svg)
            polylines = [e for e in tree.iter() if e.tag.endswith("polyline")]
            assert len(polylines) == 2  # actual + predicted

    def test_compare_reports_are_reproducible(self, run, small_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert run(
                "compare", small_csv, "--models", "persistence,des",
                "--horizon", "2", "--stride", "12", "--report", path, "--seed", "5",
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_compare_rows_sorted_by_mae(self, run, small_csv, tmp_path, capsys):
        report_path = tmp_path / "cmp.json"
        assert run(
            "compare", small_csv, "--models", "des,persistence",
            "--horizon", "1", "--stride", "6", "--report", report_path,
        ) == 0
        doc = json.loads(report_path.read_text())
        maes = [r["mae"] for r in doc["models"]]
        assert maes == sorted(maes)

    def test_failed_model_row_not_fatal(self, run, small_csv, tmp_path):
        # seasonal period far beyond the data -> row error, but exit 0
        report_path = tmp_path / "cmp.json"
        code = run(
            "compare", small_csv, "--models", "persistence,bats",
            "--seasonal-period", "2000", "--horizon", "2", "--stride", "12",
            "--report", report_path,
        )
        doc = json.loads(report_path.read_text())
        errors = [r["error"] for r in doc["models"]]
        assert any(e is not None for e in errors)
        assert any(e is None for e in errors)
        assert code == 0

    def test_ablation_grid_four_rows(self, run, small_csv, tmp_path):
        report_path = tmp_path / "ablate.json"
        assert run(
            "compare", small_csv, "--ablate", "timeglu", "--horizon", "1",
            "--stride", "24", "--report", report_path, *TG_FLAGS,
        ) == 0
        doc = json.loads(report_path.read_text())
        labels = sorted(r["label"] for r in doc["models"])
        assert labels == [
            "TimeGlu",
            "TimeGlu[LSTM-decoder]",
            "TimeGlu[LSTM-encoder]",
            "TimeGlu[no-attention]",
        ]

    def test_refit_flag_recorded_in_manifest(self, run, small_csv, tmp_path):
        manifest_path = tmp_path / "m.json"
        assert run(
            "evaluate", small_csv, "--model", "persistence", "--horizon", "1",
            "--stride", "24", "--refit", "every-origin", "--manifest", manifest_path,
        ) == 0
        manifest = json.loads(manifest_path.read_text())
        assert manifest["resolved"]["refit"] == "every-origin"


class TestGradcheck:
    def test_passes_and_exits_zero(self, run, capsys):
        assert run("gradcheck", "--seeds", "1") == 0
        out = capsys.readouterr().out
        assert "max relative error" in out
        assert "PASS" in out
