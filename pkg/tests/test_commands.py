import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from epidemic_fv.commands.convergence import CONVERGENCE_FILE, CONVERGENCE_HEADER
from epidemic_fv.main import main
from epidemic_fv.services.snapshot_service import FAILED_FILE, MANIFEST_FILE, TIME_SERIES_FILE, read_snapshot

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_equilibria_default_parameters(capsys):
    assert main(["equilibria"]) == 0
    out = capsys.readouterr().out
    assert "E1 = (7.21716" in out
    assert "E2 = (4.01090" in out
    assert "linearly stable" in out
    assert "unstable" in out


def test_equilibria_sweep(capsys):
    assert main(["equilibria", "--sweep-alpha", "3.0", "3.8", "4.6"]) == 0
    out = capsys.readouterr().out
    assert out.count("alpha=") == 3
    assert "alpha=4.6" in out


def test_equilibria_flags_degenerate_points(capsys):
    assert main(["equilibria", "--A", "0", "--r", "0"]) == 0
    assert "flagged point" in capsys.readouterr().out


def test_equilibria_none_real(capsys):
    assert main(["equilibria", "--r", "2.0"]) == 5


def test_stability_with_turing(capsys):
    assert main(["stability", "--d1", "10", "--d2", "1e-4"]) == 0
    out = capsys.readouterr().out
    assert "Eigenvalues:" in out
    assert "Turing-unstable" in out
    assert "Verdicts agree:   yes" in out


def test_stability_of_unstable_point(capsys):
    assert main(["stability", "--point", "7.217163781", "0.3044098832", "2.478426355", "--d1", "1", "--d2", "1"]) == 0
    assert "not linearly stable" in capsys.readouterr().out


def test_stability_grid(capsys):
    assert main(["stability", "--grid"]) == 0
    out = capsys.readouterr().out
    assert "of 400 grid points disagree" in out


def test_stability_grid_needs_stable_point():
    assert main(["stability", "--point", "7.217163781", "0.3044098832", "2.478426355", "--grid"]) == 2


def test_run_writes_outputs(tmp_path, small_config_path, capsys):
    out_dir = tmp_path / "out"
    assert main(["run", str(small_config_path), "--out-dir", str(out_dir)]) == 0
    assert "RUN SUMMARY" in capsys.readouterr().out

    with (out_dir / TIME_SERIES_FILE).open(newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 6
    assert float(rows[-1]["t"]) == pytest.approx(0.05)
    # species 2 follows its own mass, species 1 keeps its constant law
    assert len({row["a2"] for row in rows}) > 1
    assert {row["a1"] for row in rows} == {"0.10000000000000001"}

    snapshots = sorted(p.name for p in out_dir.glob("snapshot_*.csv"))
    assert snapshots == ["snapshot_n000000.csv", "snapshot_n000002.csv", "snapshot_n000005.csv"]

    manifest = json.loads((out_dir / MANIFEST_FILE).read_text())
    assert manifest["cells"] == 64
    assert manifest["regularity_ratio"] == pytest.approx(1.0 / math.sqrt(2.0))
    assert manifest["steps_planned"] == 5
    assert not manifest["summary"]["failed"]
    assert len(manifest["step_reports"]) == 5
    assert not (out_dir / FAILED_FILE).exists()


def test_run_is_deterministic(tmp_path, small_config_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(small_config_path), "--out-dir", str(first)]) == 0
    assert main(["run", str(small_config_path), "--out-dir", str(second)]) == 0
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_run_failure_keeps_partial_outputs(tmp_path, small_config_text):
    config = tmp_path / "strict.ini"
    config.write_text(small_config_text + "\n[solver]\npicard_max = 1\npicard_tol = 1e-14\n")
    out_dir = tmp_path / "out"
    assert main(["run", str(config), "--out-dir", str(out_dir)]) == 3

    assert (out_dir / FAILED_FILE).read_text().strip()
    manifest = json.loads((out_dir / MANIFEST_FILE).read_text())
    assert manifest["summary"]["failed"]
    assert manifest["summary"]["failure"]
    # the initial row and snapshot were written before the first step failed
    assert (out_dir / TIME_SERIES_FILE).read_text().count("\n") >= 2
    assert (out_dir / "snapshot_n000000.csv").is_file()


def test_run_zero_initial_data_stays_zero(tmp_path, small_config_text):
    config = tmp_path / "zero.ini"
    config.write_text(small_config_text.replace("preset = example1", "preset = constant\nvalues = 0, 0, 0"))
    out_dir = tmp_path / "out"
    assert main(["run", str(config), "--out-dir", str(out_dir)]) == 0
    for path in out_dir.glob("snapshot_*.csv"):
        for f in read_snapshot(path):
            np.testing.assert_array_equal(f.values, 0.0)


def test_run_config_error(tmp_path, small_config_text):
    config = tmp_path / "bad.ini"
    config.write_text(small_config_text.replace("nx = 8", "nx = eight"))
    assert main(["run", str(config), "--out-dir", str(tmp_path / "out")]) == 2
    assert not (tmp_path / "out").exists()


def test_run_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "missing.ini")]) == 2


def test_convergence_command(tmp_path, capsys):
    out_dir = tmp_path / "conv"
    args = ["convergence", str(CONFIGS / "manufactured.ini"), "--levels", "4", "8", "16", "--out-dir", str(out_dir)]
    assert main(args) == 0
    assert "CONVERGENCE" in capsys.readouterr().out
    with (out_dir / CONVERGENCE_FILE).open(newline="") as f:
        reader = csv.reader(f)
        assert next(reader) == CONVERGENCE_HEADER
        rows = list(reader)
    assert [row[0] for row in rows] == ["4", "8", "16"]
    assert rows[0][4] == ""
    assert float(rows[2][3]) < float(rows[0][3])


def test_convergence_without_manufactured_solution(tmp_path, small_config_path):
    assert main(["convergence", str(small_config_path), "--levels", "4", "8", "16", "--out-dir", str(tmp_path)]) == 5
