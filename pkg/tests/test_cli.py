import json

import pandas as pd
import pytest

from pcone.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main
from pcone.util.fileio import dump, load


def write_yaml(path, doc):
    dump(doc, str(path))
    return str(path)


def test_project_writes_json(scenario_dir, tmp_path):
    out = tmp_path / "split.json"
    assert main(["project", str(scenario_dir / "project_shear.yaml"), "--out", str(out), "--seed", "5"]) == EXIT_OK
    result = json.loads(out.read_text())
    assert result["branch"] == "one"
    assert result["normal"] == pytest.approx([0, 0, 0, 0.5, 0, 0], abs=1e-12)
    assert result["tangent"] == pytest.approx([0.0] * 6, abs=1e-12)
    assert result["rng"] == "numpy.random.PCG64 seed=5"
    assert result["oracle_gap"] < 1e-6


def test_project_on_a_tresca_edge(scenario_dir, capsys):
    assert main(["project", str(scenario_dir / "project_tresca_edge.yaml"), "--no-progress"]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["branch"] == "tresca_degenerate_m3"
    assert result["normal"] == pytest.approx([1.0, 1.0, -2.0, 0.0, 0.0, 0.0], abs=1e-9)


def test_invalid_input_exits_with_1(tmp_path):
    assert main(["project", str(tmp_path / "missing.yaml")]) == EXIT_INVALID
    doc = {"version": "pc/1", "criterion": "von_mises", "k": 1.0, "sigma": [0, 0, 0, 5, 0, 0], "tau": [0] * 6}
    assert main(["project", write_yaml(tmp_path / "outside.yaml", doc)]) == EXIT_INVALID
    (tmp_path / "broken.yaml").write_text("k: [1, 2\n")
    assert main(["project", str(tmp_path / "broken.yaml")]) == EXIT_INVALID
    assert main(["check", "--samples", "0"]) == EXIT_INVALID


def test_drive_pure_shear(scenario_dir, tmp_path):
    out = tmp_path / "drive.csv"
    argv = [
        "drive",
        str(scenario_dir / "pure_shear_ramp.yaml"),
        "--out",
        str(out),
        "--no-progress",
        "--cfg-options",
        "dt=0.001",
        "path.t_end=6",
    ]
    assert main(argv) == EXIT_OK
    header = out.read_text().splitlines()[0]
    assert header == "# pcone drive version=pc/1 rng=numpy.random.PCG64 seed=0"
    frame = pd.read_csv(out, comment="#")
    assert frame.sigma_12.iloc[-1] == pytest.approx(1.0, abs=1e-4)
    assert frame.t.iloc[-1] == pytest.approx(6.0)
    assert "consistency_residual" in frame.columns

    again = tmp_path / "again.csv"
    argv[3] = str(again)
    assert main(argv) == EXIT_OK
    assert again.read_bytes() == out.read_bytes()

    resolved = tmp_path / "drive.scenario.yaml"
    doc = load(str(resolved))
    assert doc["dt"] == 0.001
    assert doc["path"]["t_end"] == 6
    assert doc["moduli"]["rho"] == 1.0
    rerun = tmp_path / "rerun.csv"
    assert main(["drive", str(resolved), "--out", str(rerun), "--no-progress"]) == EXIT_OK
    assert rerun.read_bytes() == out.read_bytes()


def test_drive_failure_exits_with_2(tmp_path):
    doc = {
        "version": "pc/1",
        "criterion": "von_mises",
        "k": 1.0,
        "moduli": {"lame": [1.0, 1.0], "rho": 1.0},
        "initial": {"sigma": [0, 0, 0, 1, 0, 0]},
        "path": {"knots": [[0.0, [1, -1, 0, 0, 0, 0]]], "t_end": 1.0},
        "dt": 0.1,
        "drift": {"kind": "none"},
    }
    assert main(["drive", write_yaml(tmp_path / "drift.yaml", doc), "--out", str(tmp_path / "o.csv")]) == EXIT_NUMERICAL


def test_wave_writes_csv_and_summary(scenario_dir, tmp_path):
    out = tmp_path / "bar.csv"
    argv = [
        "wave",
        str(scenario_dir / "plastic_bar.yaml"),
        "--out",
        str(out),
        "--no-progress",
        "--cfg-options",
        "grid.n_cells=80",
        "t_end=0.1",
        "output_stride=20",
    ]
    assert main(argv) == EXIT_OK
    frame = pd.read_csv(out, comment="#")
    assert set(frame.step) >= {0}
    assert frame.f_value.max() <= 0.005 + 1e-6
    summary = json.loads((tmp_path / "bar.summary.json").read_text())
    assert summary["n_cells"] == 80
    assert summary["courant"] == pytest.approx(0.5)
    assert summary["max_yield_violation"] <= 1e-6


def test_check_report(tmp_path):
    out = tmp_path / "report.json"
    argv = ["check", "--seed", "4", "--samples", "100", "--suites", "tensor_identities", "kkt_coverage", "--out", str(out)]
    assert main(argv) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["rng"] == "numpy.random.PCG64 seed=4"
    assert [s["name"] for s in report["suites"]] == ["tensor_identities", "kkt_coverage"]
    assert all("seconds" not in s for s in report["suites"])

    again = tmp_path / "again.json"
    argv[-1] = str(again)
    assert main(argv) == EXIT_OK
    assert again.read_text() == out.read_text()


def test_failed_suite_exits_with_2():
    assert main(["check", "--samples", "50", "--suites", "moreau", "--tol-scale", "1e-30"]) == EXIT_NUMERICAL


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "pc/1" in capsys.readouterr().out


def test_missing_density_exits_with_1(scenario_dir, tmp_path):
    doc = {
        "version": "pc/1",
        "criterion": "von_mises",
        "k": 1.0,
        "moduli": {"lame": [1.0, 1.0]},
        "path": {"knots": [[0.0, [0, 0, 0, 0.1, 0, 0]]], "t_end": 1.0},
        "dt": 0.1,
    }
    assert main(["drive", write_yaml(tmp_path / "no_rho.yaml", doc)]) == EXIT_INVALID
    out = tmp_path / "o.csv"
    argv = ["drive", str(scenario_dir / "pure_shear_ramp.yaml"), "--out", str(out), "--cfg-options", "moduli.rho=0"]
    assert main(argv) == EXIT_INVALID
    assert not (tmp_path / "o.scenario.yaml").exists()
