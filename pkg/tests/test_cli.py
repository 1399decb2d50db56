"""End-to-end CLI behavior: exit codes, emitted files, determinism."""

import numpy as np
import pytest

from monitored_chain import LatticeSpec, gamma_sweep
from monitored_chain.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SOLVER,
    main,
)
from monitored_chain.reporting import CSV_COLUMNS, read_estimates_csv

from conftest import DRIVE


def _run(tmp_path, *argv):
    return main([*argv, "--outdir", str(tmp_path)])


def test_steady_writes_outputs(tmp_path):
    assert _run(tmp_path, "steady", "--n-sites", "4") == EXIT_OK
    csv_text = (tmp_path / "steady.csv").read_text()
    assert csv_text.startswith(",".join(CSV_COLUMNS))
    assert len(csv_text.strip().splitlines()) == 2
    report = (tmp_path / "steady.txt").read_text()
    assert "D =" in report and "current bond=1,2" in report
    assert (tmp_path / "profile.svg").exists()


def test_steady_no_drive_exits_solver(tmp_path, capsys):
    rc = _run(tmp_path, "steady", "--gamma-s", "0", "--gamma-d", "0")
    assert rc == EXIT_SOLVER
    assert "without drive" in capsys.readouterr().err


def test_steady_invalid_sites_exits_config(tmp_path, capsys):
    rc = _run(tmp_path, "steady", "--n-sites", "1")
    assert rc == EXIT_CONFIG
    assert "lattice.n_sites" in capsys.readouterr().err


def test_sweep_then_fit(tmp_path):
    assert _run(tmp_path, "sweep", "--n-sites", "6") == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 9  # header + 8 default points
    report = (tmp_path / "fit.txt").read_text()
    assert "slope" in report and "r_squared" in report
    assert (tmp_path / "sweep.svg").exists()

    fit_dir = tmp_path / "refit"
    fit_dir.mkdir()
    rc = main(["fit", str(tmp_path / "sweep.csv"), "--outdir", str(fit_dir)])
    assert rc == EXIT_OK
    assert "slope" in (fit_dir / "fit.txt").read_text()


def test_sweep_csv_roundtrip(tmp_path):
    assert _run(tmp_path, "sweep", "--n-sites", "6") == EXIT_OK
    estimates = read_estimates_csv(tmp_path / "sweep.csv")
    points = gamma_sweep(
        LatticeSpec(6), [e.gamma for e in estimates], gamma_s=DRIVE, gamma_d=DRIVE
    )
    assert len(estimates) == 8
    for read_back, point in zip(estimates, points):
        assert read_back.d_value == point.estimate.d_value  # repr round-trip is exact
        assert read_back.engine == "covariance"


def test_sweep_too_few_points_for_fit(tmp_path, capsys):
    rc = _run(tmp_path, "sweep", "--gamma-grid", "0.5", "1", "2")
    assert rc == EXIT_CONFIG
    assert (tmp_path / "sweep.csv").exists()  # points land on disk before the fit


def test_sweep_cross_engine_column(tmp_path):
    rc = _run(
        tmp_path, "sweep", "--n-sites", "3",
        "--engine", "exact", "--engine", "covariance",
        "--gamma-grid", "0.5", "1", "2", "4",
    )
    assert rc == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    assert "rel_disagreement" in header
    col = header.index("rel_disagreement")
    values = [float(row.split(",")[col]) for row in lines[1:] if row.split(",")[col]]
    assert values and max(values) < 1e-6


def test_validate_small_chain(tmp_path, capsys):
    rc = _run(tmp_path, "validate", "--n-sites", "2", "--draws", "2", "--trajectories", "40")
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_validate_size_cap(tmp_path):
    assert _run(tmp_path, "validate", "--n-sites", "13") == EXIT_CONFIG


def test_sweep_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    for d in (a, b):
        assert main(["sweep", "--n-sites", "6", "--outdir", str(d)]) == EXIT_OK
    for name in ("sweep.csv", "fit.txt", "sweep.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_trajectories_subcommand_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    argv = ["trajectories", "--n-sites", "2", "--trajectories", "80", "--t-final", "3"]
    for d in (a, b):
        assert main([*argv, "--outdir", str(d)]) == EXIT_OK
    text = (a / "trajectories.txt").read_text()
    assert "J_1,2" in text and "z=" in text
    assert (a / "trajectories.txt").read_bytes() == (b / "trajectories.txt").read_bytes()


def test_config_file_flag_precedence(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nschema_version = 1\n\n[monitor]\ngamma = 2.0\n")
    rc = _run(tmp_path, "steady", "--config", str(path), "--gamma", "1.0", "--no-figure")
    assert rc == EXIT_OK
    row = (tmp_path / "steady.csv").read_text().strip().splitlines()[1]
    assert row.split(",")[0] == "1.0"


def test_config_file_without_schema_version(tmp_path, capsys):
    path = tmp_path / "run.ini"
    path.write_text("[monitor]\ngamma = 2.0\n")
    rc = _run(tmp_path, "steady", "--config", str(path))
    assert rc == EXIT_CONFIG
    assert "schema_version" in capsys.readouterr().err
