"""INI configuration loading, validation and flag precedence."""

import pytest

from monitored_chain import ConfigError
from monitored_chain.cli import build_parser
from monitored_chain.config import (
    RunConfig,
    THREADS_ENV,
    apply_overrides,
    env_workers,
    load_config,
)


def _write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


def test_defaults():
    cfg = load_config(None)
    assert cfg.n_sites == 6 and cfg.gamma == 1.0
    assert cfg.engines == ("covariance",)
    assert cfg.drive_s == 0.01 and cfg.drive_d == 0.01
    assert cfg.master_seed == 2024


def test_ini_values(tmp_path):
    path = _write(
        tmp_path,
        """
        [run]
        schema_version = 1
        solver = time-evolve
        engine = exact covariance

        [lattice]
        n_sites = 4
        hopping = 0.5

        [monitor]
        gamma = 2.0
        gamma_list = 0.5, 1, 2, 4

        [output]
        csv = out/points.csv
        """,
    )
    cfg = load_config(path)
    assert cfg.n_sites == 4 and cfg.hopping == 0.5
    assert cfg.solver == "time-evolve"
    assert cfg.engines == ("exact", "covariance")
    assert cfg.gamma == 2.0 and cfg.gamma_list == [0.5, 1.0, 2.0, 4.0]
    assert cfg.csv_path == "out/points.csv"
    # drive defaults scale with the hopping
    assert cfg.drive_s == 0.005


def test_schema_version_required(tmp_path):
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(_write(tmp_path, "[lattice]\nn_sites = 4\n"))
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(_write(tmp_path, "[run]\nschema_version = 2\n"))


def test_unknown_section_and_key(tmp_path):
    with pytest.raises(ConfigError, match=r"unknown config section \[extras\]"):
        load_config(_write(tmp_path, "[run]\nschema_version = 1\n[extras]\nx = 1\n"))
    with pytest.raises(ConfigError, match="unknown keys"):
        load_config(_write(tmp_path, "[run]\nschema_version = 1\nspeed = fast\n"))


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/run.ini")


def test_field_level_messages():
    with pytest.raises(ConfigError, match="lattice.n_sites"):
        RunConfig(n_sites=1).validate()
    with pytest.raises(ConfigError, match="run.solver"):
        RunConfig(solver="magic").validate()
    with pytest.raises(ConfigError, match="monitor.gamma_list"):
        RunConfig(gamma_list=[0.5, 0.5]).validate()
    with pytest.raises(ConfigError, match="run.engine"):
        RunConfig(engines=("covariance", "warp")).validate()


def test_env_workers(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert env_workers() is None
    monkeypatch.setenv(THREADS_ENV, "3")
    assert env_workers() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ConfigError, match=THREADS_ENV):
        env_workers()
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ConfigError, match=THREADS_ENV):
        env_workers()


def test_flag_overrides(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    args = build_parser().parse_args(
        ["steady", "--gamma", "0.5", "--engine", "exact", "--workers", "2", "--no-figure"]
    )
    cfg = apply_overrides(load_config(None), args)
    assert cfg.gamma == 0.5
    assert cfg.engines == ("exact",)
    assert cfg.n_workers == 2
    assert cfg.make_figure is False


def test_workers_flag_beats_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "4")
    args = build_parser().parse_args(["sweep"])
    assert apply_overrides(load_config(None), args).n_workers == 4
    args = build_parser().parse_args(["sweep", "--workers", "2"])
    assert apply_overrides(load_config(None), args).n_workers == 2


def test_gamma_grid_override(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    args = build_parser().parse_args(["sweep", "--gamma-grid", "0.5", "1", "2", "4"])
    cfg = apply_overrides(load_config(None), args)
    assert cfg.gamma_list == [0.5, 1.0, 2.0, 4.0]


def test_spec_builders():
    cfg = load_config(None)
    lattice = cfg.lattice()
    assert lattice.n_sites == 6 and lattice.hopping == 1.0
    monitor = cfg.monitor(2.0)
    assert monitor.gamma == 2.0 and monitor.gamma_s == 0.01
