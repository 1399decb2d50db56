"""Run configuration: INI file plus command-line overrides, flags win.

The file dialect is configparser INI with four sections ([run], [lattice],
[monitor], [trajectories], [output]); a `schema_version` key in [run] is
required so old configs fail loudly instead of silently reinterpreting.
Every field is validated with a message naming the section and key.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .model import LatticeSpec, MonitorSpec

SCHEMA_VERSION = 1
ENGINE_CHOICES = ("exact", "covariance", "trajectories")
SOLVER_CHOICES = ("linear-solve", "null-space", "time-evolve")
MODE_CHOICES = ("packed", "full")
THREADS_ENV = "MONITORED_CHAIN_THREADS"

_KNOWN_KEYS = {
    "run": {"schema_version", "engine", "solver", "mode", "t_final", "rtol", "atol"},
    "lattice": {"n_sites", "hopping"},
    "monitor": {"gamma", "gamma_list", "gamma_s", "gamma_d"},
    "trajectories": {"n_trajectories", "master_seed"},
    "output": {"csv", "report", "figure"},
}


@dataclass
class RunConfig:
    """Validated parameters for one CLI command."""

    n_sites: int = 6
    hopping: float = 1.0
    gamma: float = 1.0
    gamma_list: list | None = None
    gamma_s: float | None = None  # None resolves to 0.01 * hopping
    gamma_d: float | None = None
    engines: tuple = ("covariance",)
    solver: str = "linear-solve"
    mode: str = "packed"
    t_final: float = 10.0
    rtol: float = 1e-8
    atol: float = 1e-10
    n_trajectories: int = 1000
    master_seed: int = 2024
    csv_path: str | None = None
    report_path: str | None = None
    figure_path: str | None = None
    make_figure: bool = True
    n_workers: int = 1

    @property
    def drive_s(self) -> float:
        return 0.01 * self.hopping if self.gamma_s is None else self.gamma_s

    @property
    def drive_d(self) -> float:
        return 0.01 * self.hopping if self.gamma_d is None else self.gamma_d

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(n_sites=self.n_sites, hopping=self.hopping)

    def monitor(self, gamma: float | None = None) -> MonitorSpec:
        return MonitorSpec(
            gamma=self.gamma if gamma is None else gamma,
            gamma_s=self.drive_s,
            gamma_d=self.drive_d,
        )

    def validate(self) -> "RunConfig":
        def bad(key, msg):
            return ConfigError(f"{key}: {msg}")

        if not isinstance(self.n_sites, int) or self.n_sites < 2:
            raise bad("lattice.n_sites", f"must be an integer >= 2, got {self.n_sites!r}")
        if not np.isfinite(self.hopping) or self.hopping <= 0:
            raise bad("lattice.hopping", f"must be finite and > 0, got {self.hopping!r}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise bad("monitor.gamma", f"must be finite and >= 0, got {self.gamma!r}")
        for name, value in (("gamma_s", self.gamma_s), ("gamma_d", self.gamma_d)):
            if value is not None and (not np.isfinite(value) or value < 0):
                raise bad(f"monitor.{name}", f"must be finite and >= 0, got {value!r}")
        if self.gamma_list is not None:
            if len(self.gamma_list) == 0:
                raise bad("monitor.gamma_list", "must not be empty when given")
            if any(not np.isfinite(g) or g <= 0 for g in self.gamma_list):
                raise bad("monitor.gamma_list", "entries must be finite and > 0")
            if len(set(self.gamma_list)) != len(self.gamma_list):
                raise bad("monitor.gamma_list", "entries must be distinct")
        if not self.engines:
            raise bad("run.engine", "at least one engine required")
        for engine in self.engines:
            if engine not in ENGINE_CHOICES:
                raise bad("run.engine", f"unknown engine {engine!r}, expected one of {ENGINE_CHOICES}")
        if len(set(self.engines)) != len(self.engines):
            raise bad("run.engine", "engines must be distinct")
        if self.solver not in SOLVER_CHOICES:
            raise bad("run.solver", f"unknown solver {self.solver!r}, expected one of {SOLVER_CHOICES}")
        if self.mode not in MODE_CHOICES:
            raise bad("run.mode", f"unknown mode {self.mode!r}, expected one of {MODE_CHOICES}")
        if not np.isfinite(self.t_final) or self.t_final <= 0:
            raise bad("run.t_final", f"must be finite and > 0, got {self.t_final!r}")
        for name, value in (("rtol", self.rtol), ("atol", self.atol)):
            if not np.isfinite(value) or value <= 0:
                raise bad(f"run.{name}", f"must be finite and > 0, got {value!r}")
        if not isinstance(self.n_trajectories, int) or self.n_trajectories < 2:
            raise bad("trajectories.n_trajectories", f"must be an integer >= 2, got {self.n_trajectories!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise bad("trajectories.master_seed", f"must be a non-negative integer, got {self.master_seed!r}")
        if not isinstance(self.n_workers, int) or self.n_workers < 1:
            raise bad("run.workers", f"must be an integer >= 1, got {self.n_workers!r}")
        return self


def _parse_gamma_list(text: str) -> list:
    entries = text.replace(",", " ").split()
    try:
        return [float(e) for e in entries]
    except ValueError as exc:
        raise ConfigError(f"monitor.gamma_list: unparseable entry ({exc})") from exc


def _get(parser, section, key, conv, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from exc


def load_config(path: str | None) -> RunConfig:
    """RunConfig from an INI file; defaults when path is None."""
    if path is None:
        return RunConfig().validate()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(parser.options(section)) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(
                f"unknown keys in [{section}]: {', '.join(sorted(unknown))}"
            )
    version = _get(parser, "run", "schema_version", int, None)
    if version is None:
        raise ConfigError("run.schema_version: required (current version is 1)")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"run.schema_version: file has {version}, this build reads {SCHEMA_VERSION}"
        )
    engines = _get(parser, "run", "engine", str, None)
    cfg = RunConfig(
        n_sites=_get(parser, "lattice", "n_sites", int, 6),
        hopping=_get(parser, "lattice", "hopping", float, 1.0),
        gamma=_get(parser, "monitor", "gamma", float, 1.0),
        gamma_list=_get(parser, "monitor", "gamma_list", _parse_gamma_list, None),
        gamma_s=_get(parser, "monitor", "gamma_s", float, None),
        gamma_d=_get(parser, "monitor", "gamma_d", float, None),
        engines=tuple(engines.replace(",", " ").split()) if engines else ("covariance",),
        solver=_get(parser, "run", "solver", str, "linear-solve"),
        mode=_get(parser, "run", "mode", str, "packed"),
        t_final=_get(parser, "run", "t_final", float, 10.0),
        rtol=_get(parser, "run", "rtol", float, 1e-8),
        atol=_get(parser, "run", "atol", float, 1e-10),
        n_trajectories=_get(parser, "trajectories", "n_trajectories", int, 1000),
        master_seed=_get(parser, "trajectories", "master_seed", int, 2024),
        csv_path=_get(parser, "output", "csv", str, None),
        report_path=_get(parser, "output", "report", str, None),
        figure_path=_get(parser, "output", "figure", str, None),
    )
    return cfg.validate()


def env_workers() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV}: cannot parse {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"{THREADS_ENV}: must be >= 1, got {value}")
    return value


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    """Command-line flags override both file values and defaults."""
    updates = {}
    mapping = [
        ("n_sites", "n_sites"),
        ("hopping", "hopping"),
        ("gamma", "gamma"),
        ("gamma_s", "gamma_s"),
        ("gamma_d", "gamma_d"),
        ("solver", "solver"),
        ("mode", "mode"),
        ("t_final", "t_final"),
        ("rtol", "rtol"),
        ("atol", "atol"),
        ("trajectories", "n_trajectories"),
        ("master_seed", "master_seed"),
        ("csv", "csv_path"),
        ("report", "report_path"),
        ("figure", "figure_path"),
    ]
    for arg_name, field_name in mapping:
        value = getattr(args, arg_name, None)
        if value is not None:
            updates[field_name] = value
    if getattr(args, "engine", None):
        updates["engines"] = tuple(args.engine)
    if getattr(args, "gamma_grid", None):
        updates["gamma_list"] = [float(g) for g in args.gamma_grid]
    workers = getattr(args, "workers", None)
    if workers is None:
        workers = env_workers()
    if workers is not None:
        updates["n_workers"] = workers
    if getattr(args, "no_figure", False):
        updates["make_figure"] = False
    return replace(cfg, **updates).validate()
