"""Command-line interface.

Subcommands: ``steady`` (one driven steady state), ``sweep`` (gamma sweep
plus scaling fit), ``fit`` (re-fit an existing sweep CSV), ``validate``
(cross-engine property suites), ``trajectories`` (jump unraveling against
the unconditional dynamics).  Configuration comes from an INI file plus
flags, flags win.  Exit codes: 0 success, 2 configuration error, 3 solver
failure, 4 validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import liouville, reporting, trajectories, transport
from .config import (
    MODE_CHOICES,
    SOLVER_CHOICES,
    THREADS_ENV,
    RunConfig,
    apply_overrides,
    load_config,
)
from .errors import ConfigError, EngineSizeError, MonitoredChainError
from .model import (
    build_hamiltonian,
    build_jump_set,
    current_operator,
    fermion_operators,
    fock_state,
)
from .theory import compare_scaling
from .transport import (
    SweepPoint,
    default_sweep_gammas,
    fit_scaling,
    gamma_sweep,
    steady_point,
)
from .validation import run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="INI run configuration; flags override")
    common.add_argument("--n-sites", dest="n_sites", type=int, help="chain length")
    common.add_argument("--hopping", type=float, help="hopping strength t")
    common.add_argument("--gamma", type=float, help="dephasing rate")
    common.add_argument("--gamma-s", dest="gamma_s", type=float, help="pump rate at site 1")
    common.add_argument("--gamma-d", dest="gamma_d", type=float, help="loss rate at site N")
    common.add_argument(
        "--engine",
        action="append",
        choices=("exact", "covariance"),
        help="steady-state engine; repeat for a cross-engine run",
    )
    common.add_argument("--solver", choices=SOLVER_CHOICES, help="steady-state solver")
    common.add_argument("--mode", choices=MODE_CHOICES, help="covariance representation")
    common.add_argument("--t-final", dest="t_final", type=float, help="evolution horizon")
    common.add_argument("--rtol", type=float, help="integrator relative tolerance")
    common.add_argument("--atol", type=float, help="integrator absolute tolerance")
    common.add_argument("--trajectories", dest="trajectories", type=int, metavar="M", help="trajectory count")
    common.add_argument("--master-seed", dest="master_seed", type=int, help="ensemble seed")
    common.add_argument(
        "--workers", type=int, help=f"thread count (default: ${THREADS_ENV} or 1)"
    )
    common.add_argument("--outdir", default=".", help="directory for default output files")
    common.add_argument("--csv", help="CSV output path")
    common.add_argument("--report", help="report output path")
    common.add_argument("--figure", help="figure output path (.svg or any matplotlib format)")
    common.add_argument("--no-figure", action="store_true", help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="monitored-chain",
        description="Transport in a boundary-driven fermion chain under continuous density monitoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("steady", parents=[common], help="solve one driven steady state")
    p_sweep = sub.add_parser("sweep", parents=[common], help="sweep gamma and fit the scaling")
    p_sweep.add_argument(
        "--gamma-grid",
        dest="gamma_grid",
        nargs="+",
        type=float,
        metavar="G",
        help="explicit gamma values (default: 8 log-spaced in [0.125, 8])",
    )
    p_fit = sub.add_parser("fit", parents=[common], help="fit an existing sweep CSV")
    p_fit.add_argument("csv_in", help="sweep CSV produced by the sweep command")
    p_validate = sub.add_parser("validate", parents=[common], help="run the validation suites")
    p_validate.add_argument("--draws", type=int, default=20, help="random draws per suite")
    sub.add_parser("trajectories", parents=[common], help="jump unraveling vs unconditional dynamics")
    return parser


def _out(args, cfg_path, default_name):
    if cfg_path is not None:
        return cfg_path
    return os.path.join(args.outdir, default_name)


def _engines_for_transport(cfg: RunConfig):
    engines = tuple(e for e in cfg.engines if e in transport.ENGINES)
    if len(engines) != len(cfg.engines):
        raise ConfigError(
            "run.engine: steady/sweep commands accept engines "
            f"{transport.ENGINES}, got {cfg.engines}"
        )
    return engines


def cmd_steady(args, cfg: RunConfig) -> int:
    engine = _engines_for_transport(cfg)[0]
    obs, est = steady_point(
        cfg.lattice(), cfg.monitor(), engine=engine, solver=cfg.solver, mode=cfg.mode
    )
    point = SweepPoint(gamma=est.gamma, engine=engine, estimate=est)
    csv_path = _out(args, cfg.csv_path, "steady.csv")
    report_path = _out(args, cfg.report_path, "steady.txt")
    reporting.write_sweep_csv(csv_path, [point])
    report = reporting.format_steady_report(obs, est)
    reporting.write_text(report_path, report)
    written = [csv_path, report_path]
    if cfg.make_figure:
        figure_path = _out(args, cfg.figure_path, "profile.svg")
        reporting.plot_profile(figure_path, obs)
        written.append(figure_path)
    sys.stdout.write(report)
    print("wrote " + ", ".join(written))
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    engines = _engines_for_transport(cfg)
    gammas = cfg.gamma_list if cfg.gamma_list is not None else default_sweep_gammas()
    points = gamma_sweep(
        cfg.lattice(),
        gammas,
        gamma_s=cfg.drive_s,
        gamma_d=cfg.drive_d,
        engines=engines,
        solver=cfg.solver,
        mode=cfg.mode,
        n_workers=cfg.n_workers,
    )
    csv_path = _out(args, cfg.csv_path, "sweep.csv")
    reporting.write_sweep_csv(csv_path, points)
    fit_engine = "covariance" if "covariance" in engines else engines[0]
    estimates = [p.estimate for p in points if p.ok and p.engine == fit_engine]
    failures = [p for p in points if not p.ok]
    for p in failures:
        print(f"point gamma={p.gamma!r} engine={p.engine} failed: {p.error}", file=sys.stderr)
    comparison = compare_scaling(estimates)
    fit = comparison.fit
    report_path = _out(args, cfg.report_path, "fit.txt")
    report = reporting.format_fit_report(
        fit, comparison, header=f"scaling fit, engine={fit_engine}, n_sites={cfg.n_sites}"
    )
    reporting.write_text(report_path, report)
    written = [csv_path, report_path]
    if cfg.make_figure:
        figure_path = _out(args, cfg.figure_path, "sweep.svg")
        reporting.plot_sweep(figure_path, points, fit)
        written.append(figure_path)
    sys.stdout.write(report)
    print("wrote " + ", ".join(written))
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig) -> int:
    estimates = reporting.read_estimates_csv(args.csv_in)
    engines = {e.engine for e in estimates}
    engine = "covariance" if "covariance" in engines else (sorted(engines)[0] if engines else "covariance")
    selected = [e for e in estimates if e.engine == engine]
    comparison = compare_scaling(selected)
    report_path = _out(args, cfg.report_path, "fit.txt")
    report = reporting.format_fit_report(
        comparison.fit, comparison, header=f"scaling fit of {args.csv_in}, engine={engine}"
    )
    reporting.write_text(report_path, report)
    written = [report_path]
    if cfg.make_figure:
        figure_path = _out(args, cfg.figure_path, "fit.svg")
        points = [SweepPoint(gamma=e.gamma, engine=e.engine, estimate=e) for e in selected]
        reporting.plot_sweep(figure_path, points, comparison.fit)
        written.append(figure_path)
    sys.stdout.write(report)
    print("wrote " + ", ".join(written))
    return EXIT_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    n_traj = args.trajectories if args.trajectories is not None else 400
    results = run_suite(
        cfg.n_sites,
        n_draws=args.draws,
        n_trajectories=n_traj,
        master_seed=cfg.master_seed,
        n_workers=cfg.n_workers,
    )
    report = reporting.format_validation_report(results)
    sys.stdout.write(report)
    if cfg.report_path is not None:
        reporting.write_text(cfg.report_path, report)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def cmd_trajectories(args, cfg: RunConfig) -> int:
    lattice = cfg.lattice()
    monitor = cfg.monitor()
    h = build_hamiltonian(lattice)
    ops = fermion_operators(cfg.n_sites)
    jumps = build_jump_set(lattice, monitor)
    psi0 = fock_state([1 if i % 2 == 0 else 0 for i in range(cfg.n_sites)])
    l = liouville.assemble_liouvillian(h, jumps, ops)
    rho_t = liouville.evolve(
        liouville.DensityMatrix.from_pure(psi0), l, cfg.t_final, rtol=cfg.rtol, atol=cfg.atol
    )
    observables = [
        ("J_1,2", current_operator(ops, bond=1, hopping=lattice.hopping)),
        ("n_1", ops.number(1)),
    ]
    lines = [
        f"# trajectories, n_sites={cfg.n_sites}, gamma={reporting.fmt_float(monitor.gamma)}, "
        f"M={cfg.n_trajectories}, master_seed={cfg.master_seed}, t_final={reporting.fmt_float(cfg.t_final)}"
    ]
    for name, obs in observables:
        est = trajectories.trajectory_average(
            obs,
            psi0,
            h,
            jumps,
            ops,
            cfg.t_final,
            cfg.n_trajectories,
            cfg.master_seed,
            rtol=cfg.rtol,
            atol=cfg.atol,
            n_workers=cfg.n_workers,
        )
        exact = liouville.expectation(rho_t, obs)
        z = abs(est.mean - exact) / est.stderr if est.stderr > 0 else float("inf")
        lines.append(
            f"{name}: mean={reporting.fmt_float(est.mean)} stderr={reporting.fmt_float(est.stderr)} "
            f"lindblad={reporting.fmt_float(exact)} z={reporting.fmt_float(z)}"
        )
    report = "\n".join(lines) + "\n"
    report_path = _out(args, cfg.report_path, "trajectories.txt")
    reporting.write_text(report_path, report)
    sys.stdout.write(report)
    print(f"wrote {report_path}")
    return EXIT_OK


_COMMANDS = {
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "validate": cmd_validate,
    "trajectories": cmd_trajectories,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, EngineSizeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MonitoredChainError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
