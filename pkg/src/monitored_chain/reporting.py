"""Delimited output, fit reports and figures.

Everything written here must be byte-identical across repeated runs with
the same configuration and seeds: floats are serialized with repr (exact
round-trip), CSV rows follow input ordering, and the SVG backend is pinned
to a fixed hash salt with no embedded timestamps.
"""

from __future__ import annotations

import csv
import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigError
from .theory import ScalingComparison
from .transport import DiffusionEstimate, ScalingFit, SweepPoint, TransportObservables

CSV_COLUMNS = [
    "gamma",
    "D",
    "J12",
    "n1",
    "nN",
    "n_sites",
    "engine",
    "residual",
    "uniformity_spread",
    "status",
]

matplotlib.rcParams["svg.hashsalt"] = "monitored-chain"


def fmt_float(value) -> str:
    return repr(float(value))


def render_sweep_csv(points: list[SweepPoint]) -> str:
    """CSV text for sweep results; failed points keep their gamma and status.

    A cross-engine run (any point carrying a disagreement) appends a
    rel_disagreement column.
    """
    with_disagreement = any(p.disagreement is not None for p in points)
    columns = CSV_COLUMNS + (["rel_disagreement"] if with_disagreement else [])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for p in points:
        if p.ok:
            e = p.estimate
            row = [
                fmt_float(e.gamma),
                fmt_float(e.d_value),
                fmt_float(e.j12),
                fmt_float(e.n1),
                fmt_float(e.nN),
                str(e.n_sites),
                e.engine,
                fmt_float(e.residual),
                fmt_float(e.uniformity_spread),
                "ok",
            ]
        else:
            row = [fmt_float(p.gamma), "", "", "", "", "", p.engine, "", "", f"error: {p.error}"]
        if with_disagreement:
            row.append("" if p.disagreement is None else fmt_float(p.disagreement))
        writer.writerow(row)
    return buf.getvalue()


def write_sweep_csv(path, points: list[SweepPoint]):
    with open(path, "w", newline="") as fh:
        fh.write(render_sweep_csv(points))


def read_estimates_csv(path) -> list[DiffusionEstimate]:
    """Load the successful rows of a sweep CSV back into estimates."""
    estimates = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS[:9] if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"sweep CSV is missing columns: {', '.join(missing)}")
        for row in reader:
            if row.get("status", "ok") != "ok":
                continue
            estimates.append(
                DiffusionEstimate(
                    gamma=float(row["gamma"]),
                    d_value=float(row["D"]),
                    j12=float(row["J12"]),
                    n1=float(row["n1"]),
                    nN=float(row["nN"]),
                    n_sites=int(row["n_sites"]),
                    engine=row["engine"],
                    residual=float(row["residual"]),
                    uniformity_spread=float(row["uniformity_spread"]),
                )
            )
    return estimates


def format_fit_report(
    fit: ScalingFit, comparison: ScalingComparison | None = None, header: str = ""
) -> str:
    lines = []
    if header:
        lines.append(f"# {header}")
    lines.append(f"slope = {fmt_float(fit.slope)}")
    lines.append(f"slope_stderr = {fmt_float(fit.slope_stderr)}")
    lines.append(f"intercept = {fmt_float(fit.intercept)}")
    lines.append(f"r_squared = {fmt_float(fit.r_squared)}")
    lines.append(f"n_points = {fit.n_points}")
    for (lg, ld), res in zip(fit.points, fit.residuals):
        lines.append(f"point log_gamma={fmt_float(lg)} log_D={fmt_float(ld)} residual={fmt_float(res)}")
    if comparison is not None:
        lines.append(f"theory_slope = {fmt_float(comparison.theory_slope)}")
        lines.append(f"slope_deviation = {fmt_float(comparison.slope_deviation)}")
        lines.append(f"prefactor_mean_D_gamma = {fmt_float(comparison.prefactor_mean)}")
        lines.append(f"prefactor_relative_spread = {fmt_float(comparison.prefactor_spread)}")
    return "\n".join(lines) + "\n"


def format_steady_report(
    obs: TransportObservables, estimate: DiffusionEstimate
) -> str:
    lines = [
        f"# steady state, engine={estimate.engine}, gamma={fmt_float(estimate.gamma)}",
        f"n_sites = {estimate.n_sites}",
        f"D = {fmt_float(estimate.d_value)}",
        f"J12 = {fmt_float(estimate.j12)}",
        f"residual = {fmt_float(estimate.residual)}",
        f"uniformity_spread = {fmt_float(estimate.uniformity_spread)}",
    ]
    for i, n in enumerate(obs.densities, start=1):
        lines.append(f"density site={i} n={fmt_float(n)}")
    for i, j in enumerate(obs.bond_currents, start=1):
        lines.append(f"current bond={i},{i + 1} J={fmt_float(j)}")
    return "\n".join(lines) + "\n"


def format_validation_report(results) -> str:
    lines = [r.line() for r in results]
    n_fail = sum(1 for r in results if not r.passed)
    lines.append(f"# {len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"


def write_text(path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _save(fig, path):
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def plot_sweep(path, points: list[SweepPoint], fit: ScalingFit | None = None):
    """Log-log scatter of D against gamma with the fitted power law."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6), constrained_layout=True)
    markers = {"covariance": "o", "exact": "s"}
    for engine in sorted({p.engine for p in points if p.ok}):
        gs = [p.gamma for p in points if p.ok and p.engine == engine]
        ds = [p.estimate.d_value for p in points if p.ok and p.engine == engine]
        ax.loglog(gs, ds, markers.get(engine, "o"), mfc="none", label=engine)
    if fit is not None:
        gs = [p.gamma for p in points if p.ok]
        span = np.geomspace(min(gs), max(gs), 64)
        ax.loglog(
            span,
            np.exp(fit.intercept) * span**fit.slope,
            "k--",
            lw=1,
            label=f"slope {fit.slope:.3f}",
        )
    ax.set_xlabel(r"$\gamma$")
    ax.set_ylabel(r"$D$")
    ax.legend(frameon=False)
    _save(fig, path)


def plot_profile(path, obs: TransportObservables):
    """Density profile and bond currents of one steady state."""
    n = len(obs.densities)
    fig, (ax_n, ax_j) = plt.subplots(
        2, 1, figsize=(5.0, 4.6), sharex=True, constrained_layout=True
    )
    ax_n.plot(range(1, n + 1), obs.densities, "o-")
    ax_n.set_ylabel(r"$\langle n_i \rangle$")
    ax_j.plot(np.arange(1, n) + 0.5, obs.bond_currents, "s-")
    ax_j.set_ylabel(r"$\langle J_{i,i+1} \rangle$")
    ax_j.set_xlabel("site")
    _save(fig, path)
