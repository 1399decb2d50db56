"""Steady-state transport: bond currents, Fick's-law diffusion, gamma sweeps.

The pipeline solves the driven steady state at each dephasing strength,
reads the bond current and the boundary densities off the covariance
matrix, extracts a diffusion coefficient from the discrete Fick's law and
fits log D against log gamma.  Current convention: with the chain
Hamiltonian h_{i,i+1} = +t,

    J_{i,i+1} = i t (C_{i,i+1} - C_{i+1,i}) = -2 t Im C_{i,i+1}

is positive for flow from the pumped site 1 towards the lossy site N; the
continuity check below pins sign and prefactor against the generator.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .covariance import (
    CovarianceGenerator,
    CovarianceMatrix,
    covariance_from_density,
    derive_generator,
    steady_covariance,
)
from .errors import (
    ConfigError,
    IntegrationError,
    MonitoredChainError,
    UndefinedDiffusionError,
)
from .liouville import assemble_liouvillian, steady_state
from .model import (
    LatticeSpec,
    MonitorSpec,
    build_hamiltonian,
    build_jump_set,
    fermion_operators,
)

# Converged driven steady states must carry a spatially uniform current.
UNIFORMITY_RTOL = 1e-6

# Below this density drop the Fick quotient is numerical noise.
GRADIENT_FLOOR = 1e-12

ENGINES = ("exact", "covariance")


@dataclass
class TransportObservables:
    """Bond currents and site densities of one steady state."""

    bond_currents: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        self.bond_currents = np.asarray(self.bond_currents, dtype=float)
        self.densities = np.asarray(self.densities, dtype=float)
        if self.bond_currents.shape != (len(self.densities) - 1,):
            raise ConfigError("need exactly N-1 bond currents for N densities")
        if np.min(self.densities) < -1e-8 or np.max(self.densities) > 1 + 1e-8:
            raise ConfigError("site densities outside [0, 1]")

    @property
    def uniformity_spread(self) -> float:
        return float(np.max(self.bond_currents) - np.min(self.bond_currents))


@dataclass
class DiffusionEstimate:
    """Fick's-law diffusion coefficient at one dephasing strength."""

    gamma: float
    d_value: float
    j12: float
    n1: float
    nN: float
    n_sites: int
    engine: str
    residual: float
    uniformity_spread: float


@dataclass
class ScalingFit:
    """OLS fit of ln D against ln gamma."""

    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float
    points: list
    residuals: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.points)


def bond_currents(c: CovarianceMatrix, hopping: float) -> np.ndarray:
    """<J_{i,i+1}> for every bond of a uniform chain."""
    upper = np.diagonal(c.c, offset=1)
    return -2.0 * hopping * np.imag(upper)


def transport_observables(c: CovarianceMatrix, hopping: float) -> TransportObservables:
    return TransportObservables(
        bond_currents=bond_currents(c, hopping), densities=c.densities()
    )


def continuity_check(c: CovarianceMatrix, gen: CovarianceGenerator) -> float:
    """Max violation of the discrete continuity equation.

    d<n_i>/dt from the generator must equal J_{i-1,i} - J_{i,i+1} plus the
    pump inflow gamma_s (1 - n_1) at site 1 and the loss outflow
    -gamma_d n_N at site N; dephasing moves no particles.  This is the
    validator that fixes the sign and prefactor of the current.
    """
    n = gen.n_sites
    lhs = np.real(np.diagonal(gen.apply(c.c)))
    # per-bond hopping read off h so the check covers non-uniform chains too
    t_bond = np.real(np.diagonal(gen.h, offset=1))
    upper = np.diagonal(c.c, offset=1)
    currents = -2.0 * t_bond * np.imag(upper)
    flow = np.zeros(n)
    flow[:-1] -= currents  # outflow through the right bond
    flow[1:] += currents  # inflow through the left bond
    dens = np.real(np.diagonal(c.c))
    flow[0] += gen.gamma_s * (1.0 - dens[0])
    flow[-1] -= gen.gamma_d * dens[-1]
    return float(np.max(np.abs(lhs - flow)))


def fick_diffusion(
    obs: TransportObservables,
    n_sites: int,
    *,
    gamma: float = float("nan"),
    engine: str = "covariance",
    residual: float = float("nan"),
    uniformity_rtol: float = UNIFORMITY_RTOL,
) -> DiffusionEstimate:
    """Diffusion coefficient from the discrete Fick's law.

    D = N <J_{1,2}> / (<n_1> - <n_N>), using bond (1,2) and the end-to-end
    density drop over the distance N; positive for source-to-drain flow.
    Uniformity of the current profile is asserted first: a non-uniform
    profile means the state is not steady and the quotient is meaningless.
    """
    if len(obs.densities) != n_sites:
        raise ConfigError(
            f"observables carry {len(obs.densities)} sites, expected {n_sites}"
        )
    j12 = float(obs.bond_currents[0])
    n1 = float(obs.densities[0])
    nN = float(obs.densities[-1])
    drop = n1 - nN
    if abs(drop) <= GRADIENT_FLOOR:
        raise UndefinedDiffusionError(
            f"density drop n_1 - n_N = {drop:.3e} too small to define D"
        )
    scale = np.max(np.abs(obs.bond_currents))
    if scale > 0 and obs.uniformity_spread > uniformity_rtol * scale:
        raise IntegrationError(
            f"bond currents not uniform: spread {obs.uniformity_spread:.3e} "
            f"exceeds {uniformity_rtol:.1e} x max |J| = {uniformity_rtol * scale:.3e}"
        )
    return DiffusionEstimate(
        gamma=float(gamma),
        d_value=n_sites * j12 / drop,
        j12=j12,
        n1=n1,
        nN=nN,
        n_sites=n_sites,
        engine=engine,
        residual=float(residual),
        uniformity_spread=obs.uniformity_spread,
    )


def steady_point(
    lattice: LatticeSpec,
    monitor: MonitorSpec,
    *,
    engine: str = "covariance",
    solver: str = "linear-solve",
    mode: str = "packed",
) -> tuple[TransportObservables, DiffusionEstimate]:
    """Steady state plus Fick extraction at a single parameter point."""
    h = build_hamiltonian(lattice)
    if engine == "covariance":
        gen = derive_generator(h, monitor)
        if solver == "null-space":
            raise ConfigError(
                "solver 'null-space' applies to the exact engine; "
                "use linear-solve or time-evolve with the covariance engine"
            )
        result = steady_covariance(gen, mode=mode, method=solver)
        cov, residual = result.cov, result.residual
    elif engine == "exact":
        ops = fermion_operators(lattice.n_sites)
        jumps = build_jump_set(lattice, monitor)
        l = assemble_liouvillian(h, jumps, ops)
        result = steady_state(l, method=solver)
        cov, residual = covariance_from_density(result.state, ops), result.residual
    else:
        raise ConfigError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    obs = transport_observables(cov, lattice.hopping)
    estimate = fick_diffusion(
        obs,
        lattice.n_sites,
        gamma=monitor.gamma,
        engine=engine,
        residual=residual,
    )
    return obs, estimate


def estimate_point(
    lattice: LatticeSpec,
    monitor: MonitorSpec,
    *,
    engine: str = "covariance",
    solver: str = "linear-solve",
    mode: str = "packed",
) -> DiffusionEstimate:
    return steady_point(lattice, monitor, engine=engine, solver=solver, mode=mode)[1]


@dataclass
class SweepPoint:
    """One (gamma, engine) result of a sweep; failures are recorded, not raised."""

    gamma: float
    engine: str
    estimate: DiffusionEstimate | None = None
    error: str | None = None
    disagreement: float | None = None

    @property
    def ok(self) -> bool:
        return self.estimate is not None


def gamma_sweep(
    lattice: LatticeSpec,
    gammas,
    *,
    gamma_s: float,
    gamma_d: float,
    engines=("covariance",),
    solver: str = "linear-solve",
    mode: str = "packed",
    n_workers: int = 1,
) -> list[SweepPoint]:
    """One DiffusionEstimate per (gamma, engine).

    Per-point failures are captured in the returned SweepPoint instead of
    aborting the sweep.  With more than one engine the per-gamma relative
    disagreement of D is attached to every point of that gamma.  Points may
    be solved on a thread pool; the output ordering is by the input gamma
    list, then by engine, independent of scheduling.
    """
    gammas = [float(g) for g in gammas]
    if any(g <= 0 for g in gammas):
        raise ConfigError("sweep gammas must be positive")
    if len(set(gammas)) != len(gammas):
        raise ConfigError("sweep gammas must be distinct")
    engines = tuple(engines)
    for engine in engines:
        if engine not in ENGINES:
            raise ConfigError(f"unknown engine {engine!r}; expected one of {ENGINES}")

    tasks = [(g, engine) for g in gammas for engine in engines]

    def solve(task):
        g, engine = task
        monitor = MonitorSpec(gamma=g, gamma_s=gamma_s, gamma_d=gamma_d)
        try:
            est = estimate_point(
                lattice, monitor, engine=engine, solver=solver, mode=mode
            )
            return SweepPoint(gamma=g, engine=engine, estimate=est)
        except MonitoredChainError as exc:
            return SweepPoint(gamma=g, engine=engine, error=str(exc))

    if n_workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            points = list(pool.map(solve, tasks))
    else:
        points = [solve(t) for t in tasks]

    if len(engines) > 1:
        by_gamma = {}
        for p in points:
            if p.ok:
                by_gamma.setdefault(p.gamma, []).append(p.estimate.d_value)
        for p in points:
            values = by_gamma.get(p.gamma, [])
            if len(values) == len(engines):
                ref = max(abs(v) for v in values)
                p.disagreement = (max(values) - min(values)) / ref if ref else 0.0
    return points


def fit_scaling(estimates) -> ScalingFit:
    """Ordinary least squares of ln D on ln gamma.

    Requires at least 4 usable estimates (positive, finite D); slope
    standard error comes from the usual OLS variance formula.
    """
    usable = [
        e
        for e in estimates
        if np.isfinite(e.d_value) and e.d_value > 0 and np.isfinite(e.gamma) and e.gamma > 0
    ]
    if len(usable) < 4:
        raise ConfigError(
            f"scaling fit requires at least 4 usable estimates, got {len(usable)}"
        )
    x = np.log(np.array([e.gamma for e in usable]))
    y = np.log(np.array([e.d_value for e in usable]))
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    residuals = y - predicted
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = len(usable) - 2
    sxx = float(np.sum((x - np.mean(x)) ** 2))
    slope_stderr = float(np.sqrt(ss_res / dof / sxx)) if dof > 0 else float("nan")
    return ScalingFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        slope_stderr=slope_stderr,
        points=list(zip(x.tolist(), y.tolist())),
        residuals=residuals,
    )


def default_sweep_gammas(n_points: int = 8, low: float = 0.125, high: float = 8.0):
    """Log-spaced dephasing grid covering both scaling regimes."""
    return np.geomspace(low, high, n_points).tolist()
