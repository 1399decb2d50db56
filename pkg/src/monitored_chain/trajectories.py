"""Quantum-jump Monte Carlo unraveling of the monitored chain.

Each trajectory evolves a pure state under the non-Hermitian drift

    H_eff = H - (i/2) sum_k r_k L_k^dag L_k,

letting the squared norm decay until it crosses a uniform random
threshold; a jump channel k is then drawn with probability proportional to
r_k ||L_k psi||^2, the state is replaced by the normalized L_k psi, and a
fresh threshold is drawn.  Averages over trajectories reproduce the
unconditional Lindblad dynamics for observables linear in rho, which the
validation suite checks against the exact engine.

Seeding: trajectory m uses the 64-bit integer produced by
numpy.random.SeedSequence(master_seed, spawn_key=(m,)), so parallel and
serial runs draw identical streams; means are reduced with compensated
summation to keep the result order-independent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import ConfigError, HermiticityError, IntegrationError
from .liouville import DEFAULT_ATOL, DEFAULT_RTOL
from .model import FermionOps, JumpSpec, QuadraticHamiltonian, jump_operator, many_body_hamiltonian

# Dense algebra beats sparse dispatch overhead for small Fock spaces.
_DENSE_DIM_LIMIT = 256


@dataclass
class TrajectoryState:
    """Endpoint of one unraveled trajectory."""

    psi: np.ndarray
    time: float
    seed: int
    jump_log: list = field(default_factory=list)


@dataclass
class EnsembleEstimate:
    """Trajectory-mean of one observable with its standard error."""

    mean: float
    stderr: float
    n_trajectories: int
    master_seed: int


def effective_hamiltonian(
    h: QuadraticHamiltonian, jumps: list[JumpSpec], ops: FermionOps
) -> sp.csr_matrix:
    """H - (i/2) sum_k r_k L_k^dag L_k on the full Fock space."""
    heff = many_body_hamiltonian(h, ops).astype(complex)
    for jump in jumps:
        lk = jump_operator(jump, ops)
        heff = heff - 0.5j * jump.rate * (lk.conj().T @ lk)
    return heff.tocsr()


def pure_expectation(psi: np.ndarray, obs, imag_tol: float = 1e-10) -> float:
    """<psi|obs|psi> for Hermitian obs on a normalized state."""
    val = complex(np.vdot(psi, obs @ psi))
    if abs(val.imag) > imag_tol:
        raise HermiticityError(
            f"pure-state expectation has imaginary part {val.imag:.3e} > {imag_tol:.1e}"
        )
    return float(val.real)


def _draw_threshold(rng) -> float:
    # u = 0 would put the jump at infinite time in log terms; redraw
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def sample_trajectory(
    psi0: np.ndarray,
    h: QuadraticHamiltonian,
    jumps: list[JumpSpec],
    ops: FermionOps,
    t_final: float,
    seed: int,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TrajectoryState:
    """Evolve one quantum-jump trajectory from t=0 to t_final.

    The threshold crossing is located by the integrator's event root
    finder on the dense output, well below the 1e-10 squared-norm
    tolerance the jump statistics require.  Returns the normalized final
    state and the full jump log (time, index into ``jumps``).
    """
    psi = np.asarray(psi0, dtype=complex)
    norm = np.linalg.norm(psi)
    if not np.isclose(norm, 1.0, atol=1e-10):
        raise ConfigError(f"initial state must be normalized, got |psi| = {norm:.6f}")
    psi = psi / norm
    heff = effective_hamiltonian(h, jumps, ops)
    if heff.shape[0] <= _DENSE_DIM_LIMIT:
        heff = heff.toarray()
        jump_mats = [jump_operator(j, ops).toarray() for j in jumps]
    else:
        jump_mats = [jump_operator(j, ops).tocsr() for j in jumps]
    rates = np.array([j.rate for j in jumps])
    rng = np.random.default_rng(seed)
    jump_log = []
    t = 0.0

    def drift(time, y):
        return -1j * (heff @ y)

    while t < t_final:
        threshold = _draw_threshold(rng)

        def crossing(time, y):
            return float(np.vdot(y, y).real) - threshold

        crossing.terminal = True
        crossing.direction = -1
        sol = solve_ivp(
            drift,
            (t, t_final),
            psi,
            method="DOP853",
            events=crossing,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise IntegrationError(f"trajectory integration failed: {sol.message}")
        if sol.status == 1:  # jump fired
            t = float(sol.t_events[0][0])
            psi = sol.y_events[0][0]
            weights = rates * np.array(
                [float(np.vdot(m @ psi, m @ psi).real) for m in jump_mats]
            )
            total = weights.sum()
            if total <= 0:
                raise IntegrationError(
                    f"norm threshold crossed at t={t:g} but every jump channel "
                    "has zero weight; step size too large"
                )
            k = int(np.searchsorted(np.cumsum(weights), rng.random() * total))
            k = min(k, len(jumps) - 1)
            psi = jump_mats[k] @ psi
            psi = psi / np.linalg.norm(psi)
            jump_log.append((t, k))
        else:
            psi = sol.y[:, -1]
            nsq = float(np.vdot(psi, psi).real)
            if nsq < threshold - 1e-8:
                raise IntegrationError(
                    "squared norm fell below the jump threshold without an "
                    "event being located; decrease the step tolerances"
                )
            psi = psi / np.sqrt(nsq)
            t = t_final
    return TrajectoryState(psi=psi, time=t_final, seed=seed, jump_log=jump_log)


def trajectory_seed(master_seed: int, index: int) -> int:
    """Deterministic per-trajectory seed (SeedSequence spawn-key mix)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def trajectory_average(
    observable,
    psi0: np.ndarray,
    h: QuadraticHamiltonian,
    jumps: list[JumpSpec],
    ops: FermionOps,
    t_final: float,
    n_trajectories: int,
    master_seed: int,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    n_workers: int = 1,
) -> EnsembleEstimate:
    """Mean and standard error of <psi_m|observable|psi_m> over trajectories.

    Deterministic for fixed (master_seed, n_trajectories, tolerances)
    regardless of n_workers: each trajectory owns the seed derived from its
    index and the reduction uses exact compensated sums.
    """
    if n_trajectories < 2:
        raise ConfigError("trajectory averaging needs at least 2 trajectories")

    def run(index):
        state = sample_trajectory(
            psi0,
            h,
            jumps,
            ops,
            t_final,
            trajectory_seed(master_seed, index),
            rtol=rtol,
            atol=atol,
        )
        return pure_expectation(state.psi, observable)

    indices = range(n_trajectories)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            values = list(pool.map(run, indices))
    else:
        values = [run(i) for i in indices]
    mean = math.fsum(values) / n_trajectories
    var = math.fsum((v - mean) ** 2 for v in values) / (n_trajectories - 1)
    stderr = math.sqrt(var / n_trajectories)
    return EnsembleEstimate(
        mean=mean,
        stderr=stderr,
        n_trajectories=n_trajectories,
        master_seed=master_seed,
    )
