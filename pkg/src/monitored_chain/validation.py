"""Cross-engine validation suites.

Every suite returns a CheckResult with the measured violation and its
threshold instead of asserting, so the CLI can print a pass/fail table and
the tests can gate on the same numbers.  Thresholds mirror the module
invariants: oracle equivalence 1e-7 (1e-8 for steady states), generator
finite-difference agreement 1e-6, continuity 1e-10, unitality 1e-12,
trajectory z-scores below 3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import covariance, liouville, trajectories, transport
from .model import (
    LatticeSpec,
    MonitorSpec,
    build_hamiltonian,
    build_jump_set,
    current_operator,
    fermion_operators,
    fock_state,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return (
            f"{status}  {self.name}: measured {self.value:.3e}, "
            f"threshold {self.threshold:.1e}{extra}"
        )


def random_density_matrix(rng, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_covariance_matrix(rng, n: int) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(g)
    occ = rng.uniform(0.0, 1.0, size=n)
    return (q * occ) @ q.conj().T


def random_monitor(rng, drive: bool = True) -> MonitorSpec:
    gamma = float(np.exp(rng.uniform(np.log(0.05), np.log(2.0))))
    if drive:
        return MonitorSpec(
            gamma=gamma,
            gamma_s=float(rng.uniform(0.01, 0.5)),
            gamma_d=float(rng.uniform(0.01, 0.5)),
        )
    return MonitorSpec(gamma=gamma)


def check_car(n_sites: int, threshold: float = 1e-14) -> CheckResult:
    """Canonical anticommutation relations of the Jordan-Wigner operators."""
    ops = fermion_operators(n_sites)
    eye = np.eye(ops.dim)
    worst = 0.0
    for i in range(1, n_sites + 1):
        ci = ops.annihilator(i).toarray()
        for j in range(1, n_sites + 1):
            cj = ops.annihilator(j).toarray()
            cjd = cj.conj().T
            mixed = ci @ cjd + cjd @ ci - (1.0 if i == j else 0.0) * eye
            same = ci @ cj + cj @ ci
            worst = max(worst, np.max(np.abs(mixed)), np.max(np.abs(same)))
    return CheckResult("jordan-wigner anticommutation", worst <= threshold, worst, threshold)


def check_unitality(
    n_sites: int, gamma: float = 1.0, threshold: float = 1e-12
) -> CheckResult:
    """Without drive the maximally mixed state must be exactly stationary."""
    lattice = LatticeSpec(n_sites=n_sites)
    monitor = MonitorSpec(gamma=gamma)
    ops = fermion_operators(n_sites)
    l = liouville.assemble_liouvillian(
        build_hamiltonian(lattice), build_jump_set(lattice, monitor), ops
    )
    value = l.rhs_norm(np.eye(ops.dim, dtype=complex) / ops.dim)
    return CheckResult("unitality without drive", value <= threshold, value, threshold)


def check_generator_derivative(
    n_sites: int,
    n_draws: int = 5,
    seed: int = 20,
    threshold: float = 1e-6,
) -> CheckResult:
    """Finite-difference validation of the covariance generator coefficients."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for draw in range(n_draws):
        lattice = LatticeSpec(n_sites=n_sites, hopping=float(rng.uniform(0.5, 1.5)))
        monitor = random_monitor(rng)
        h = build_hamiltonian(lattice)
        worst = max(
            worst,
            covariance.finite_difference_check(
                h, monitor, n_states=1, seed=int(rng.integers(2**32))
            ),
        )
    return CheckResult(
        "covariance generator vs finite-difference oracle",
        worst <= threshold,
        worst,
        threshold,
        detail=f"{n_draws} random draws at N={n_sites}",
    )


def check_oracle_equivalence(
    n_sites: int,
    n_draws: int = 20,
    seed: int = 11,
    times=(0.1, 1.0, 10.0),
    threshold: float = 1e-7,
    steady_threshold: float = 1e-8,
) -> CheckResult:
    """Covariance engine against the exact engine, transients and steady states.

    Random (hopping, gamma, gamma_s, gamma_d) and random initial density
    matrices; the fast-engine C(t) must match the exact-engine C(t)
    entrywise at every sampled time, and the two steady states must agree
    even tighter.
    """
    rng = np.random.default_rng(seed)
    ops = fermion_operators(n_sites)
    worst_t, worst_ss = 0.0, 0.0
    for draw in range(n_draws):
        lattice = LatticeSpec(n_sites=n_sites, hopping=float(rng.uniform(0.5, 1.5)))
        monitor = random_monitor(rng)
        h = build_hamiltonian(lattice)
        jumps = build_jump_set(lattice, monitor)
        gen = covariance.derive_generator(h, monitor)
        l = liouville.assemble_liouvillian(h, jumps, ops)

        rho0 = liouville.DensityMatrix(random_density_matrix(rng, ops.dim))
        exact_states = liouville.evolve_at(rho0, l, list(times), positivity="none")
        c0 = covariance.covariance_from_density(rho0, ops)
        fast_states = covariance.evolve_covariance_at(c0, gen, list(times))
        for ex, fast in zip(exact_states, fast_states):
            c_exact = covariance.covariance_from_density(ex, ops).c
            worst_t = max(worst_t, float(np.max(np.abs(c_exact - fast.c))))

        ss_exact = liouville.steady_state(l, method="linear-solve")
        c_ss_exact = covariance.covariance_from_density(ss_exact.state, ops).c
        c_ss_fast = covariance.steady_covariance(gen).cov.c
        worst_ss = max(worst_ss, float(np.max(np.abs(c_ss_exact - c_ss_fast))))
    passed = worst_t <= threshold and worst_ss <= steady_threshold
    return CheckResult(
        "covariance engine vs exact engine",
        passed,
        max(worst_t, worst_ss),
        threshold,
        detail=(
            f"N={n_sites}, {n_draws} draws: transient {worst_t:.3e} "
            f"(<= {threshold:.1e}), steady {worst_ss:.3e} (<= {steady_threshold:.1e})"
        ),
    )


def check_continuity(
    n_sites: int, n_draws: int = 10, seed: int = 13, threshold: float = 1e-10
) -> CheckResult:
    """Discrete continuity equation on random states and rates."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for draw in range(n_draws):
        lattice = LatticeSpec(n_sites=n_sites, hopping=float(rng.uniform(0.5, 1.5)))
        monitor = random_monitor(rng, drive=bool(draw % 2))
        gen = covariance.derive_generator(build_hamiltonian(lattice), monitor)
        c = covariance.CovarianceMatrix(random_covariance_matrix(rng, n_sites))
        worst = max(worst, transport.continuity_check(c, gen))
    return CheckResult(
        "current continuity against generator", worst <= threshold, worst, threshold
    )


def check_trajectory_agreement(
    n_sites: int = 4,
    n_trajectories: int = 400,
    master_seed: int = 2024,
    t_final: float = 6.0,
    z_threshold: float = 3.0,
    n_workers: int = 1,
) -> CheckResult:
    """Trajectory means of J_12 and n_1 against the Lindblad values.

    Driven chain from a charge-density-wave start; the unconditional
    average of any linear observable must match the master equation within
    statistical error.
    """
    lattice = LatticeSpec(n_sites=n_sites)
    monitor = MonitorSpec(gamma=1.0, gamma_s=0.4, gamma_d=0.4)
    h = build_hamiltonian(lattice)
    ops = fermion_operators(n_sites)
    jumps = build_jump_set(lattice, monitor)
    occupations = [1 if i % 2 == 0 else 0 for i in range(n_sites)]
    psi0 = fock_state(occupations)

    l = liouville.assemble_liouvillian(h, jumps, ops)
    rho_t = liouville.evolve(liouville.DensityMatrix.from_pure(psi0), l, t_final)
    j_op = current_operator(ops, bond=1, hopping=lattice.hopping)
    n_op = ops.number(1)
    exact_j = liouville.expectation(rho_t, j_op)
    exact_n = liouville.expectation(rho_t, n_op)

    worst_z = 0.0
    details = []
    for name, obs, target in (("J_12", j_op, exact_j), ("n_1", n_op, exact_n)):
        est = trajectories.trajectory_average(
            obs,
            psi0,
            h,
            jumps,
            ops,
            t_final,
            n_trajectories,
            master_seed,
            n_workers=n_workers,
        )
        z = abs(est.mean - target) / est.stderr if est.stderr > 0 else float("inf")
        worst_z = max(worst_z, z)
        details.append(f"{name}: mean {est.mean:.6f} vs exact {target:.6f}, z={z:.2f}")
    return CheckResult(
        "trajectory average vs unconditional dynamics",
        worst_z <= z_threshold,
        worst_z,
        z_threshold,
        detail="; ".join(details),
    )


def run_suite(
    n_sites: int,
    *,
    n_draws: int = 20,
    seed: int = 11,
    n_trajectories: int = 400,
    master_seed: int = 2024,
    n_workers: int = 1,
) -> list[CheckResult]:
    """The full validation battery at one chain length."""
    return [
        check_car(n_sites),
        check_unitality(n_sites),
        check_generator_derivative(n_sites, n_draws=min(n_draws, 5), seed=seed + 1),
        check_oracle_equivalence(n_sites, n_draws=n_draws, seed=seed),
        check_continuity(n_sites, seed=seed + 2),
        check_trajectory_agreement(
            n_sites,
            n_trajectories=n_trajectories,
            master_seed=master_seed,
            n_workers=n_workers,
        ),
    ]
