"""Quantum-jump unraveling against the unconditional Lindblad dynamics."""

import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp

from monitored_chain import (
    ConfigError,
    DensityMatrix,
    MonitorSpec,
    QuadraticHamiltonian,
    assemble_liouvillian,
    build_hamiltonian,
    build_jump_set,
    expectation,
    many_body_hamiltonian,
    sample_trajectory,
    trajectory_average,
)
from monitored_chain.liouville import evolve_at
from monitored_chain.model import (
    JumpKind,
    JumpSpec,
    LatticeSpec,
    fermion_operators,
    fock_state,
)
from monitored_chain.trajectories import pure_expectation, trajectory_seed

from conftest import exact_system


def _two_site():
    lattice = LatticeSpec(2, 1.0)
    hq = build_hamiltonian(lattice)
    ops = fermion_operators(2)
    return lattice, hq, ops


def test_closed_schrodinger_limit():
    _, hq, ops = _two_site()
    psi0 = fock_state((1, 0)).astype(complex)
    traj = sample_trajectory(psi0, hq, [], ops, 3.0, seed=1)
    assert traj.jump_log == []
    assert abs(np.linalg.norm(traj.psi) - 1.0) < 1e-12
    hm = many_body_hamiltonian(hq, ops).toarray()
    reference = la.expm(-1j * hm * 3.0) @ psi0
    assert np.max(np.abs(traj.psi - reference)) < 1e-6


def test_dephasing_eigenstate_is_inert():
    # n|1> = |1>: jumps fire but act trivially, occupation stays pinned
    hq = QuadraticHamiltonian(np.zeros((1, 1)))
    ops = fermion_operators(1)
    jumps = [JumpSpec(JumpKind.DEPHASE, 1, 2.0)]
    psi0 = fock_state((1,)).astype(complex)
    traj = sample_trajectory(psi0, hq, jumps, ops, 5.0, seed=3)
    assert len(traj.jump_log) > 0
    assert abs(pure_expectation(traj.psi, ops.number(1)) - 1.0) < 1e-12


def test_jump_count_matches_lindblad_integral():
    lattice, hq, ops = _two_site()
    monitor = MonitorSpec(1.0)
    jumps = build_jump_set(lattice, monitor)
    psi0 = fock_state((1, 0)).astype(complex)

    # unconditional oracle: expected count = integral of gamma*sum<n_i>;
    # dephasing conserves the particle number, so the integral is gamma*t
    l = assemble_liouvillian(hq, jumps, ops)
    grid = np.linspace(0.0, 5.0, 201)
    rho0 = DensityMatrix.from_pure(psi0)
    ntot = ops.total_number().toarray()
    vals = [expectation(rho0, ntot)] + [
        expectation(s, ntot) for s in evolve_at(rho0, l, grid[1:])
    ]
    integral = np.trapezoid(monitor.gamma * np.array(vals), grid)
    assert abs(integral - 5.0) < 1e-8

    counts = np.array([
        len(sample_trajectory(psi0, hq, jumps, ops, 5.0, trajectory_seed(77, m)).jump_log)
        for m in range(800)
    ])
    stderr = counts.std(ddof=1) / np.sqrt(len(counts))
    assert abs(counts.mean() - integral) < 3 * stderr


def test_identity_observable():
    lattice, hq, ops = _two_site()
    jumps = build_jump_set(lattice, MonitorSpec(1.0, 0.3, 0.3))
    psi0 = fock_state((1, 0)).astype(complex)
    est = trajectory_average(sp.identity(4, format="csr"), psi0, hq, jumps, ops, 2.0, 16, 5)
    assert abs(est.mean - 1.0) < 1e-12
    assert est.stderr < 1e-12
    assert est.n_trajectories == 16 and est.master_seed == 5


def test_ensemble_mean_matches_lindblad():
    lattice, hq, ops = _two_site()
    monitor = MonitorSpec(1.0, 0.3, 0.3)
    jumps = build_jump_set(lattice, monitor)
    psi0 = fock_state((1, 0)).astype(complex)
    n1 = ops.number(1)
    est = trajectory_average(n1, psi0, hq, jumps, ops, 4.0, 300, 7)
    l = assemble_liouvillian(hq, jumps, ops)
    rho = evolve_at(DensityMatrix.from_pure(psi0), l, [4.0])[0]
    z = abs(est.mean - expectation(rho, n1.toarray())) / est.stderr
    assert z < 3.0


def test_determinism_and_parallel_reduction():
    lattice, hq, ops = _two_site()
    jumps = build_jump_set(lattice, MonitorSpec(0.8, 0.2, 0.2))
    psi0 = fock_state((0, 1)).astype(complex)
    n1 = ops.number(1)
    a = trajectory_average(n1, psi0, hq, jumps, ops, 3.0, 24, 99)
    b = trajectory_average(n1, psi0, hq, jumps, ops, 3.0, 24, 99)
    c = trajectory_average(n1, psi0, hq, jumps, ops, 3.0, 24, 99, n_workers=3)
    assert a.mean == b.mean and a.stderr == b.stderr
    assert a.mean == c.mean and a.stderr == c.stderr


def test_seed_splitting_is_frozen():
    # parallel batches rely on this mapping staying put across versions
    assert [trajectory_seed(2024, m) for m in range(4)] == [
        3972976727410370023,
        7778828159576237216,
        11069854644879971893,
        11206937725199309287,
    ]


def test_input_validation():
    lattice, hq, ops = _two_site()
    jumps = build_jump_set(lattice, MonitorSpec(1.0, 0.1, 0.1))
    psi0 = fock_state((1, 0)).astype(complex)
    with pytest.raises(ConfigError):
        trajectory_average(ops.number(1), psi0, hq, jumps, ops, 1.0, 1, 0)
    with pytest.raises(ConfigError):
        sample_trajectory(2.0 * psi0, hq, jumps, ops, 1.0, seed=0)
