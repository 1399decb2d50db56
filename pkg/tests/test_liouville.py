"""Exact-engine Liouvillian assembly, integration and steady states."""

import numpy as np
import pytest
import scipy.linalg as la

from monitored_chain import (
    ConfigError,
    DegeneracyError,
    DensityMatrix,
    HermiticityError,
    MonitorSpec,
    PositivityError,
    QuadraticHamiltonian,
    assemble_liouvillian,
    evolve,
    expectation,
    lindblad_action,
    many_body_hamiltonian,
    steady_state,
)
from monitored_chain.liouville import evolve_at, vectorize, unvectorize
from monitored_chain.model import (
    JumpKind,
    JumpSpec,
    fermion_operators,
    fock_state,
)
from monitored_chain.validation import random_density_matrix

from conftest import driven_monitor, exact_system, hermitize


def test_vectorization_roundtrip():
    rng = np.random.default_rng(3)
    rho = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.array_equal(unvectorize(vectorize(rho), 4), rho)
    # column stacking: vec walks down the first column first
    assert vectorize(rho)[1] == rho[1, 0]


def test_single_site_dephasing_action():
    gamma = 0.8
    hq = QuadraticHamiltonian(np.zeros((1, 1)))
    ops = fermion_operators(1)
    l = assemble_liouvillian(hq, [JumpSpec(JumpKind.DEPHASE, 1, gamma)], ops)
    coherence = np.zeros((2, 2), dtype=complex)
    coherence[0, 1] = 1.0
    out = unvectorize(l.apply(vectorize(coherence)), 2)
    assert np.max(np.abs(out - (-gamma / 2) * coherence)) < 1e-15
    population = np.diag([0.0, 1.0]).astype(complex)
    assert np.max(np.abs(l.apply(vectorize(population)))) < 1e-15


def test_closed_generator_antihermitian():
    _, _, _, l = exact_system(2, MonitorSpec(0.0))
    dense = l.matrix.toarray()
    assert np.max(np.abs(dense + dense.conj().T)) < 1e-15


def test_action_matches_term_evaluator():
    rng = np.random.default_rng(17)
    monitor = MonitorSpec(rng.uniform(0.2, 2.0), rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5))
    hq, jumps, ops, l = exact_system(3, monitor, hopping=0.9)
    rho = random_density_matrix(rng, ops.dim)
    direct = lindblad_action(rho, hq, jumps, ops)
    assert np.max(np.abs(l.action(rho) - direct)) < 1e-12


def test_unitality_and_trace_preservation():
    _, _, ops, l = exact_system(3, MonitorSpec(1.0))
    eye = np.eye(ops.dim) / ops.dim
    assert np.max(np.abs(l.apply(vectorize(eye)))) < 1e-12
    # the vectorized identity is a left null vector with or without drive
    for monitor in (MonitorSpec(1.0), driven_monitor(1.0)):
        _, _, _, ld = exact_system(3, monitor)
        left = vectorize(np.eye(ops.dim)).conj() @ ld.matrix.toarray()
        assert np.max(np.abs(left)) < 1e-12


def test_closed_energy_conserved():
    rng = np.random.default_rng(5)
    hq, _, ops, l = exact_system(3, MonitorSpec(0.0))
    hm = many_body_hamiltonian(hq, ops).toarray()
    rho0 = DensityMatrix(random_density_matrix(rng, ops.dim))
    rho1 = evolve(rho0, l, 1.0)
    e0 = expectation(rho0, hm)
    e1 = expectation(rho1, hm)
    assert abs(e1 - e0) < 1e-8


def test_two_site_equilibration():
    _, _, ops, l = exact_system(2, MonitorSpec(1.0))
    rho0 = DensityMatrix.from_pure(fock_state((1, 0)))
    rho = evolve(rho0, l, 40.0)
    n1 = expectation(rho, ops.number(1).toarray())
    n2 = expectation(rho, ops.number(2).toarray())
    assert abs(n1 - 0.5) < 1e-6 and abs(n2 - 0.5) < 1e-6
    coherence = np.trace(rho.rho @ (ops.creator(1) @ ops.annihilator(2)).toarray())
    assert abs(coherence) < 1e-6


def test_maximally_mixed_stationary():
    _, _, _, l = exact_system(2, MonitorSpec(1.3))
    rho0 = DensityMatrix.maximally_mixed(2)
    for rho in evolve_at(rho0, l, [0.7, 2.0]):
        assert np.max(np.abs(rho.rho - rho0.rho)) < 1e-10


def test_steady_state_methods_agree():
    _, _, _, l = exact_system(2, driven_monitor(1.0))
    direct = steady_state(l, "linear-solve")
    null = steady_state(l, "null-space")
    evolved = steady_state(l, "time-evolve", deriv_tol=1e-11, rtol=1e-10, atol=1e-12)
    assert np.max(np.abs(direct.state.rho - null.state.rho)) < 1e-10
    assert np.max(np.abs(direct.state.rho - evolved.state.rho)) < 1e-8
    assert direct.residual < 1e-10


def test_steady_state_trace_one():
    _, _, _, l = exact_system(3, driven_monitor(0.7))
    result = steady_state(l, "linear-solve")
    assert abs(np.trace(result.state.rho).real - 1.0) < 1e-15
    assert abs(np.trace(result.state.rho).imag) < 1e-15


def test_no_drive_degeneracy():
    _, _, _, l = exact_system(2, MonitorSpec(1.0))
    for method in ("linear-solve", "null-space"):
        with pytest.raises(DegeneracyError, match="particle-number"):
            steady_state(l, method)


def test_expectation_basics():
    n = 3
    _, _, ops, _ = exact_system(n, MonitorSpec(1.0))
    mixed = DensityMatrix.maximally_mixed(n)
    for i in range(1, n + 1):
        assert abs(expectation(mixed, ops.number(i).toarray()) - 0.5) < 1e-12
    full = DensityMatrix.from_pure(fock_state((1,) * n))
    assert abs(expectation(full, ops.total_number().toarray()) - n) < 1e-12
    rng = np.random.default_rng(23)
    rho = DensityMatrix(random_density_matrix(rng, ops.dim))
    with pytest.raises(HermiticityError):
        expectation(rho, ops.annihilator(1).toarray())


def test_density_matrix_invariants():
    with pytest.raises(HermiticityError):
        DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex)).validate()
    with pytest.raises(PositivityError):
        DensityMatrix(np.diag([1.5, -0.5]).astype(complex)).validate()


def test_evolve_at_rejects_bad_times():
    _, _, _, l = exact_system(2, driven_monitor(1.0))
    rho0 = DensityMatrix.maximally_mixed(2)
    with pytest.raises(ConfigError):
        evolve_at(rho0, l, [2.0, 1.0])
    with pytest.raises(ConfigError):
        evolve_at(rho0, l, [1.0], positivity="sometimes")


def test_evolve_at_positivity_modes():
    rng = np.random.default_rng(29)
    _, _, ops, l = exact_system(2, driven_monitor(0.9))
    rho0 = DensityMatrix(random_density_matrix(rng, ops.dim))
    states = evolve_at(rho0, l, [0.5, 1.0, 2.0], positivity="all")
    assert [s.time for s in states] == [0.5, 1.0, 2.0]
    for s in states:
        assert abs(np.trace(s.rho).real - 1.0) < 1e-9
        assert np.max(np.abs(s.rho - hermitize(s.rho))) < 1e-9
