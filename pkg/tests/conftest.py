"""Shared builders for the test suite."""

import numpy as np

from monitored_chain import (
    LatticeSpec,
    MonitorSpec,
    assemble_liouvillian,
    build_hamiltonian,
    build_jump_set,
    derive_generator,
    fermion_operators,
)

# Default drive used throughout: small compared to the hopping so the
# steady state sits in the linear-response regime.
DRIVE = 0.01


def exact_system(n_sites, monitor, hopping=1.0):
    """Hamiltonian, jump list, operator set and Liouvillian for one chain."""
    lattice = LatticeSpec(n_sites, hopping)
    hq = build_hamiltonian(lattice)
    jumps = build_jump_set(lattice, monitor)
    ops = fermion_operators(n_sites)
    return hq, jumps, ops, assemble_liouvillian(hq, jumps, ops)


def cov_generator(n_sites, monitor, hopping=1.0):
    return derive_generator(build_hamiltonian(LatticeSpec(n_sites, hopping)), monitor)


def driven_monitor(gamma):
    return MonitorSpec(gamma, DRIVE, DRIVE)


def hermitize(a):
    return 0.5 * (a + a.conj().T)


def random_state_vector(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)
