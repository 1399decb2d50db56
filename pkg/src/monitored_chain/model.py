"""Chain model: single-particle Hamiltonian, monitoring setup, fermion algebra.

Conventions used throughout the package:

* Sites are numbered 1..N in user-facing data (``JumpSpec.site``); internal
  arrays are 0-based.
* The many-body basis orders site 1 as the *leftmost* tensor factor, so the
  occupation string (n_1, ..., n_N) maps to the computational-basis index
  ``n_1 2^(N-1) + ... + n_N``.
* Jordan-Wigner: c_i = Z^(i-1) (x) sigma^- (x) 1^(N-i) with Z = diag(1, -1)
  and sigma^- = [[0, 1], [0, 0]] in the local basis {|0>, |1>}.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, EngineSizeError

# Dense Liouvillians scale as 4^N; past this the exact engine is unusable.
EXACT_ENGINE_MAX_SITES = 12

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class LatticeSpec:
    """Open chain of ``n_sites`` sites with uniform nearest-neighbour hopping."""

    n_sites: int
    hopping: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n_sites, (int, np.integer)) or self.n_sites < 2:
            raise ConfigError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        if not np.isfinite(self.hopping) or self.hopping <= 0:
            raise ConfigError(f"hopping must be finite and > 0, got {self.hopping!r}")


@dataclass(frozen=True)
class MonitorSpec:
    """Rates of the three dissipative processes.

    gamma    uniform local-density monitoring (dephasing) rate, all sites
    gamma_s  particle injection rate on site 1
    gamma_d  particle extraction rate on site N
    """

    gamma: float
    gamma_s: float = 0.0
    gamma_d: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "gamma_s", "gamma_d"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {value!r}")


class JumpKind(Enum):
    DEPHASE = "dephase"
    PUMP = "pump"
    LOSS = "loss"


@dataclass(frozen=True)
class JumpSpec:
    """One Lindblad channel: operator kind, 1-based site, nonnegative rate."""

    kind: JumpKind
    site: int
    rate: float

    def __post_init__(self):
        if self.site < 1:
            raise ConfigError(f"jump site must be >= 1, got {self.site}")
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ConfigError(f"jump rate must be finite and >= 0, got {self.rate!r}")


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Single-particle matrix h of H = sum_jk h_jk c_j^dag c_k."""

    matrix: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.matrix)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ConfigError(f"hamiltonian matrix must be square, got shape {h.shape}")
        if not np.array_equal(h, h.conj().T):
            raise ConfigError("hamiltonian matrix must be exactly Hermitian")
        object.__setattr__(self, "matrix", h)

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]


def build_hamiltonian(lattice: LatticeSpec) -> QuadraticHamiltonian:
    """Tridiagonal hopping matrix for the open chain.

    h has +hopping on the first off-diagonals and zeros on the diagonal, so
    H = t sum_i (c_i^dag c_{i+1} + h.c.).
    """
    n = lattice.n_sites
    h = np.zeros((n, n))
    off = lattice.hopping * np.ones(n - 1)
    h[np.arange(n - 1), np.arange(1, n)] = off
    h[np.arange(1, n), np.arange(n - 1)] = off
    return QuadraticHamiltonian(h)


def build_jump_set(lattice: LatticeSpec, monitor: MonitorSpec) -> list[JumpSpec]:
    """All Lindblad channels for the monitored, boundary-driven chain.

    One dephasing channel n_i per site at rate gamma, a pump c_1^dag at rate
    gamma_s and a loss c_N at rate gamma_d.  Channels with zero rate are
    omitted so downstream engines never divide by a vanishing norm.
    """
    jumps = []
    if monitor.gamma > 0:
        jumps.extend(
            JumpSpec(JumpKind.DEPHASE, i, monitor.gamma)
            for i in range(1, lattice.n_sites + 1)
        )
    if monitor.gamma_s > 0:
        jumps.append(JumpSpec(JumpKind.PUMP, 1, monitor.gamma_s))
    if monitor.gamma_d > 0:
        jumps.append(JumpSpec(JumpKind.LOSS, lattice.n_sites, monitor.gamma_d))
    return jumps


@dataclass(frozen=True)
class FermionOps:
    """Sparse Jordan-Wigner representation of c_1..c_N on (C^2)^(x N)."""

    n_sites: int
    annihilators: tuple

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    def annihilator(self, site: int) -> sp.csr_matrix:
        return self.annihilators[site - 1]

    def creator(self, site: int) -> sp.csr_matrix:
        return self.annihilators[site - 1].conj().T.tocsr()

    def number(self, site: int) -> sp.csr_matrix:
        c = self.annihilators[site - 1]
        return (c.conj().T @ c).tocsr()

    def total_number(self) -> sp.csr_matrix:
        total = sp.csr_matrix((self.dim, self.dim))
        for i in range(1, self.n_sites + 1):
            total = total + self.number(i)
        return total.tocsr()


def fermion_operators(n_sites: int) -> FermionOps:
    """Build the Jordan-Wigner annihilators for an ``n_sites`` chain.

    Raises EngineSizeError beyond EXACT_ENGINE_MAX_SITES; the 4^N scaling of
    the vectorized dynamics makes larger chains intractable exactly.
    """
    if n_sites < 1:
        raise ConfigError(f"n_sites must be >= 1, got {n_sites}")
    if n_sites > EXACT_ENGINE_MAX_SITES:
        raise EngineSizeError(n_sites, EXACT_ENGINE_MAX_SITES)
    eye = sp.identity(2, format="csr")
    z = sp.csr_matrix(_Z)
    sm = sp.csr_matrix(_SIGMA_MINUS)
    ops = []
    for i in range(n_sites):
        factors = [z] * i + [sm] + [eye] * (n_sites - i - 1)
        acc = factors[0]
        for f in factors[1:]:
            acc = sp.kron(acc, f, format="csr")
        ops.append(acc)
    return FermionOps(n_sites=n_sites, annihilators=tuple(ops))


def many_body_hamiltonian(h: QuadraticHamiltonian, ops: FermionOps) -> sp.csr_matrix:
    """H = sum_jk h_jk c_j^dag c_k as a sparse matrix on the full Fock space."""
    if h.n_sites != ops.n_sites:
        raise ConfigError("hamiltonian and operator set disagree on n_sites")
    n = h.n_sites
    ham = sp.csr_matrix((ops.dim, ops.dim), dtype=complex)
    hm = h.matrix
    for j in range(n):
        for k in range(n):
            if hm[j, k] != 0:
                ham = ham + hm[j, k] * (ops.creator(j + 1) @ ops.annihilator(k + 1))
    return ham.tocsr()


def current_operator(ops: FermionOps, bond: int = 1, hopping: float = 1.0) -> sp.csr_matrix:
    """J_{i,i+1} = i t (c_i^dag c_{i+1} - c_{i+1}^dag c_i) for bond = i (1-based).

    Positive expectation means flow from site i towards site i+1.
    """
    if not 1 <= bond <= ops.n_sites - 1:
        raise ConfigError(f"bond must be in [1, {ops.n_sites - 1}], got {bond}")
    fwd = ops.creator(bond) @ ops.annihilator(bond + 1)
    return (1j * hopping * (fwd - fwd.conj().T)).tocsr()


def jump_operator(jump: JumpSpec, ops: FermionOps) -> sp.csr_matrix:
    """Sparse matrix of the (unweighted) jump operator L_k."""
    if jump.site > ops.n_sites:
        raise ConfigError(
            f"jump site {jump.site} outside chain of {ops.n_sites} sites"
        )
    if jump.kind is JumpKind.DEPHASE:
        return ops.number(jump.site)
    if jump.kind is JumpKind.PUMP:
        return ops.creator(jump.site)
    if jump.kind is JumpKind.LOSS:
        return ops.annihilator(jump.site)
    raise ConfigError(f"unknown jump kind {jump.kind!r}")


def fock_index(occupations) -> int:
    """Basis index of the occupation string (site 1 is the leftmost bit)."""
    idx = 0
    for n_i in occupations:
        if n_i not in (0, 1):
            raise ConfigError(f"occupations must be 0 or 1, got {n_i!r}")
        idx = (idx << 1) | n_i
    return idx


def fock_state(occupations) -> np.ndarray:
    """Normalized Fock basis vector |n_1 ... n_N>."""
    occupations = list(occupations)
    psi = np.zeros(2 ** len(occupations), dtype=complex)
    psi[fock_index(occupations)] = 1.0
    return psi
