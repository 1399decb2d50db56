"""Exact Lindblad engine on the full 2^N-dimensional Fock space.

The master equation

    d rho/dt = -i[H, rho] + sum_k r_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})

is vectorized by column-stacking, so a term A rho B maps to (B^T (x) A) and
the whole right-hand side becomes a sparse 4^N x 4^N matrix acting on
vec(rho).  This engine is the oracle for the O(N^2) covariance engine and
the trajectory unraveling; it is deliberately brute force.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (
    ConfigError,
    DegeneracyError,
    HermiticityError,
    IntegrationError,
    PositivityError,
)
from .model import (
    FermionOps,
    JumpSpec,
    QuadraticHamiltonian,
    jump_operator,
    many_body_hamiltonian,
)

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10

# Invariant budgets along a time integration (looser than the type
# invariants because local error accumulates).
EVOLVE_TRACE_TOL = 1e-9
EVOLVE_HERM_TOL = 1e-9
EVOLVE_EIG_FLOOR = -1e-7

# Kernel uniqueness: second-smallest singular value must exceed this
# fraction of the largest for the steady state to be accepted.
DEGENERACY_RATIO = 1e-8

# Above this matrix dimension the degeneracy check switches from a dense
# SVD to sparse shift-inverted eigensolves on L^dag L.
_DENSE_SVD_LIMIT = 300


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix (Fortran ravel)."""
    return np.asarray(rho).ravel(order="F")


def unvectorize(vec: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    return np.asarray(vec).reshape((dim, dim), order="F")


@dataclass
class DensityMatrix:
    """Full many-body density matrix at a given time."""

    rho: np.ndarray
    time: float = 0.0

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def maximally_mixed(cls, n_sites: int, time: float = 0.0) -> "DensityMatrix":
        d = 2**n_sites
        return cls(np.eye(d, dtype=complex) / d, time=time)

    @classmethod
    def from_pure(cls, psi: np.ndarray, time: float = 0.0) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), time=time)

    def validate(self, herm_tol=1e-10, trace_tol=1e-10, eig_floor=-1e-8):
        """Check Hermiticity, unit trace and positivity up to tolerances."""
        rho = self.rho
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ConfigError(f"density matrix must be square, got shape {rho.shape}")
        herm_dev = np.max(np.abs(rho - rho.conj().T))
        if herm_dev > herm_tol:
            raise HermiticityError(
                f"density matrix Hermiticity violation {herm_dev:.3e} > {herm_tol:.1e}"
            )
        trace_dev = abs(np.trace(rho) - 1.0)
        if trace_dev > trace_tol:
            raise IntegrationError(
                f"density matrix trace deviation {trace_dev:.3e} > {trace_tol:.1e}"
            )
        min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
        if min_eig < eig_floor:
            raise PositivityError(
                f"density matrix minimum eigenvalue {min_eig:.3e} < {eig_floor:.1e}"
            )
        return self


@dataclass
class Superoperator:
    """Sparse vectorized Lindbladian L with vec(d rho/dt) = L vec(rho)."""

    matrix: sp.csr_matrix
    hilbert_dim: int

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def action(self, rho: np.ndarray) -> np.ndarray:
        """L[rho] in matrix form."""
        return unvectorize(self.matrix @ vectorize(rho), self.hilbert_dim)

    def rhs_norm(self, rho: np.ndarray) -> float:
        """Max-norm of d rho/dt at the given state."""
        return float(np.max(np.abs(self.matrix @ vectorize(rho))))


def assemble_liouvillian(
    h: QuadraticHamiltonian, jumps: list[JumpSpec], ops: FermionOps
) -> Superoperator:
    """Build the vectorized Lindbladian.

    Column-stacking maps H rho -> (1 (x) H) vec(rho), rho H -> (H^T (x) 1)
    vec(rho) and L rho L^dag -> (conj(L) (x) L) vec(rho).
    """
    if h.n_sites != ops.n_sites:
        raise ConfigError("hamiltonian and operator set disagree on n_sites")
    d = ops.dim
    ident = sp.identity(d, format="csr", dtype=complex)
    ham = many_body_hamiltonian(h, ops)
    lmat = -1j * (sp.kron(ident, ham) - sp.kron(ham.T, ident))
    for jump in jumps:
        lk = jump_operator(jump, ops).astype(complex)
        lkd_lk = (lk.conj().T @ lk).tocsr()
        lmat = lmat + jump.rate * (
            sp.kron(lk.conj(), lk)
            - 0.5 * sp.kron(ident, lkd_lk)
            - 0.5 * sp.kron(lkd_lk.T, ident)
        )
    return Superoperator(matrix=lmat.tocsr(), hilbert_dim=d)


def lindblad_action(
    rho: np.ndarray,
    h: QuadraticHamiltonian,
    jumps: list[JumpSpec],
    ops: FermionOps,
) -> np.ndarray:
    """Term-by-term evaluation of the Lindblad right-hand side.

    Deliberately independent of :func:`assemble_liouvillian` (no
    vectorization, no Kronecker products) so it can serve as an oracle for
    the assembled superoperator.
    """
    ham = many_body_hamiltonian(h, ops).toarray()
    out = -1j * (ham @ rho - rho @ ham)
    for jump in jumps:
        lk = jump_operator(jump, ops).toarray()
        lkd = lk.conj().T
        anti = lkd @ lk
        out += jump.rate * (lk @ rho @ lkd - 0.5 * (anti @ rho + rho @ anti))
    return out


def _recheck_integrated(state: DensityMatrix, check_positivity: bool):
    rho = state.rho
    herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
    trace_dev = float(abs(np.trace(rho) - 1.0))
    min_eig = None
    if check_positivity:
        min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    ok = (
        herm_dev <= EVOLVE_HERM_TOL
        and trace_dev <= EVOLVE_TRACE_TOL
        and (min_eig is None or min_eig >= EVOLVE_EIG_FLOOR)
    )
    if not ok:
        raise IntegrationError(
            f"integrated state at t={state.time:g} violates invariants: "
            f"trace deviation {trace_dev:.3e}, Hermiticity deviation "
            f"{herm_dev:.3e}, min eigenvalue "
            f"{'unchecked' if min_eig is None else format(min_eig, '.3e')}"
        )


def evolve_at(
    rho0: DensityMatrix,
    l: Superoperator,
    times,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    positivity: str = "final",
) -> list[DensityMatrix]:
    """Integrate the master equation, sampling the state at given times.

    Parameters
    ----------
    rho0 : DensityMatrix
        Initial state; validated before integration.
    l : Superoperator
        Assembled Lindbladian.
    times : sequence of float
        Strictly increasing absolute times, all >= rho0.time.
    rtol, atol : float
        Local error control for the adaptive Runge-Kutta (DOP853) stepper.
    positivity : {"final", "all", "none"}
        At which sampled times to pay for the eigenvalue check; trace and
        Hermiticity are always re-checked.

    Returns
    -------
    list of DensityMatrix, one per requested time.
    """
    rho0.validate()
    times = [float(t) for t in times]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ConfigError("sample times must be strictly increasing")
    if times[0] < rho0.time:
        raise ConfigError("sample times must not precede the initial time")
    if positivity not in ("final", "all", "none"):
        raise ConfigError(f"unknown positivity mode {positivity!r}")

    mat = l.matrix

    def rhs(t, vec):
        return mat @ vec

    sol = solve_ivp(
        rhs,
        (rho0.time, times[-1]),
        vectorize(rho0.rho).astype(complex),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise IntegrationError(f"master-equation integration failed: {sol.message}")
    states = []
    for idx, t in enumerate(sol.t):
        state = DensityMatrix(unvectorize(sol.y[:, idx], l.hilbert_dim), time=float(t))
        check_eig = positivity == "all" or (positivity == "final" and idx == len(sol.t) - 1)
        _recheck_integrated(state, check_positivity=check_eig)
        states.append(state)
    return states


def evolve(
    rho0: DensityMatrix,
    l: Superoperator,
    t_final: float,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> DensityMatrix:
    """Integrate the master equation from rho0.time to t_final."""
    return evolve_at(rho0, l, [t_final], rtol=rtol, atol=atol)[-1]


def expectation(rho: DensityMatrix, obs, imag_tol: float = 1e-10) -> float:
    """tr(rho obs) for Hermitian obs; the imaginary part must be noise."""
    if sp.issparse(obs):
        val = complex((obs @ rho.rho).diagonal().sum())
    else:
        obs = np.asarray(obs)
        if obs.shape != rho.rho.shape:
            raise ConfigError(
                f"observable shape {obs.shape} does not match state {rho.rho.shape}"
            )
        val = complex(np.trace(obs @ rho.rho))
    if abs(val.imag) > imag_tol:
        raise HermiticityError(
            f"expectation value has imaginary part {val.imag:.3e} > {imag_tol:.1e}"
        )
    return float(val.real)


@dataclass
class SteadyStateResult:
    """Steady state together with its defect and the method that found it."""

    state: DensityMatrix
    residual: float
    method: str


def kernel_gap(l: Superoperator) -> tuple[float, float]:
    """(second-smallest, largest) singular value of L.

    Dense SVD for small superoperators; for larger ones the two smallest
    singular values come from a shift-inverted Hermitian eigensolve on
    L^dag L and the largest from a Lanczos SVD.
    """
    mat = l.matrix
    n = mat.shape[0]
    if n <= _DENSE_SVD_LIMIT:
        s = np.linalg.svd(mat.toarray(), compute_uv=False)
        return float(s[-2]), float(s[0])
    s_max = float(
        spla.svds(mat.astype(complex), k=1, which="LM", return_singular_vectors=False)[0]
    )
    gram = (mat.conj().T @ mat).tocsc()
    # shift strictly below the PSD spectrum keeps the factorization regular
    shift = -1e-8 * s_max**2
    try:
        vals = spla.eigsh(gram, k=2, sigma=shift, return_eigenvectors=False)
    except spla.ArpackError as exc:  # pragma: no cover - rare numerical failure
        raise IntegrationError(f"kernel-gap estimation failed: {exc}") from exc
    vals = np.sqrt(np.clip(np.sort(np.real(vals)), 0.0, None))
    return float(vals[1]), s_max


def _check_uniqueness(l: Superoperator):
    s2, s_max = kernel_gap(l)
    if s2 <= DEGENERACY_RATIO * s_max:
        raise DegeneracyError(
            "steady state is not unique: second-smallest singular value "
            f"{s2:.3e} <= {DEGENERACY_RATIO:.1e} x largest {s_max:.3e} "
            "(with gamma_s = gamma_d = 0 every particle-number sector is stationary)"
        )


def _clean_steady(rho: np.ndarray) -> np.ndarray:
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def steady_state(
    l: Superoperator,
    method: str = "linear-solve",
    *,
    rho0: DensityMatrix | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    deriv_tol: float = 1e-10,
    max_time: float = 1e5,
) -> SteadyStateResult:
    """Solve L vec(rho) = 0 with tr rho = 1.

    Three interchangeable methods:

    * ``linear-solve``: replace one row of L by the trace functional and
      LU-solve; exact up to roundoff.
    * ``null-space``: smallest-magnitude eigenpair of L (dense for small
      systems, shift-inverted Arnoldi for large ones).
    * ``time-evolve``: integrate from rho0 (default maximally mixed) until
      the right-hand side drops below ``deriv_tol`` in max-norm.

    The kernel is checked to be numerically one-dimensional first; a
    degenerate kernel (no drive) raises DegeneracyError.
    """
    _check_uniqueness(l)
    d = l.hilbert_dim
    if method == "linear-solve":
        mod = l.matrix.tolil(copy=True)
        trace_row = np.zeros(d * d)
        trace_row[np.arange(d) * (d + 1)] = 1.0
        mod[0, :] = trace_row
        rhs = np.zeros(d * d, dtype=complex)
        rhs[0] = 1.0
        try:
            vec = spla.spsolve(mod.tocsc(), rhs)
        except RuntimeError as exc:
            raise IntegrationError(f"steady-state linear solve failed: {exc}") from exc
        rho = _clean_steady(unvectorize(vec, d))
    elif method == "null-space":
        if l.matrix.shape[0] <= _DENSE_SVD_LIMIT:
            vals, vecs = np.linalg.eig(l.matrix.toarray())
            vec = vecs[:, np.argmin(np.abs(vals))]
        else:
            # shift just off the kernel so (L - sigma) is regular while the
            # inverted spectrum is still dominated by the kernel vector
            scale = float(np.max(np.abs(l.matrix).sum(axis=1)))
            vals, vecs = spla.eigs(l.matrix, k=1, sigma=-1e-10 * scale)
            vec = vecs[:, 0]
        rho = _clean_steady(unvectorize(vec, d))
    elif method == "time-evolve":
        state = rho0 if rho0 is not None else DensityMatrix.maximally_mixed(
            int(round(np.log2(d)))
        )
        state.validate()
        t_start = state.time
        t, block = state.time, 5.0
        while True:
            state = evolve(state, l, t + block, rtol=rtol, atol=atol)
            t = state.time
            if l.rhs_norm(state.rho) < deriv_tol:
                break
            if t - t_start >= max_time:
                raise IntegrationError(
                    f"steady state not reached by t={max_time:g}: "
                    f"|d rho/dt| = {l.rhs_norm(state.rho):.3e} > {deriv_tol:.1e}"
                )
            block = min(2 * block, 2000.0)
        rho = _clean_steady(state.rho)
    else:
        raise ConfigError(
            f"unknown steady-state method {method!r}; "
            "expected linear-solve, null-space or time-evolve"
        )
    result = DensityMatrix(rho, time=np.inf)
    result.validate(herm_tol=1e-10, trace_tol=1e-10, eig_floor=-1e-8)
    residual = float(np.max(np.abs(l.apply(vectorize(rho)))))
    return SteadyStateResult(state=result, residual=residual, method=method)
