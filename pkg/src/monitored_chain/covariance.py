"""Closed dynamics of the two-point function C_jk = tr(rho c_j^dag c_k).

For a quadratic Hamiltonian with local-density dephasing and linear
pump/loss the two-point function obeys a closed affine equation of motion,

    dC/dt = i [h^T, C]                      (coherent part)
            - gamma (C - diag C)            (dephasing damps coherences)
            - gamma_s/2 {P_1, C} + gamma_s P_1    (pump at site 1)
            - gamma_d/2 {P_N, C}            (loss at site N)

with P_i the projector onto site i.  The coefficients are not taken on
faith: :func:`finite_difference_check` validates the generator against the
exact Liouvillian, and the test suite runs it.  This engine is O(N^2) per
state and is what makes wide dephasing sweeps affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

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
from .model import MonitorSpec, QuadraticHamiltonian
from . import liouville
from .liouville import DEFAULT_ATOL, DEFAULT_RTOL, DensityMatrix

EIG_TOL = 1e-8  # occupation-bound slack on the spectrum of C


@dataclass
class CovarianceMatrix:
    """Two-point function at a given time; Hermitian with spectrum in [0,1]."""

    c: np.ndarray
    time: float = 0.0

    @property
    def n_sites(self) -> int:
        return self.c.shape[0]

    @classmethod
    def maximally_mixed(cls, n_sites: int, time: float = 0.0) -> "CovarianceMatrix":
        return cls(np.eye(n_sites, dtype=complex) / 2, time=time)

    @classmethod
    def vacuum(cls, n_sites: int, time: float = 0.0) -> "CovarianceMatrix":
        return cls(np.zeros((n_sites, n_sites), dtype=complex), time=time)

    def densities(self) -> np.ndarray:
        """Real site occupations <n_i> (the diagonal)."""
        return np.real(np.diagonal(self.c)).copy()

    def validate(self, herm_tol=1e-10, eig_tol=EIG_TOL):
        c = self.c
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ConfigError(f"covariance matrix must be square, got shape {c.shape}")
        herm_dev = np.max(np.abs(c - c.conj().T))
        if herm_dev > herm_tol:
            raise HermiticityError(
                f"covariance Hermiticity violation {herm_dev:.3e} > {herm_tol:.1e}"
            )
        eigs = np.linalg.eigvalsh((c + c.conj().T) / 2)
        if eigs[0] < -eig_tol or eigs[-1] > 1 + eig_tol:
            raise PositivityError(
                f"covariance spectrum [{eigs[0]:.3e}, {eigs[-1]:.6f}] outside "
                f"[-{eig_tol:.1e}, 1+{eig_tol:.1e}]"
            )
        diag = np.diagonal(c)
        if np.max(np.abs(diag.imag)) > herm_tol:
            raise HermiticityError("covariance diagonal has imaginary parts")
        if np.min(diag.real) < -eig_tol or np.max(diag.real) > 1 + eig_tol:
            raise PositivityError("site occupations outside [0, 1]")
        return self


@dataclass
class CovarianceGenerator:
    """Affine generator vec(C) -> A vec(C) + b of the two-point dynamics."""

    h: np.ndarray
    gamma: float
    gamma_s: float
    gamma_d: float
    _iu: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.h = np.asarray(self.h)
        self._iu = np.triu_indices(self.n_sites, 1)

    @property
    def n_sites(self) -> int:
        return self.h.shape[0]

    def apply(self, c: np.ndarray) -> np.ndarray:
        """dC/dt at the given C (matrix form; preserves Hermiticity exactly)."""
        n = self.n_sites
        ht = self.h.T
        out = 1j * (ht @ c - c @ ht)
        if self.gamma:
            out -= self.gamma * (c - np.diag(np.diagonal(c)))
        if self.gamma_s:
            out[0, :] -= 0.5 * self.gamma_s * c[0, :]
            out[:, 0] -= 0.5 * self.gamma_s * c[:, 0]
            out[0, 0] += self.gamma_s
        if self.gamma_d:
            out[n - 1, :] -= 0.5 * self.gamma_d * c[n - 1, :]
            out[:, n - 1] -= 0.5 * self.gamma_d * c[:, n - 1]
        return out

    def affine(self):
        """(A, b) with d vec(C)/dt = A vec(C) + b, column-stacked, sparse A."""
        n = self.n_sites
        eye = sp.identity(n, format="csr", dtype=complex)
        ht = sp.csr_matrix(self.h.T)
        a = 1j * (sp.kron(eye, ht) - sp.kron(sp.csr_matrix(self.h), eye))
        if self.gamma:
            diag_mask = np.zeros(n * n)
            diag_mask[np.arange(n) * (n + 1)] = 1.0
            a = a - self.gamma * (sp.identity(n * n, dtype=complex) - sp.diags(diag_mask))
        b = np.zeros(n * n, dtype=complex)
        for rate, site in ((self.gamma_s, 0), (self.gamma_d, n - 1)):
            if rate:
                proj = sp.csr_matrix(
                    ([1.0], ([site], [site])), shape=(n, n), dtype=complex
                )
                a = a - 0.5 * rate * (sp.kron(eye, proj) + sp.kron(proj, eye))
        if self.gamma_s:
            b[0] = self.gamma_s
        return a.tocsr(), b

    # Hermitian packing: C is determined by the real vector
    # y = (diag, Re upper, Im upper) of length N^2, and the generator stays
    # affine in y.  Evolving/solving in y halves the work and pins
    # Hermiticity exactly.

    def pack(self, c: np.ndarray) -> np.ndarray:
        iu = self._iu
        return np.concatenate(
            [np.real(np.diagonal(c)), np.real(c[iu]), np.imag(c[iu])]
        )

    def unpack(self, y: np.ndarray) -> np.ndarray:
        n = self.n_sites
        k = n * (n - 1) // 2
        c = np.zeros((n, n), dtype=complex)
        c[self._iu] = y[n : n + k] + 1j * y[n + k :]
        c = c + c.conj().T
        c[np.diag_indices(n)] = y[:n]
        return c

    def packed_affine(self):
        """Real affine pair (A_p, b_p) acting on the packed coordinates.

        Assembled by probing the structural map with unit vectors; the
        probe count is N^2, fine at desk scale.
        """
        n = self.n_sites
        m = n * n
        b = self.pack(self.apply(np.zeros((n, n), dtype=complex)))
        rows, cols, vals = [], [], []
        probe = np.zeros(m)
        for j in range(m):
            probe[j] = 1.0
            col = self.pack(self.apply(self.unpack(probe))) - b
            probe[j] = 0.0
            nz = np.nonzero(col)[0]
            rows.extend(nz)
            cols.extend([j] * len(nz))
            vals.extend(col[nz])
        a = sp.coo_matrix((vals, (rows, cols)), shape=(m, m)).tocsc()
        return a, b


def derive_generator(h: QuadraticHamiltonian, monitor: MonitorSpec) -> CovarianceGenerator:
    """Generator of the closed two-point dynamics for the given model.

    The coefficient structure is derived from the adjoint Lindbladian;
    :func:`finite_difference_check` is the mandatory numerical validation
    against the exact engine.
    """
    return CovarianceGenerator(
        h=h.matrix.astype(complex),
        gamma=monitor.gamma,
        gamma_s=monitor.gamma_s,
        gamma_d=monitor.gamma_d,
    )


def covariance_from_density(rho: DensityMatrix, ops) -> CovarianceMatrix:
    """C_jk = tr(rho c_j^dag c_k) evaluated on the full Fock space."""
    n = ops.n_sites
    c = np.zeros((n, n), dtype=complex)
    products = [ops.annihilator(k + 1) @ rho.rho for k in range(n)]
    for j in range(n):
        cj = ops.annihilator(j + 1)
        for k in range(n):
            # tr(c_k rho c_j^dag) = sum_il (c_k rho)_il conj(c_j)_il
            c[j, k] = cj.conj().multiply(products[k]).sum()
    return CovarianceMatrix(c=c, time=rho.time)


def _recheck_integrated(cov: CovarianceMatrix):
    try:
        cov.validate()
    except (HermiticityError, PositivityError) as exc:
        raise IntegrationError(
            f"integrated covariance at t={cov.time:g} violates invariants: {exc}"
        ) from exc


def evolve_covariance(
    c0: CovarianceMatrix,
    gen: CovarianceGenerator,
    t_final: float,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    mode: str = "packed",
) -> CovarianceMatrix:
    """Integrate dC/dt from c0.time to t_final."""
    return evolve_covariance_at(c0, gen, [t_final], rtol=rtol, atol=atol, mode=mode)[-1]


def evolve_covariance_at(
    c0: CovarianceMatrix,
    gen: CovarianceGenerator,
    times,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    mode: str = "packed",
) -> list[CovarianceMatrix]:
    """Integrate dC/dt, sampling at the given absolute times.

    mode "packed" steps the real Hermitian parametrization (default);
    mode "full" steps the complex vectorized matrix.  Both must agree,
    which the test suite checks.
    """
    c0.validate()
    if c0.n_sites != gen.n_sites:
        raise ConfigError("covariance and generator disagree on n_sites")
    times = [float(t) for t in times]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ConfigError("sample times must be strictly increasing")
    if times[0] < c0.time:
        raise ConfigError("sample times must not precede the initial time")

    if mode == "packed":
        y0 = gen.pack(c0.c)

        def rhs(t, y):
            return gen.pack(gen.apply(gen.unpack(y)))

    elif mode == "full":
        y0 = c0.c.ravel(order="F").astype(complex)
        a, b = gen.affine()

        def rhs(t, y):
            return a @ y + b

    else:
        raise ConfigError(f"unknown covariance mode {mode!r}")

    sol = solve_ivp(
        rhs, (c0.time, times[-1]), y0, method="DOP853", t_eval=times, rtol=rtol, atol=atol
    )
    if not sol.success:
        raise IntegrationError(f"covariance integration failed: {sol.message}")
    out = []
    n = gen.n_sites
    for idx, t in enumerate(sol.t):
        y = sol.y[:, idx]
        c = gen.unpack(y) if mode == "packed" else y.reshape((n, n), order="F")
        cov = CovarianceMatrix(c=c, time=float(t))
        _recheck_integrated(cov)
        out.append(cov)
    return out


@dataclass
class SteadyCovarianceResult:
    """Steady covariance with residual and linear-system conditioning."""

    cov: CovarianceMatrix
    residual: float
    cond: float
    method: str


def _cond_estimate(a) -> float:
    """1-norm condition number; exact when small, estimated when large."""
    m = a.shape[0]
    if m <= 2500:
        return float(abs(np.linalg.cond(a.toarray(), 1)))
    lu = spla.splu(a.tocsc())
    inv_op = spla.LinearOperator(a.shape, matvec=lu.solve, dtype=a.dtype)
    return float(spla.onenormest(a) * spla.onenormest(inv_op))


def steady_covariance(
    gen: CovarianceGenerator,
    *,
    mode: str = "packed",
    method: str = "linear-solve",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    deriv_tol: float = 1e-10,
    max_time: float = 1e5,
) -> SteadyCovarianceResult:
    """Solve A vec(C) + b = 0 for the driven steady state.

    Requires drive (gamma_s + gamma_d > 0); without it the affine system is
    singular (any filling is stationary) and a DegeneracyError is raised.
    The ``time-evolve`` method is the slow cross-check for the default
    direct solve.
    """
    if gen.gamma_s + gen.gamma_d <= 0:
        raise DegeneracyError(
            "steady covariance undefined without drive: with gamma_s = gamma_d = 0 "
            "every total filling is stationary"
        )
    if method == "linear-solve":
        if mode == "packed":
            a, b = gen.packed_affine()
        elif mode == "full":
            a, b = gen.affine()
            a = a.tocsc()
        else:
            raise ConfigError(f"unknown covariance mode {mode!r}")
        try:
            vec = spla.spsolve(a, -b)
        except RuntimeError as exc:
            raise DegeneracyError(f"steady covariance solve singular: {exc}") from exc
        if not np.all(np.isfinite(vec)):
            raise DegeneracyError("steady covariance solve produced non-finite entries")
        n = gen.n_sites
        c = gen.unpack(vec) if mode == "packed" else vec.reshape((n, n), order="F")
        c = (c + c.conj().T) / 2
        cov = CovarianceMatrix(c=c, time=np.inf)
        cond = _cond_estimate(a)
    elif method == "time-evolve":
        cov = CovarianceMatrix.maximally_mixed(gen.n_sites)
        t, block = 0.0, 5.0
        while True:
            cov = evolve_covariance(cov, gen, t + block, rtol=rtol, atol=atol, mode=mode)
            t = cov.time
            if np.max(np.abs(gen.apply(cov.c))) < deriv_tol:
                break
            if t >= max_time:
                raise IntegrationError(
                    f"steady covariance not reached by t={max_time:g}: "
                    f"|dC/dt| = {np.max(np.abs(gen.apply(cov.c))):.3e}"
                )
            block = min(2 * block, 2000.0)
        cov = CovarianceMatrix((cov.c + cov.c.conj().T) / 2, time=np.inf)
        cond = float("nan")
    else:
        raise ConfigError(
            f"unknown steady-covariance method {method!r}; "
            "expected linear-solve or time-evolve"
        )
    cov.validate()
    residual = float(np.max(np.abs(gen.apply(cov.c))))
    return SteadyCovarianceResult(cov=cov, residual=residual, cond=cond, method=method)


def finite_difference_check(
    h: QuadraticHamiltonian,
    monitor: MonitorSpec,
    *,
    n_states: int = 3,
    seed: int = 7,
    delta: float = 1e-5,
    t_probe: float = 0.2,
) -> float:
    """Validate the generator coefficients against the exact Liouvillian.

    Evolves random density matrices with the exact engine, takes a centered
    finite difference of covariance_from_density around t_probe and compares
    it with gen.apply(C).  Returns the maximum entrywise violation; the
    derivation contract requires < 1e-6.
    """
    from .model import build_jump_set, fermion_operators, LatticeSpec

    n = h.n_sites
    ops = fermion_operators(n)
    lattice = LatticeSpec(n_sites=n, hopping=1.0)  # hopping unused by jump set
    jumps = build_jump_set(lattice, monitor)
    l = liouville.assemble_liouvillian(h, jumps, ops)
    gen = derive_generator(h, monitor)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        g = rng.normal(size=(ops.dim, ops.dim)) + 1j * rng.normal(size=(ops.dim, ops.dim))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        states = liouville.evolve_at(
            DensityMatrix(rho),
            l,
            [t_probe - delta, t_probe, t_probe + delta],
            rtol=1e-10,
            atol=1e-12,
            positivity="none",
        )
        c_minus, c_mid, c_plus = (covariance_from_density(s, ops).c for s in states)
        fd = (c_plus - c_minus) / (2 * delta)
        worst = max(worst, float(np.max(np.abs(fd - gen.apply(c_mid)))))
    return worst
