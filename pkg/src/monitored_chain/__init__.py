"""Transport in a boundary-driven free-fermion chain under continuous
local density monitoring.

Two interchangeable engines solve the same Lindblad dynamics: an exact
vectorized superoperator on the full Fock space (the oracle, exponential
in N) and a closed equation of motion for the two-point function
(quadratic in N, what the dephasing sweeps use).  A quantum-jump Monte
Carlo unraveling checks that conditional averages reproduce the
unconditional dynamics, and the transport layer extracts the diffusion
coefficient from the discrete Fick's law to exhibit its 1/gamma scaling.
"""

from .covariance import (
    CovarianceGenerator,
    CovarianceMatrix,
    covariance_from_density,
    derive_generator,
    evolve_covariance,
    finite_difference_check,
    steady_covariance,
)
from .errors import (
    ConfigError,
    DegeneracyError,
    EngineSizeError,
    HermiticityError,
    IntegrationError,
    MonitoredChainError,
    PoleError,
    PositivityError,
    UndefinedDiffusionError,
)
from .liouville import (
    DensityMatrix,
    Superoperator,
    assemble_liouvillian,
    evolve,
    expectation,
    lindblad_action,
    steady_state,
)
from .model import (
    EXACT_ENGINE_MAX_SITES,
    FermionOps,
    JumpKind,
    JumpSpec,
    LatticeSpec,
    MonitorSpec,
    QuadraticHamiltonian,
    build_hamiltonian,
    build_jump_set,
    current_operator,
    fermion_operators,
    fock_state,
    jump_operator,
    many_body_hamiltonian,
)
from .theory import (
    DiffusonPair,
    TheoryParams,
    compare_scaling,
    diffuson,
    drude_conductivity,
    modified_diffusion,
)
from .trajectories import (
    EnsembleEstimate,
    TrajectoryState,
    sample_trajectory,
    trajectory_average,
)
from .transport import (
    DiffusionEstimate,
    ScalingFit,
    TransportObservables,
    bond_currents,
    continuity_check,
    fick_diffusion,
    fit_scaling,
    gamma_sweep,
    steady_point,
)

__version__ = "0.1.0"
