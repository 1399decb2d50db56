"""Exception types shared across the package.

Every failure mode that callers are expected to branch on gets its own
class here; the CLI maps them onto process exit codes.
"""


class MonitoredChainError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MonitoredChainError):
    """Malformed or inconsistent run configuration."""


class EngineSizeError(MonitoredChainError):
    """Requested chain length exceeds the exact engine size limit."""

    def __init__(self, n_sites, limit):
        self.n_sites = n_sites
        self.limit = limit
        super().__init__(
            f"exact engine size limit is {limit} sites, got n_sites={n_sites}; "
            f"use the covariance engine for longer chains"
        )


class HermiticityError(MonitoredChainError):
    """A state or generator lost Hermiticity beyond tolerance."""


class PositivityError(MonitoredChainError):
    """A state acquired a negative eigenvalue beyond tolerance."""


class DegeneracyError(MonitoredChainError):
    """Steady-state kernel is (numerically) degenerate, fixed point not unique."""


class IntegrationError(MonitoredChainError):
    """Time integration failed or the integrated state violates an invariant."""


class UndefinedDiffusionError(MonitoredChainError):
    """Diffusion coefficient undefined (vanishing drop) or infinite (free limit)."""


class PoleError(MonitoredChainError):
    """Propagator evaluated exactly on its pole."""
