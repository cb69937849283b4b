"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
PhysicsError -> 3, NumericalError -> 4, OptimizationError -> 5.
"""


class ThorqError(Exception):
    """Base class for all package errors."""


class ConfigError(ThorqError):
    """Malformed configuration input (parse error, bad unit, unknown key)."""


class PhysicsError(ThorqError):
    """Physically invalid or unsupported configuration."""


class NumericalError(ThorqError):
    """Numerical failure (integrator accuracy, invariant violation)."""


class TruncationError(NumericalError):
    """Fock-space truncation too small for the requested dynamics."""


class FitError(NumericalError):
    """A fit did not converge or is inconsistent with its model."""


class OptimizationError(ThorqError):
    """Pulse optimization failed to reach the requested tolerance."""

    def __init__(self, message, best_pulse=None, best_cost=None):
        super().__init__(message)
        self.best_pulse = best_pulse
        self.best_cost = best_cost
