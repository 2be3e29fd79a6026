"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``ConfigurationError`` -> 2,
everything else derived from ``CollapseLabError`` -> 3.
"""

from __future__ import annotations


class CollapseLabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(CollapseLabError, ValueError):
    """Invalid parameters, malformed config, or a violated precondition."""


class NotNormalizedError(ConfigurationError):
    """A normalized wavefunction was required but not supplied."""


class DimensionMismatchError(ConfigurationError):
    """Graded matrices or arrays with incompatible shapes were combined."""


class IntegrationError(CollapseLabError, ArithmeticError):
    """A time step produced non-finite values or a failed linear solve."""


class StepSizeError(IntegrationError):
    """The step is too large for the exponential kernel to be evaluated safely."""


class DegenerateJumpError(IntegrationError):
    """A localisation jump landed where the wavefunction has no support."""


class DegenerateLagrangianError(CollapseLabError, ArithmeticError):
    """The velocity-momentum map of a Lagrangian is not invertible."""


class DegenerateConfigurationError(DegenerateLagrangianError):
    """An aikyon configuration with singular (beta1 - beta2)."""


class UnboundedHamiltonianError(ConfigurationError):
    """A trace Hamiltonian that is not bounded below cannot define a Boltzmann weight."""
