"""
Exception hierarchy for the Hellmann toolkit.

Every exception carries the process exit code the command-line front end maps it to.
"""


class HellmannError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ParameterError(HellmannError, ValueError):
    """An input value lies outside the domain of the operation."""

    exit_code = 2


class ConfigError(HellmannError):
    """A table configuration or preset could not be parsed."""

    exit_code = 2


class UnsupportedStateError(HellmannError):
    """The requested state has no closed form for this operation (n > 0 moderation)."""

    exit_code = 2


class NoBoundStateError(HellmannError):
    """The net Coulomb strength a - b is not attractive, so no Coulomb bound state exists."""

    exit_code = 3


class SingularDenominatorError(HellmannError):
    """a == b makes every perturbative denominator (a - b)^k vanish."""

    exit_code = 6


class VerificationBreach(HellmannError):
    """A cross-validation suite found a deviation beyond tolerance."""

    exit_code = 4


class NumericError(HellmannError):
    """Base class for numerical failures."""

    exit_code = 5


class QuadratureError(NumericError):
    """
    An adaptive integral did not reach the requested accuracy.

    Args:
        message (str): Description of the failure
        residual (float): Error estimate reported by the integrator
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(NumericError):
    """
    The eigenvalue solver did not converge.

    Args:
        message (str): Description of the failure
        diagnostics (dict, optional): Last bracket, energy and node count
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StateNotBoundError(NumericError):
    """Node-count targeting failed: the potential has fewer bound states than requested."""
