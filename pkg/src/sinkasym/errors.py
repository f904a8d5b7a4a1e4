"""Exception hierarchy shared by all modules.

Errors split along the lines the command-line front end needs for its exit
codes: malformed input, a regime or shape the library does not handle, and a
numerical or consistency failure detected while computing.
"""


class SinkError(Exception):
    """Base class for every error raised by the package."""


class InputError(SinkError, ValueError):
    """Malformed user input (bad file, wrong shape, invalid field)."""


class DimensionError(InputError):
    """Operands with mismatched dimensions or rate bases."""


class UnsupportedError(SinkError):
    """Input is well formed but outside the supported class of systems."""


class NotASinkError(UnsupportedError):
    """The linear part has an eigenvalue with nonnegative real part."""


class UnsupportedSpectrumError(UnsupportedError):
    """Complex or otherwise unsupported eigenvalues."""


class NonDiagonalizableError(UnsupportedError):
    """The linear part has a nontrivial Jordan block."""


class RegimeError(UnsupportedError):
    """A routine was called for the wrong spacing regime."""


class DivergentIntegralError(SinkError, ArithmeticError):
    """An improper convolution integral does not converge."""


class ConsistencyError(SinkError):
    """An internal cancellation or invariant that must hold did not."""


class TermOverflowError(SinkError):
    """A symbolic series grew past the configured term cap."""


class IntegrationError(SinkError):
    """Base class for failures of the numerical integrator."""


class EscapeError(IntegrationError):
    """The trajectory left the validity ball."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class StiffnessError(IntegrationError):
    """The step size collapsed below the representable minimum."""


class QuadratureError(SinkError):
    """An integral could not be evaluated to the requested tolerance."""


class InconclusiveFitError(SinkError):
    """Too few usable samples remain for a fit."""
