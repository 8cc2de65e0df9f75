"""Exception hierarchy shared across the package.

The CLI translates these into exit codes: precondition/domain/argument
failures exit 1, numeric/convergence failures exit 2.
"""


class RespondynError(Exception):
    """Base class for all package errors."""


class DomainError(RespondynError):
    """A phase-space point lies outside the map's domain."""


class ArgumentError(RespondynError):
    """An argument is structurally invalid (bad order, bad shape, ...)."""


class PreconditionError(RespondynError):
    """A documented operation precondition is violated."""


class NumericError(RespondynError):
    """A numeric procedure failed (root finder, singular system, ...)."""


class ConvergenceError(NumericError):
    """An iterative solver exhausted its budget; carries the residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SpecParseError(RespondynError):
    """A map/field/observable spec string could not be parsed."""

    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token
