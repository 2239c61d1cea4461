"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class RbcheckError(Exception):
    exit_code = 1


class ModelError(RbcheckError):
    """The model document or model structure is invalid."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


class ModelSyntaxError(ModelError):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class InvalidScheduler(RbcheckError, ValueError):
    pass


class UnsupportedQuery(RbcheckError):
    exit_code = 2


class ResourceLimitExceeded(RbcheckError):
    exit_code = 3


class NonConvergence(RbcheckError):
    exit_code = 4


class NumericalError(RbcheckError, ArithmeticError):
    """A value iteration produced a non-finite or out-of-range value."""
