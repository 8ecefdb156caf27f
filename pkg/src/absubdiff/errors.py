"""Exception hierarchy shared by the library and the CLI."""


class AbsubdiffError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(AbsubdiffError, ValueError):
    """A parameter lies outside the supported envelope."""


class MLOverflowError(AbsubdiffError, OverflowError):
    """Mittag-Leffler value exceeds the floating point range."""


class PreconditionError(AbsubdiffError, ValueError):
    """An operation was called on data that violates its precondition."""


class GridMismatchError(AbsubdiffError, ValueError):
    pass


class ConfigError(AbsubdiffError, ValueError):
    """Invalid run configuration (CLI exit status 2)."""


class SolverError(AbsubdiffError, RuntimeError):
    """Failure while marching the sub-diffusion equation (CLI exit status 3)."""

    def __init__(self, message, time_index=None):
        super().__init__(message)
        self.time_index = time_index


class ConvergenceError(SolverError):
    def __init__(self, message, time_index=None, last_update=None):
        super().__init__(message, time_index)
        self.last_update = last_update


class SingularSystemError(SolverError):
    pass


class ExprSyntaxError(ConfigError):
    """Malformed expression; ``offset`` is the byte offset of the offending token."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class ExprEvalError(AbsubdiffError, ArithmeticError):
    """Evaluation failed (division by zero, square root of a negative, ...)."""

    def __init__(self, message, subexpr):
        super().__init__(f"{message} in {subexpr}")
        self.subexpr = subexpr
