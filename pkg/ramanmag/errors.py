"""
Exception hierarchy shared by the solver, sweep and CLI layers.
"""


class RamanMagError(Exception):
    """Base class for every error raised by ramanmag"""


class InvalidParameter(RamanMagError, ValueError):
    """A domain record was constructed with values outside its invariants"""


class SingularSystem(RamanMagError):
    """The constrained steady-state system is rank-deficient"""


class NonConvergent(RamanMagError):
    """The time integrator could not meet its error tolerance"""


class NoConvergence(RamanMagError):
    """A root search or fixed-point iteration failed to converge or bracket"""


class DegenerateCurve(RamanMagError):
    """A response curve is flat, so no field slope can be extracted"""


class ConfigError(RamanMagError):
    """Base class for configuration problems (CLI exit code 2)"""


class ParseError(ConfigError):
    """Config text is not valid JSON"""

    def __init__(self, message: str, line: int = None, column: int = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(ConfigError):
    """Config is well-formed JSON but violates the schema"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class BaselineMissing(ConfigError):
    """The baseline CSV passed to verify does not exist"""
