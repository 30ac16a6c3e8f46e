"""Exception hierarchy shared by every module."""


class LhvError(Exception):
    """Base class for all errors raised by lhvkit."""


class DomainError(LhvError, ValueError):
    """An argument lies outside the domain of the operation (e.g. non-finite)."""


class PreconditionError(LhvError, ValueError):
    pass


class ConfigError(LhvError, ValueError):
    """Invalid run or sampling configuration."""


class NumericError(LhvError, ArithmeticError):
    """Quadrature failed to converge or the integrand produced a non-finite value."""

    def __init__(self, message, residual=None, abscissa=None):
        super().__init__(message)
        self.residual = residual
        self.abscissa = abscissa


class DataError(LhvError, ValueError):
    pass


class StructuralError(LhvError, RuntimeError):
    """An algebraic identity that must hold exactly did not (construction bug)."""
