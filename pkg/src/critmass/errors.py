"""Exception types shared across the package."""


class CritmassError(Exception):
    """Base class for all package errors."""


class InvalidParameters(CritmassError, ValueError):
    pass


class DegenerateExponents(CritmassError, ValueError):
    """m1 + m2 = m1*m2, so the scaling exponents are undefined."""


class GridMismatch(CritmassError, ValueError):
    pass


class ZeroProfile(CritmassError, ValueError):
    pass


class InvalidSpec(CritmassError, ValueError):
    pass


class NoConvergence(CritmassError, RuntimeError):
    """Raised by callers that insist on convergence; carries the best result."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class OutOfRange(CritmassError, ValueError):
    pass


class IntersectionPoint(CritmassError, ValueError):
    """The exponent sum equals one, so x0 does not exist."""


class IntersectionRequired(CritmassError, ValueError):
    pass


class RegimeMismatch(CritmassError, ValueError):
    pass


class NonFiniteState(CritmassError, FloatingPointError):
    pass


class ConfigInvalid(CritmassError, ValueError):
    pass


class SupportTooLarge(CritmassError, ValueError):
    pass


class SubcriticalMasses(CritmassError, ValueError):
    pass


class MissingConstants(CritmassError, LookupError):
    pass
