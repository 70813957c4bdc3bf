"""Exception hierarchy shared by all modules."""


class SpdGeoError(Exception):
    """Base class for library errors."""


class DimensionError(SpdGeoError, ValueError):
    """Operands have incompatible shapes."""


class ValidationError(SpdGeoError, ValueError):
    """An input violates a structural precondition (not skew, not SPD, ...)."""


class CapExceededError(SpdGeoError):
    """An exhaustive enumeration would exceed the configured size cap."""


class NumericalFailure(SpdGeoError, ArithmeticError):
    """A post-condition that holds in exact arithmetic failed numerically."""


class PreconditionError(SpdGeoError, ValueError):
    """A mathematical precondition of an operation does not hold."""
