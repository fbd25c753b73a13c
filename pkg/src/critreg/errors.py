"""Exception hierarchy shared by all modules."""


class CritregError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(CritregError, ValueError):
    """Fields or arrays that should share a grid do not."""


class DomainError(CritregError, ValueError):
    """An argument lies outside the domain of a function."""


class GeometryError(CritregError, ValueError):
    """A ball or probe point does not fit inside the grid."""


class PreconditionError(CritregError, ValueError):
    """A documented precondition of an operation is violated.

    ``measured`` carries the offending value when one exists.
    """

    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class InsufficientDataError(CritregError, ValueError):
    """Too few usable data points for a fit."""


class EllipticityError(CritregError, ValueError):
    """A coefficient is not bounded below by a positive constant."""


class InvalidFieldError(CritregError, ValueError):
    """A user-supplied vector field returned non-finite values."""


class ValidationError(CritregError, ValueError):
    """A configuration failed schema or semantic validation."""
