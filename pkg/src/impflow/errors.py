"""Exception types shared across the package."""


class ImpflowError(Exception):
    """Base class for all library errors."""


class DomainError(ImpflowError, ValueError):
    """An argument lies outside the domain of the operation."""


class GrazingError(ImpflowError):
    """A trajectory touches the impulse set tangentially.

    Attributes:
        time: time along the segment where the tangency was found.
        point: coordinates of the touching point.
    """

    def __init__(self, message, time=None, point=None):
        super().__init__(message)
        self.time = time
        self.point = point


class ConsistencyError(ImpflowError):
    """Internal consistency check failed (e.g. impulse gaps below eta)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
