"""Exception types shared across the package."""


class SafeEvopError(Exception):
    """Base class for all safeevop errors."""


class OutOfBoundsError(SafeEvopError):
    """A coordinate fell outside its admissible interval."""

    def __init__(self, axis: int, value: float, lo: float, hi: float):
        self.axis = axis
        self.value = value
        self.lo = lo
        self.hi = hi
        super().__init__(
            f"coordinate {axis} = {value!r} outside [{lo!r}, {hi!r}]"
        )


class DimensionMismatchError(SafeEvopError):
    """Vector or matrix dimensions do not agree."""


class NonFiniteError(SafeEvopError):
    """An input contained NaN or infinity."""


class InvalidConfigError(SafeEvopError):
    """Session configuration violates its invariants."""


class UnknownSuggestionError(SafeEvopError):
    """Measurement does not match the pending suggestion."""


class DuplicateMeasurementError(SafeEvopError):
    """Measurement for this suggestion was already ingested."""


class NotReadyError(SafeEvopError):
    """Cycle processing requested before all measurements arrived."""


class SessionFinishedError(SafeEvopError):
    """Session has run its configured number of cycles."""


class NoCycleCompletedError(SafeEvopError):
    """Requested data that only exists after a completed cycle."""


class GridTooLargeError(SafeEvopError):
    """Requested grid resolution exceeds the enumeration budget."""


class InfeasibleAtCenterError(SafeEvopError):
    """Radius shrinking requires a strictly feasible center value."""


class NotReachedError(SafeEvopError):
    """Radius shrinking exhausted its halving budget."""
