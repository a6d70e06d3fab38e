"""Exception hierarchy shared by every sdtlab module."""


class SDTError(Exception):
    """Base class for all sdtlab errors."""


class ValidationError(SDTError, ValueError):
    """An input violates a documented invariant (Hermiticity, trace, ranges...)."""


class DimensionMismatchError(ValidationError):
    pass


class UndefinedPhaseError(SDTError, ValueError):
    """Phase extraction was asked for a coherence that is numerically zero."""


class DegenerateStateError(SDTError, ValueError):
    pass


class ConvergenceError(SDTError, RuntimeError):
    """The optimizer stopped without meeting its tolerances.

    ``best`` carries the best-so-far result so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CalibrationError(SDTError, ValueError):
    pass


class ConfigurationError(SDTError, ValueError):
    pass


class InstabilityError(SDTError, RuntimeError):
    """A feedback loop diverged; ``trace`` holds the diagnostic series."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ParseError(SDTError, ValueError):
    """A data file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, column=None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line
        self.column = column


class ModelError(SDTError, ValueError):
    """The forward model produced an unphysical prediction."""
