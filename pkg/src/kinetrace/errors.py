"""Exception hierarchy shared by all kinetrace modules."""


class KinetraceError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(KinetraceError):
    """An argument is outside its documented domain."""


class DesignError(KinetraceError):
    """Invalid FIR design request (band edges, tap count)."""


class LengthError(KinetraceError):
    """A series is too short for the requested operation."""


class ShapeError(KinetraceError):
    """Array shapes are inconsistent with each other."""


class DegenerateChannelError(KinetraceError):
    """A channel is constant and cannot be normalized."""


class DegenerateBatchError(KinetraceError):
    """Batch statistics are undefined (train-mode batch of one)."""


class DegenerateSeriesError(KinetraceError):
    """A series is constant; correlation against it is undefined."""


class ChannelError(KinetraceError):
    """A requested channel name is not present in the recording."""


class HistoryError(KinetraceError):
    """A trial starts too early for the requested lag window."""


class IoError(KinetraceError):
    """A required file is missing or unreadable."""


class FormatError(KinetraceError):
    """An interchange file is structurally malformed."""


class ValidationError(KinetraceError):
    """Loaded data violates a recording invariant."""


class DivergenceError(KinetraceError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class EmptyReportError(KinetraceError):
    """A report was requested over zero results."""


class ConfigError(KinetraceError):
    """A run configuration file is invalid."""
