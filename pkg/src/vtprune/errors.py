"""Exception types shared across the engine."""


class VtpruneError(Exception):
    """Base class for all engine errors."""


class ShapeMismatchError(VtpruneError, ValueError):
    """An array did not have the shape a contract requires."""

    def __init__(self, what: str, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected shape {expected}, got {actual}")


class InvalidValueError(VtpruneError, ValueError):
    """Array contents violate an invariant (negative, non-finite, zero-norm...)."""


class ConfigError(VtpruneError, ValueError):
    """A configuration value is out of its legal range."""


class TraceFormatError(VtpruneError):
    """A trace file is malformed. Carries the byte offset of the bad record."""

    def __init__(self, message: str, byte_offset: int | None = None):
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        super().__init__(message)
