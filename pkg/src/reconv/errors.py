"""Exception types shared across the package."""


class ReconvError(Exception):
    """Base class for all reconv errors."""


class ShapeError(ReconvError, ValueError):
    """An input violates an operation's shape or range contract
    (mismatched extents, labels outside [0, K), empty dataset)."""


class FormatError(ReconvError, ValueError):
    """A dataset file does not match its documented byte layout.

    ``offset`` is the byte position of the first violation when known,
    ``record`` the index of the offending record.
    """

    def __init__(self, message: str, offset: int | None = None, record: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.record = record


class ConfigError(ReconvError, ValueError):
    """A configuration file or key/value assignment is invalid."""


class NumericError(ReconvError, ArithmeticError):
    """A computation produced non-finite values."""
