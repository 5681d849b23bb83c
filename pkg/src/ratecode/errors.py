"""Exception hierarchy. Every error raised by the package derives from RatecodeError."""


class RatecodeError(Exception):
    """Base class for all package errors."""


class InvalidInput(RatecodeError, ValueError):
    pass


class InvalidDistortion(InvalidInput):
    pass


class NotPositiveSemidefinite(RatecodeError, ValueError):
    pass


class InvalidPartition(RatecodeError, ValueError):
    pass


class InvalidGroup(RatecodeError, KeyError):
    pass


class TooManySamples(RatecodeError, ValueError):
    pass


class DimensionMismatch(RatecodeError, ValueError):
    pass


class HardLabelsRequired(RatecodeError, ValueError):
    pass


class InvalidSpec(RatecodeError, ValueError):
    pass


class ParseError(RatecodeError, ValueError):
    """Malformed data file. ``row`` and ``column`` are 1-based when known."""

    def __init__(self, message, row=None, column=None, path=None):
        self.row = row
        self.column = column
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
