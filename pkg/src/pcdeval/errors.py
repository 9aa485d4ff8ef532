"""Exception types raised across the package."""


class PcdError(ValueError):
    """Base class for rejected inputs."""


class InvalidBoxError(PcdError):
    """Bounding box with non-positive width or height."""


class SchemaError(PcdError):
    """A detection log that does not match its declared CSV schema.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int, optional
        1-based line number in the source (the header is line 1).
    field : str, optional
        Column name of the offending value.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class WindowTooSmallError(PcdError):
    """Sample too short for the asymptotic change-point test."""
