"""Exceptions shared across the toolkit."""


class DataFormatError(ValueError):
    """Malformed or invalid input data (bad file format, out-of-range value).

    Carries enough context to name the offending location; the CLI maps it
    to exit code 2.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}: " if line is None else f"{path}:{line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class DegenerateDataError(ValueError):
    """Data is well-formed but unusable (single-class labels, too few users).

    The CLI maps it to exit code 3.
    """
