"""Exception types shared across the engine."""


class ValidationError(ValueError):
    """Invalid input data or configuration supplied by the caller."""


class StreamFormatError(ValidationError):
    """Malformed feature-stream or annotation file.

    Carries the one-based line number and offending field so CLI users can
    locate the problem in large files.
    """

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field '{field}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


class ConfigurationError(ValidationError):
    """The requested pipeline configuration cannot run on the given input."""


class EstimationError(RuntimeError):
    """Model estimation is infeasible on the given series."""
