"""Exception hierarchy shared by all neurosort modules."""


class NeurosortError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(NeurosortError, ValueError):
    """Invalid configuration value or combination."""


class ParseError(NeurosortError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyInputError(NeurosortError, ValueError):
    pass


class UnsupportedError(NeurosortError, ValueError):
    pass


class InputTooShortError(NeurosortError, ValueError):
    pass


class DimensionError(NeurosortError, ValueError):
    pass


class InsufficientDataError(NeurosortError, ValueError):
    pass


class NumericalError(NeurosortError, ArithmeticError):
    """Singular or ill-conditioned linear system."""

    def __init__(self, message, smallest_pivot=None):
        if smallest_pivot is not None:
            message = f"{message} (smallest pivot {smallest_pivot:.3e})"
        super().__init__(message)
        self.smallest_pivot = smallest_pivot
