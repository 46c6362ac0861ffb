class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class UnsupportedKernelError(ValueError):
    """Convolution kernel shape is not supported (e.g. even size)."""


class ConfigurationError(ValueError):
    """A configuration value or input size violates a module's preconditions."""


class ParseError(ValueError):
    """Malformed file contents; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
