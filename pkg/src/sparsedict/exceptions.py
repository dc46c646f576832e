"""Exception types shared across the package."""


class SparsedictError(Exception):
    """Base class for all errors raised by sparsedict."""


class InvalidInputError(SparsedictError):
    """Raised when inputs violate a documented precondition."""


class FormatError(SparsedictError):
    """Raised when a file does not conform to its declared format."""
