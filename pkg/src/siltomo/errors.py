"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition (bad shape, size, range)."""


class CapacityError(ValidationError):
    """A requested exhaustive computation exceeds the supported bound."""


class FormatError(ValueError):
    """A file does not conform to one of the binary container formats."""
