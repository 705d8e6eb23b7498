"""Exception types shared across the package."""


class InvalidStructureError(ValueError):
    """A signal structure descriptor violates its constraints (e.g. k > n)."""


class BoundNotValidError(ValueError):
    """A closed-form bound was queried below its validity threshold."""

    def __init__(self, message: str, threshold: float):
        super().__init__(message)
        self.threshold = threshold


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class RunQualityError(RuntimeError):
    """An experiment produced too many unusable trials to report statistics."""
