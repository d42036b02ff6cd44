"""Exception types shared across the package."""


class BundleRevError(Exception):
    """Base class for all errors raised by bundlerev."""


class ValidationError(BundleRevError, ValueError):
    """Invalid input data. ``field`` names the offending field or JSON path."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class SizeError(BundleRevError):
    """An exact computation would exceed a configured size cap."""

    def __init__(self, message: str, size: float | None = None, cap: float | None = None):
        self.size = size
        self.cap = cap
        super().__init__(message)


class PreconditionError(BundleRevError, ValueError):
    """A checked lemma or operation was called outside its hypotheses."""


class SolverError(BundleRevError, RuntimeError):
    """The LP backend failed on a problem that is always feasible."""
