"""Exception types shared across the package."""


class RuelleError(Exception):
    """Base class for all package errors."""


class EnumerationCapExceeded(RuelleError):
    """Raised when a word enumeration would exceed the configured cap."""


class ConfigError(RuelleError):
    """Invalid or inconsistent configuration input."""


class PreconditionError(RuelleError):
    """A documented precondition of an operation does not hold."""


class NonUniqueDominantError(PreconditionError):
    """Several transitive components share the maximal pressure.

    Carries the tied component index set in ``tied``.
    """

    def __init__(self, message, tied):
        super().__init__(message)
        self.tied = tuple(tied)


class ConvergenceError(RuelleError):
    """An iterative solve did not reach the requested tolerance.

    ``partial`` holds the best available result for inspection.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
