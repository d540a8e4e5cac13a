"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ValidationError(ValueError):
    """A parameter record or file violates its structural constraints."""


class ResourceError(RuntimeError):
    """A computation would exceed a configured size budget."""


class PreconditionError(ValueError):
    """An operation was called on an input that does not meet its precondition."""


class ConsistencyError(AssertionError):
    """Two independent computations that must agree did not."""


class ClassificationFailure(RuntimeError):
    """No block class matched; carries the offending block for reporting."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block
