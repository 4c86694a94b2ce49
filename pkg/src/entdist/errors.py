"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """Raised when an argument or input file violates a documented precondition."""


class NumericalError(RuntimeError):
    """Raised when an iterative numerical routine fails to converge."""
