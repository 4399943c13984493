class InputError(ValueError):
    """Raised when arguments violate a documented precondition."""


class NumericalError(ArithmeticError):
    """Raised when a factorization fails even after maximal jitter."""
