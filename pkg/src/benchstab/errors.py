"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A computation could not produce a finite, meaningful result."""


class DegenerateModelError(ValidationError):
    """A performance model or gap summary violates a non-degeneracy assumption."""
