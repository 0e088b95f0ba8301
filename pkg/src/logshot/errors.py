"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class AccuracyError(ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""


class NumericalError(ArithmeticError):
    """A numerical failure that indicates a bug or a broken invariant."""
