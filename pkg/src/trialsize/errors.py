"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class BracketError(RuntimeError):
    """A root bracket could not be established (no sign change)."""


class ConvergenceError(RuntimeError):
    """A numerical routine hit its iteration/depth cap before converging.

    The best estimate reached so far is attached as ``best_estimate``.
    """

    def __init__(self, message: str, best_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate


class DecompositionError(ValueError):
    """A matrix factorization failed (e.g. input not positive definite)."""


class InsufficientDataError(ValueError):
    """A fitted analysis has too few observations to estimate its parameters."""
