"""Exception hierarchy shared by all modules."""


class RiskLQRError(Exception):
    """Base class for library errors."""


class DimensionError(RiskLQRError, ValueError):
    """Array shapes are inconsistent with each other."""


class InvalidInput(RiskLQRError, ValueError):
    """Values are outside the admissible domain (non-finite, negative, ...)."""


class NumericalError(RiskLQRError, ArithmeticError):
    """A numerical guard tripped (singular solve, unstable closed loop, ...)."""


class ConvergenceError(NumericalError):
    """An iteration did not converge within its budget.

    Attributes
    ----------
    residuals : list of float
        Fixed-point gap at every iteration that was run.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)
