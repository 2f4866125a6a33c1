"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when arguments violate a documented precondition."""


class NumericalError(ArithmeticError):
    """Raised when a numerical routine fails (non-convergence, blow-up, loss of definiteness).

    Attributes
    ----------
    residual : float or None
        Last residual or offending value, when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
