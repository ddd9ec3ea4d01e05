"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class EvaluationError(ArithmeticError):
    """An integrand produced a non-finite value at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SingularityError(ArithmeticError):
    """The conditional variance rho*sigma0^2 - m^2/q fell below its safety margin."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class NumericalError(ArithmeticError):
    """A fixed-point iteration produced non-finite iterates."""

    def __init__(self, message, history_length=0):
        super().__init__(message)
        self.history_length = history_length


class ContractError(TypeError):
    """An operation was called with an argument variant it does not handle."""
