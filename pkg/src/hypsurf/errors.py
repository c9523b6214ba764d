"""Exception types shared across the package."""


class HypSurfError(Exception):
    """Base class for all package errors."""


class DomainError(HypSurfError, ValueError):
    """Lengths outside the admissible set (triangle inequality, positivity)."""


class ConvergenceError(HypSurfError, RuntimeError):
    """A root finder or iterative procedure failed to converge."""


class ValidationError(HypSurfError, ValueError):
    """A combinatorial triangulation violates one of its invariants."""

    def __init__(self, message, where=None):
        super().__init__(message if where is None else f"{message} ({where})")
        self.where = where


class PlacementError(HypSurfError, ValueError):
    """A face copy cannot be placed across the requested slot."""


class CoefficientDegenerate(HypSurfError, ArithmeticError):
    """The angle-sum derivative along the dependent edge vanishes."""


class BudgetExceeded(HypSurfError, RuntimeError):
    """An expansion, flip or iteration cap was hit."""


class FlowError(HypSurfError, RuntimeError):
    """A deformation flow cannot be planned or continued."""


class FlowStalled(FlowError):
    """Step control shrank the step below its floor."""
