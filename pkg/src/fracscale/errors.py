"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ConvergenceError(RuntimeError):
    """An iterative evaluation failed to converge within its term budget."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


class ContainmentError(RuntimeError):
    """Contour containment could not be decided unambiguously."""


class TreeStructureError(RuntimeError):
    """The contour set does not admit the requested tree construction."""


class UsageError(ValueError):
    """Bad command-line or configuration input."""
