"""Exception hierarchy shared by all rdtool modules."""

from __future__ import annotations


class RdtoolError(Exception):
    """Base class for every error raised by rdtool."""


class NumericalError(RdtoolError):
    """A numerical procedure failed (CLI exit code 3)."""


class ConfigError(RdtoolError):
    """Malformed or inconsistent experiment configuration (CLI exit code 2)."""


class DomainError(RdtoolError, ValueError):
    """Argument outside the domain where a function is defined."""


class AssumptionError(RdtoolError, ValueError):
    """A structural hypothesis on the nonlinearity (e.g. a + b k > 0) fails."""


class SingularOperatorError(NumericalError):
    pass


class EigenIterationError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    """Newton iteration did not reach tolerance.

    ``best_residual`` holds the smallest residual seen and ``best_state``
    the corresponding iterate, if any.
    """

    def __init__(self, message: str, best_residual: float = float("nan"), best_state=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_state = best_state


class NegativeSolutionError(NumericalError):
    """Newton converged to a state that left the nonnegative cone."""

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class FoldDetectedError(NumericalError):
    """Natural continuation broke down next to a fold of the branch."""

    def __init__(self, message: str, last_point=None, points=None):
        super().__init__(message)
        self.last_point = last_point
        self.points = points or []


class BlowUpError(NumericalError):
    pass


class QuadratureStepError(RdtoolError, ValueError):
    pass


class InsufficientHistoryError(RdtoolError, ValueError):
    pass


class MemoryBudgetError(NumericalError):
    pass
