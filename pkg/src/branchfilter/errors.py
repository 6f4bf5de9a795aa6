"""Exception hierarchy shared by the library and the CLI."""


class BranchFilterError(Exception):
    """Base class for all library errors."""


class DomainError(BranchFilterError, ValueError):
    """An argument lies outside the domain of the operation."""


class InfeasibleError(BranchFilterError, ValueError):
    """Parameters or moments have no valid counterpart in the model."""


class PriorInfeasibleError(InfeasibleError):
    """The feasible arc of the prior curve is empty."""


class DegenerateSeriesError(BranchFilterError, ValueError):
    """An estimator denominator vanishes on the supplied series."""


class InsufficientDataError(BranchFilterError, ValueError):
    """The series is too short for the requested estimator."""


class SurvivalConditioningError(BranchFilterError, RuntimeError):
    """Rejection sampling for survival exceeded the attempt cap."""


class PointMassError(BranchFilterError, ValueError):
    """A density estimate was requested for a sample with no spread."""


class DegeneracyError(BranchFilterError, RuntimeError):
    """All particle weights vanished.

    ``step`` is the generation index at which it happened (``None`` when
    raised outside the filter loop).
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step

    def __str__(self):
        msg = super().__str__()
        if self.step is not None:
            return f"{msg} (step {self.step})"
        return msg
