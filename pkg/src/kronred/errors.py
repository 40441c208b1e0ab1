"""Exception hierarchy shared by all kronred modules."""

from __future__ import annotations


class KronredError(Exception):
    """Base class for all library errors."""


class ParseError(KronredError):
    """Malformed network description.

    ``line`` and ``column`` are 1-based; either may be ``None`` when the
    problem is not tied to a single location (e.g. an empty network).
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        if line is None:
            text = message
        elif column is None:
            text = f"line {line}: {message}"
        else:
            text = f"line {line}, col {column}: {message}"
        super().__init__(text)


class NetworkError(KronredError):
    """A network record violates a structural invariant."""


class ReductionError(KronredError):
    """Base class for failures while planning or evaluating a reduction."""


class EmptyKeptSet(ReductionError):
    """Every complex was selected for removal."""


class SingularL22(ReductionError):
    """The removed-complex block of the Laplacian cannot be inverted reliably."""

    def __init__(self, message: str, condition: float = float("inf")):
        self.condition = condition
        super().__init__(message)


class IntegrationError(KronredError):
    """An ODE run could not be completed.

    The partial trajectory, when available, is attached as ``trajectory``.
    """

    def __init__(self, message: str, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class NonPositivity(IntegrationError):
    """Negative concentrations persisted down to the minimum step."""


class StepSizeTooSmall(IntegrationError):
    """The error controller demanded a step below ``h_min``."""


class MaxStepsExceeded(IntegrationError):
    """The step budget ran out before the horizon."""


class NonFiniteRHS(KronredError):
    """The right-hand side produced NaN or infinity."""

    def __init__(self, message: str, species: int | None = None):
        self.species = species
        super().__init__(message)


class NotAtEquilibrium(KronredError):
    """A pulse experiment was started from a state that is not stationary."""


class GridNotCovered(KronredError):
    """A comparison grid extends beyond a trajectory's time span."""
