"""Rate-law and boundary-flux records.

A reaction edge fires at ``k * d(x) * prod_i x_i**z_i`` where ``z`` is the
substrate complex composition and ``d(x) = 1 / prod_g (1 + sum_t c_t x_t)`` is a
product of affine saturation groups.  Mass action is the case with no groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MASS_ACTION = "massaction"
MICHAELIS_MENTEN = "mm"


@dataclass(frozen=True)
class DenominatorTerm:
    """One ``multiplicity * x / Km`` summand of a saturation group."""

    species: int
    multiplicity: int
    km: float

    @property
    def coefficient(self) -> float:
        return self.multiplicity / self.km


@dataclass(frozen=True)
class DenominatorSpec:
    groups: tuple[tuple[DenominatorTerm, ...], ...] = ()

    def __post_init__(self) -> None:
        for group in self.groups:
            if not group:
                raise ValueError("empty denominator group")
            for term in group:
                if not (term.km > 0 and math.isfinite(term.km)):
                    raise ValueError(f"Michaelis constant must be positive, got {term.km!r}")
                if term.multiplicity < 1:
                    raise ValueError("denominator multiplicity must be >= 1")

    def group_values(self, x) -> list[float]:
        return [1.0 + sum(t.coefficient * float(x[t.species]) for t in g) for g in self.groups]

    def evaluate(self, x) -> float:
        """Return ``d(x)``, which lies in (0, 1] for nonnegative ``x``."""
        prod = 1.0
        for value in self.group_values(x):
            prod *= value
        return 1.0 / prod

    @property
    def n_parameters(self) -> int:
        return sum(len(g) for g in self.groups)


@dataclass(frozen=True)
class RateLaw:
    kind: str
    k_forward: float
    k_reverse: float = 0.0
    denominator: DenominatorSpec = field(default_factory=DenominatorSpec)

    def __post_init__(self) -> None:
        if self.kind not in (MASS_ACTION, MICHAELIS_MENTEN):
            raise ValueError(f"unknown rate law kind {self.kind!r}")
        if not (self.k_forward > 0 and math.isfinite(self.k_forward)):
            raise ValueError(f"forward rate constant must be positive, got {self.k_forward!r}")
        if not (self.k_reverse >= 0 and math.isfinite(self.k_reverse)):
            raise ValueError(f"reverse rate constant must be nonnegative, got {self.k_reverse!r}")
        if self.kind == MASS_ACTION and self.denominator.groups:
            raise ValueError("mass-action law cannot carry a denominator")

    @property
    def n_parameters(self) -> int:
        return 1 + (self.k_reverse > 0) + self.denominator.n_parameters


CONSTANT = "constant"
LINEAR = "linear"


@dataclass(frozen=True)
class BoundaryFlux:
    """Exchange flux attached to a complex.

    ``constant``: ``v_b = value``.  ``linear``: ``v_b = value * x[species]``.
    Negative values model efflux.
    """

    complex: int
    form: str
    value: float
    species: int | None = None

    def __post_init__(self) -> None:
        if self.form not in (CONSTANT, LINEAR):
            raise ValueError(f"unknown boundary form {self.form!r}")
        if not math.isfinite(self.value):
            raise ValueError("boundary value must be finite")
        if (self.form == LINEAR) != (self.species is not None):
            raise ValueError("linear boundary flux needs exactly one species")

    def evaluate(self, x) -> float:
        if self.form == CONSTANT:
            return self.value
        return self.value * float(np.asarray(x)[self.species])
