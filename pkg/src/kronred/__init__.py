"""Kron reduction of chemical reaction networks with enzyme kinetics."""

from . import _backend
from .dsl import dump_network, load_network, network_from_json, network_to_json, parse_network
from .errors import (
    EmptyKeptSet,
    GridNotCovered,
    IntegrationError,
    KronredError,
    MaxStepsExceeded,
    NonPositivity,
    NotAtEquilibrium,
    ParseError,
    SingularL22,
)
from .kinetics import full_rhs, laplacian, monomial, rate
from .laws import BoundaryFlux, DenominatorSpec, DenominatorTerm, RateLaw
from .network import Complex, Network, Reaction, Species, StoichiometryView, conservation_basis, enumerate_complexes, linkage_classes
from .reduction import (
    ChainParameters,
    ReducedNetwork,
    auxiliary_consistency,
    chain_reduce_closed_form,
    chain_reduced_law,
    plan_reduction,
    reduced_rhs,
    schur,
)
from .scan import scan_candidates
from .sim import ComparisonSpec, SolverConfig, Trajectory, compare, integrate, pulse_experiment

__version__ = "0.1.0"


def backend() -> str:
    """Name of the active kernel backend (``"cython"`` or ``"python"``)."""
    return _backend.name
