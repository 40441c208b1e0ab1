"""Rate laws, the state-dependent complex-graph Laplacian and the full RHS.

The full model is ``dx/dt = Z (v_b(x) - L(x) m(x))`` with ``m`` the vector of
complex monomials ``prod_i x_i**Z[i, k]`` (computed by integer powers, so zero
concentrations are fine) and ``L = Delta - A`` where ``A[head, tail]`` sums
``k * d(x)`` over the edges ``tail -> head``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import NonFiniteRHS
from .laws import CONSTANT
from .network import Network, StoichiometryView


@dataclass(frozen=True)
class FlatModel:
    """Contiguous arrays consumed by the kernels."""

    cptr: np.ndarray
    csp: np.ndarray
    ccoef: np.ndarray
    tails: np.ndarray
    heads: np.ndarray
    ek: np.ndarray
    gptr: np.ndarray
    tptr: np.ndarray
    tsp: np.ndarray
    tcoef: np.ndarray
    bkind: np.ndarray
    bval: np.ndarray
    bsp: np.ndarray

    @property
    def args(self) -> tuple:
        return (
            self.cptr, self.csp, self.ccoef, self.tails, self.heads, self.ek,
            self.gptr, self.tptr, self.tsp, self.tcoef, self.bkind, self.bval, self.bsp,
        )


def _i64(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.int64)


def _f64(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64)


def flat_model(view: StoichiometryView) -> FlatModel:
    cached = view._cache.get("flat")
    if cached is not None:
        return cached
    net = view.network
    cptr, csp, ccoef = [0], [], []
    for cx in net.complexes:
        for i, k in cx.composition:
            csp.append(i)
            ccoef.append(k)
        cptr.append(len(csp))
    ek, gptr, tptr, tsp, tcoef = [], [0], [0], [], []
    for j, rev in zip(view.edge_reaction, view.edge_reverse):
        law = net.reactions[j].law
        ek.append(law.k_reverse if rev else law.k_forward)
        for group in law.denominator.groups:
            for term in group:
                tsp.append(term.species)
                tcoef.append(term.coefficient)
            tptr.append(len(tsp))
        gptr.append(len(tptr) - 1)
    bkind = np.zeros(net.c, dtype=np.int64)
    bval = np.zeros(net.c)
    bsp = np.zeros(net.c, dtype=np.int64)
    for flux in net.boundary:
        bkind[flux.complex] = 1 if flux.form == CONSTANT else 2
        bval[flux.complex] = flux.value
        bsp[flux.complex] = flux.species or 0
    flat = FlatModel(
        _i64(cptr), _i64(csp), _i64(ccoef), _i64(view.tails), _i64(view.heads), _f64(ek),
        _i64(gptr), _i64(tptr), _i64(tsp), _f64(tcoef), bkind, bval, bsp,
    )
    view._cache["flat"] = flat
    return flat


def _state(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def monomial(view: StoichiometryView, complex: int, x) -> float:
    """``prod_i x_i**Z[i, complex]`` by repeated multiplication."""
    prod = 1.0
    for i, k in view.network.complexes[complex].composition:
        xi = float(x[i])
        for _ in range(k):
            prod *= xi
    return prod


def monomial_vector(view: StoichiometryView, x) -> np.ndarray:
    f = flat_model(view)
    return np.asarray(_backend.kernels.monomials(f.cptr, f.csp, f.ccoef, _state(x), np.empty(view.c)))


def edge_weights(view: StoichiometryView, x) -> np.ndarray:
    """Adjacency weight ``k_e * d_e(x)`` of every directed edge."""
    f = flat_model(view)
    return np.asarray(
        _backend.kernels.edge_weights(f.ek, f.gptr, f.tptr, f.tsp, f.tcoef, _state(x), np.empty(view.r))
    )


def saturation(network: Network, view: StoichiometryView, edge: int, x) -> float:
    """``d_j(x)`` of the reaction owning ``edge``; both halves of a reversible pair share it."""
    return network.reactions[int(view.edge_reaction[edge])].law.denominator.evaluate(x)


def rate(network: Network, view: StoichiometryView, edge: int, x) -> float:
    """Flux along one directed edge: ``d(x) * k * monomial(tail)``."""
    law = network.reactions[int(view.edge_reaction[edge])].law
    k = law.k_reverse if view.edge_reverse[edge] else law.k_forward
    return saturation(network, view, edge, x) * k * monomial(view, int(view.tails[edge]), x)


def edge_rates(network: Network, view: StoichiometryView, x) -> np.ndarray:
    return np.array([rate(network, view, e, x) for e in range(view.r)])


def net_rate(network: Network, view: StoichiometryView, reaction: int, x) -> float:
    """Forward minus reverse flux of a reaction."""
    edges = np.flatnonzero(view.edge_reaction == reaction)
    total = 0.0
    for e in edges:
        v = rate(network, view, int(e), x)
        total += -v if view.edge_reverse[e] else v
    return total


def boundary_vector(network: Network, view: StoichiometryView, x) -> np.ndarray:
    vb = np.zeros(view.c)
    for flux in network.boundary:
        vb[flux.complex] = flux.evaluate(x)
    return vb


@dataclass(frozen=True)
class LaplacianEval:
    A: np.ndarray
    L: np.ndarray
    x: np.ndarray


def laplacian(network: Network, view: StoichiometryView, x) -> LaplacianEval:
    x = _state(x)
    f = flat_model(view)
    w = edge_weights(view, x)
    L = np.asarray(_backend.kernels.assemble_laplacian(f.tails, f.heads, w, np.empty((view.c, view.c))))
    A = np.diag(np.diag(L)) - L
    return LaplacianEval(A=A, L=L, x=x.copy())


def full_rhs(network: Network, view: StoichiometryView, x, t: float = 0.0) -> np.ndarray:
    """``Z (v_b - L(x) m(x))``; ``t`` is accepted for integrator compatibility."""
    f = flat_model(view)
    out = np.asarray(_backend.kernels.full_rhs(*f.args, _state(x), np.empty(view.m)))
    check_finite(out)
    return out


def stoichiometric_rhs(network: Network, view: StoichiometryView, x) -> np.ndarray:
    """Reference evaluation ``S v(x) + Z v_b(x)`` from per-edge rates."""
    return view.S @ edge_rates(network, view, x) + view.Z @ boundary_vector(network, view, x)


def check_finite(dx: np.ndarray) -> None:
    bad = np.flatnonzero(~np.isfinite(dx))
    if bad.size:
        raise NonFiniteRHS(f"non-finite derivative for species index {bad[0]}", int(bad[0]))
