"""Kron reduction of the complex graph.

Removing a set of complexes replaces the Laplacian by its Schur complement
``L_hat = L11 - L12 L22^-1 L21`` (re-evaluated at every state), the boundary
fluxes by ``P v_b`` with ``P = [I, -L12 L22^-1]`` and ``Z`` by its kept
columns ``Z_hat``.  Species whose ``Z_hat`` row vanishes no longer move; they
are pinned at their values in the reference state.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import EmptyKeptSet, SingularL22
from .kinetics import boundary_vector, check_finite, flat_model, laplacian, monomial_vector
from .network import Network, StoichiometryView

SINGULAR_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class ReducedNetwork:
    parent: Network
    view: StoichiometryView
    kept: tuple[int, ...]
    removed: tuple[int, ...]
    Z_hat: np.ndarray
    constant_species: frozenset[int]
    frozen_values: dict[int, float]
    reference_state: np.ndarray
    reference_condition: float = 1.0
    _arrays: dict = field(default_factory=dict, repr=False)

    @property
    def c_hat(self) -> int:
        return len(self.kept)

    @property
    def kept_array(self) -> np.ndarray:
        if "kept" not in self._arrays:
            self._arrays["kept"] = np.asarray(self.kept, dtype=np.int64)
            self._arrays["removed"] = np.asarray(self.removed, dtype=np.int64)
            const = sorted(self.constant_species)
            self._arrays["const"] = np.asarray(const, dtype=np.int64)
            self._arrays["frozen"] = np.asarray([self.frozen_values[i] for i in const], dtype=float)
        return self._arrays["kept"]

    @property
    def removed_array(self) -> np.ndarray:
        self.kept_array
        return self._arrays["removed"]

    def pin(self, x) -> np.ndarray:
        """Copy of ``x`` with constant species set to their frozen values."""
        self.kept_array
        out = np.array(x, dtype=np.float64)
        out[self._arrays["const"]] = self._arrays["frozen"]
        return out

    @property
    def dynamic_species(self) -> list[int]:
        return [i for i in range(self.parent.m) if i not in self.constant_species]


@dataclass(frozen=True)
class SchurEval:
    L_hat: np.ndarray
    P_vb: np.ndarray
    condition_estimate: float
    x: np.ndarray


def plan_reduction(
    network: Network,
    view: StoichiometryView,
    removed,
    x_ref=None,
) -> ReducedNetwork:
    """Fix the kept/removed partition and the frozen species values.

    ``x_ref`` defaults to the all-ones state.  Raises :class:`EmptyKeptSet` if
    nothing would be kept and :class:`SingularL22` if the removed block is
    numerically singular at ``x_ref``.
    """
    removed_set = {int(i) for i in removed}
    if any(not 0 <= i < view.c for i in removed_set):
        raise ValueError(f"complex index out of range in {sorted(removed_set)}")
    kept = tuple(i for i in range(view.c) if i not in removed_set)
    if not kept:
        raise EmptyKeptSet("reduction would remove every complex")
    removed_t = tuple(sorted(removed_set))
    Z_hat = view.Z[:, list(kept)]
    constant = frozenset(int(i) for i in np.flatnonzero(~Z_hat.any(axis=1)))
    x_ref = np.ones(view.m) if x_ref is None else np.array(x_ref, dtype=float)
    if x_ref.shape != (view.m,) or np.any(x_ref < 0):
        raise ValueError("reference state must be a nonnegative vector of length m")
    frozen = {i: float(x_ref[i]) for i in sorted(constant)}
    reduced = ReducedNetwork(
        parent=network,
        view=view,
        kept=kept,
        removed=removed_t,
        Z_hat=Z_hat,
        constant_species=constant,
        frozen_values=frozen,
        reference_state=x_ref,
    )
    cond = schur(reduced, x_ref).condition_estimate
    object.__setattr__(reduced, "reference_condition", cond)
    return reduced


def _raise_singular(cond: float, where: str) -> None:
    raise SingularL22(
        f"L22 singular {where} (condition estimate {cond:.3g}); a removed complex "
        "has no outflow path to a kept complex",
        cond,
    )


def schur(reduced: ReducedNetwork, x) -> SchurEval:
    x = reduced.pin(x)
    view = reduced.view
    L = laplacian(reduced.parent, view, x).L
    vb = boundary_vector(reduced.parent, view, x)
    nk = reduced.c_hat
    L_hat = np.empty((nk, nk))
    pvb = np.empty(nk)
    cond = _backend.kernels.schur(L, reduced.kept_array, reduced.removed_array, vb, L_hat, pvb)
    if not cond <= SINGULAR_CONDITION:
        _raise_singular(cond, "at this state")
    return SchurEval(L_hat=L_hat, P_vb=pvb, condition_estimate=float(cond), x=x)


def reduced_rhs(reduced: ReducedNetwork, x, t: float = 0.0) -> np.ndarray:
    """``Z_hat (P v_b - L_hat m_kept)`` with constant species pinned."""
    f = flat_model(reduced.view)
    out = np.empty(reduced.parent.m)
    cond = _backend.kernels.reduced_rhs(
        *f.args, reduced.kept_array, reduced.removed_array, reduced.pin(x), out
    )
    if not cond <= SINGULAR_CONDITION:
        _raise_singular(cond, f"at t={t:g}")
    check_finite(out)
    return out


def projection_matrix(reduced: ReducedNetwork, x) -> np.ndarray:
    """``P = [I, -L12 L22^-1]`` in original complex order (c_hat x c)."""
    x = reduced.pin(x)
    L = laplacian(reduced.parent, reduced.view, x).L
    kept, rem = list(reduced.kept), list(reduced.removed)
    P = np.zeros((len(kept), reduced.view.c))
    P[np.arange(len(kept)), kept] = 1.0
    if rem:
        L12 = L[np.ix_(kept, rem)]
        L22 = L[np.ix_(rem, rem)]
        P[:, rem] = -np.linalg.solve(L22.T, L12.T).T
    return P


def reduced_rhs_projected(reduced: ReducedNetwork, x) -> np.ndarray:
    """Second form of the reduced model: ``Z_hat P (v_b - L m)`` using the full monomials."""
    x = reduced.pin(x)
    net, view = reduced.parent, reduced.view
    L = laplacian(net, view, x).L
    y = boundary_vector(net, view, x) - L @ monomial_vector(view, x)
    return reduced.Z_hat @ (projection_matrix(reduced, x) @ y)


def reduce_laplacian(L: np.ndarray, removed, vb=None) -> tuple[np.ndarray, np.ndarray, float]:
    """Schur complement of a bare Laplacian; returns ``(L_hat, kept, condition)``."""
    L = np.ascontiguousarray(L, dtype=float)
    n = L.shape[0]
    rem = np.asarray(sorted({int(i) for i in removed}), dtype=np.int64)
    kept = np.asarray([i for i in range(n) if i not in set(rem.tolist())], dtype=np.int64)
    vb = np.zeros(n) if vb is None else np.ascontiguousarray(vb, dtype=float)
    L_hat = np.empty((len(kept), len(kept)))
    cond = _backend.kernels.schur(L, kept, rem, vb, L_hat, np.empty(len(kept)))
    if not cond <= SINGULAR_CONDITION:
        _raise_singular(cond, "in bare reduction")
    return L_hat, kept, float(cond)


@dataclass(frozen=True)
class AuxiliaryReport:
    w1: np.ndarray
    w2: np.ndarray
    ydot1: np.ndarray
    ydot2_residual: float
    rhs_residual: float
    scale: float

    @property
    def max_residual(self) -> float:
        return max(self.ydot2_residual, self.rhs_residual)


def auxiliary_consistency(network: Network, view: StoichiometryView, removed, x) -> AuxiliaryReport:
    """Re-derive the reduced model through the constrained auxiliary system.

    Solves ``v_b2 - L21 w1 - L22 w2 = 0`` for ``w2`` with ``w1`` the kept
    monomials, then checks the constraint residual and that ``Z_hat ydot1``
    reproduces :func:`reduced_rhs`.
    """
    reduced = plan_reduction(network, view, removed, x_ref=x)
    x = reduced.pin(x)
    L = laplacian(network, view, x).L
    vb = boundary_vector(network, view, x)
    kept, rem = list(reduced.kept), list(reduced.removed)
    w1 = monomial_vector(view, x)[kept]
    L11, L12 = L[np.ix_(kept, kept)], L[np.ix_(kept, rem)]
    L21, L22 = L[np.ix_(rem, kept)], L[np.ix_(rem, rem)]
    if rem:
        w2 = np.linalg.solve(L22, vb[rem] - L21 @ w1)
    else:
        w2 = np.zeros(0)
    ydot2 = vb[rem] - L21 @ w1 - L22 @ w2
    ydot1 = vb[kept] - L11 @ w1 - L12 @ w2
    rhs = reduced_rhs(reduced, x)
    scale = max(
        1.0,
        float(np.abs(L).max(initial=0.0)) * max(float(np.abs(w1).max(initial=0.0)), float(np.abs(w2).max(initial=0.0))),
        float(np.abs(vb).max(initial=0.0)),
    )
    return AuxiliaryReport(
        w1=w1,
        w2=w2,
        ydot1=ydot1,
        ydot2_residual=float(np.abs(ydot2).max(initial=0.0)),
        rhs_residual=float(np.abs(reduced.Z_hat @ ydot1 - rhs).max(initial=0.0)),
        scale=scale,
    )


def reduced_edges(reduced: ReducedNetwork, x=None) -> list[tuple[int, int, float]]:
    """Directed edges ``(tail, head, weight)`` of the reduced complex graph.

    An edge exists when the full graph has a path from tail to head whose
    interior vertices are all removed; weights are ``-L_hat[head, tail]``
    evaluated at ``x`` (default: the reference state).
    """
    view = reduced.view
    removed = set(reduced.removed)
    out_adj: dict[int, set[int]] = {i: set() for i in range(view.c)}
    for a, b in zip(view.tails.tolist(), view.heads.tolist()):
        out_adj[a].add(b)
    pos = {k: i for i, k in enumerate(reduced.kept)}
    L_hat = schur(reduced, reduced.reference_state if x is None else x).L_hat
    edges = []
    for a in reduced.kept:
        seen = {a}
        queue = deque([a])
        hits = set()
        while queue:
            u = queue.popleft()
            for v in out_adj[u]:
                if v in seen:
                    continue
                seen.add(v)
                if v in removed:
                    queue.append(v)
                else:
                    hits.add(v)
        for b in sorted(hits):
            edges.append((a, b, float(-L_hat[pos[b], pos[a]])))
    return edges


def describe_reduced_reactions(reduced: ReducedNetwork) -> list[str]:
    """Human-readable reduced reactions, pairing opposite edges as ``A<->B``."""
    net = reduced.parent
    edges = {(a, b) for a, b, _ in reduced_edges(reduced)}
    lines = []
    for a, b in sorted(edges):
        if (b, a) in edges:
            if a < b:
                lines.append(f"{net.complex_label(a)}<->{net.complex_label(b)}")
        else:
            lines.append(f"{net.complex_label(a)}->{net.complex_label(b)}")
    return lines


def plan_to_dict(reduced: ReducedNetwork) -> dict:
    net = reduced.parent
    names = net.species_names
    return {
        "kept": [net.complex_label(i) for i in reduced.kept],
        "removed": [net.complex_label(i) for i in reduced.removed],
        "constant_species": [names[i] for i in sorted(reduced.constant_species)],
        "frozen": {names[i]: v for i, v in reduced.frozen_values.items()},
        "reference_state": {n: float(v) for n, v in zip(names, reduced.reference_state)},
        "condition_estimate": reduced.reference_condition,
    }


def plan_to_json(reduced: ReducedNetwork) -> str:
    return json.dumps(plan_to_dict(reduced), indent=2)


def plan_from_dict(network: Network, view: StoichiometryView, data: dict) -> ReducedNetwork:
    from .dsl import parse_complex_label

    removed = [parse_complex_label(network, label) for label in data["removed"]]
    ref = data.get("reference_state")
    x_ref = None if ref is None else np.array([float(ref[n]) for n in network.species_names])
    reduced = plan_reduction(network, view, removed, x_ref)
    for name, value in data.get("frozen", {}).items():
        idx = network.species_index(name)
        if idx not in reduced.constant_species:
            raise ValueError(f"plan freezes {name}, which stays dynamic")
        reduced.frozen_values[idx] = float(value)
    reduced._arrays.clear()
    return reduced


# -- closed form for the three-complex Michaelis-Menten chain -------------------------


@dataclass(frozen=True)
class ChainParameters:
    """Twelve parameters of ``X1+X2 <-> X3+X4 <-> X5+X6`` with two-group denominators.

    ``km1`` holds the Michaelis constants of X1..X4 in the first reaction,
    ``km2`` those of X3..X6 in the second.
    """

    k1f: float
    k1r: float
    k2f: float
    k2r: float
    km1: tuple[float, float, float, float]
    km2: tuple[float, float, float, float]

    @property
    def n_parameters(self) -> int:
        return 4 + len(self.km1) + len(self.km2)

    def p1(self, x) -> float:
        a, b, c, d = self.km1
        return (1 + x[0] / a + x[1] / b) * (1 + x[2] / c + x[3] / d)

    def p2(self, x) -> float:
        a, b, c, d = self.km2
        return (1 + x[2] / a + x[3] / b) * (1 + x[4] / c + x[5] / d)


@dataclass(frozen=True)
class ReducedMMLaw:
    """``(kf x1 x2 - kr x5 x6) / (1 + x1/K1 + x2/K2 + x5/K5 + x6/K6)``."""

    kf: float
    kr: float
    K1: float
    K2: float
    K5: float
    K6: float

    @property
    def parameters(self) -> dict[str, float]:
        return {"kf": self.kf, "kr": self.kr, "K1": self.K1, "K2": self.K2, "K5": self.K5, "K6": self.K6}

    def rate(self, x) -> float:
        num = self.kf * x[0] * x[1] - self.kr * x[4] * x[5]
        return num / (1 + x[0] / self.K1 + x[1] / self.K2 + x[4] / self.K5 + x[5] / self.K6)


def chain_reduced_law(params: ChainParameters, x3: float, x4: float) -> ReducedMMLaw:
    """Normalized reduced law after eliminating ``X3+X4`` with ``x3, x4`` frozen.

    Eliminating the middle vertex gives the net rate
    ``(k1f k2f x1 x2 - k1r k2r x5 x6) / (k2f p1 + k1r p2)``.  With x3, x4
    fixed, ``p1 = alpha1 (1 + x1/K11 + x2/K12)`` and
    ``p2 = alpha2 (1 + x5/K25 + x6/K26)``, so the denominator is affine and
    dividing by its constant term yields six parameters.
    """
    _, _, K13, K14 = params.km1
    K23, K24, _, _ = params.km2
    alpha1 = 1 + x3 / K13 + x4 / K14
    alpha2 = 1 + x3 / K23 + x4 / K24
    g1 = params.k2f * alpha1
    g2 = params.k1r * alpha2
    d0 = g1 + g2
    return ReducedMMLaw(
        kf=params.k1f * params.k2f / d0,
        kr=params.k1r * params.k2r / d0,
        K1=d0 * params.km1[0] / g1,
        K2=d0 * params.km1[1] / g1,
        K5=d0 * params.km2[2] / g2,
        K6=d0 * params.km2[3] / g2,
    )


def chain_reduce_closed_form(params: ChainParameters, x) -> float:
    """Net forward rate ``X1+X2 -> X5+X6`` of the reduced chain at ``x`` (x3, x4 frozen at ``x``)."""
    x = np.asarray(x, dtype=float)
    return chain_reduced_law(params, x[2], x[3]).rate(x)
