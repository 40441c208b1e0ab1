"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Lines are printed as the tests run (visible with ``-s``) and repeated in the
pytest terminal summary.  Running this file directly also prints them.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from kronred import (
    ChainParameters,
    ComparisonSpec,
    SolverConfig,
    chain_reduce_closed_form,
    chain_reduced_law,
    conservation_basis,
    enumerate_complexes,
    full_rhs,
    laplacian,
    parse_network,
    plan_reduction,
    pulse_experiment,
    reduced_rhs,
    scan_candidates,
    schur,
)
from kronred.kinetics import boundary_vector, edge_rates, monomial_vector, stoichiometric_rhs
from kronred.network import left_null_basis
from kronred.reduction import projection_matrix, reduce_laplacian, reduced_rhs_projected
from kronred.sim import CONVERGED, find_steady_state
from kronred.surrogate import mm_chain, three_complex_chain

from conftest import FIG1, REACTION3
from netgen import random_case
from test_sim import convergence_slope

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, str] = {}

SUITE_SEEDS = range(250)  # at least 200 random (network, removal, state) triples
PROP_TOL = 1e-12
TRANSITIVITY_TOL = 1e-11
CLOSED_FORM_TOL = 1e-12
SCORE_LIMIT = 0.05
ORDER_LIMIT = 3.5
SURROGATE = dict(factor=100, k=10, km=5, influx=5, efflux=20)


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
    RESULTS[number] = line
    print(line)
    assert ok, line


# -- shared random suite for criteria 2-4 -----------------------------------------------


class SuiteStats:
    def __init__(self):
        self.cases = 0
        self.colsum = 0.0
        self.diag_min = np.inf
        self.off_max = -np.inf
        self.two_form = 0.0
        self.dual_path = 0.0
        self.elapsed = 0.0


_SUITE: SuiteStats | None = None


def _suite() -> SuiteStats:
    global _SUITE
    if _SUITE is not None:
        return _SUITE
    st = SuiteStats()
    start = time.perf_counter()
    for seed in SUITE_SEEDS:
        net, view, removed, x = random_case(seed)
        assert net.m <= 12 and net.c <= 10
        red = plan_reduction(net, view, removed, x)
        ev = schur(red, x)
        L_hat = ev.L_hat
        st.colsum = max(st.colsum, float(np.abs(L_hat.sum(axis=0)).max() / np.abs(L_hat).max()))
        st.diag_min = min(st.diag_min, float((np.diag(L_hat) / np.abs(L_hat).max()).min()))
        off = L_hat - np.diag(np.diag(L_hat))
        st.off_max = max(st.off_max, float(off.max()))

        # both displayed forms of the reduced model, against the magnitude of their terms
        xp = red.pin(x)
        a = reduced_rhs(red, xp)
        b = reduced_rhs_projected(red, xp)
        L = laplacian(net, view, xp).L
        P = projection_matrix(red, xp)
        m_full = monomial_vector(view, xp)
        scale_a = np.abs(red.Z_hat) @ (np.abs(ev.P_vb) + np.abs(L_hat) @ m_full[list(red.kept)])
        scale_b = np.abs(red.Z_hat) @ (np.abs(P) @ (np.abs(boundary_vector(net, view, xp)) + np.abs(L) @ m_full))
        st.two_form = max(st.two_form, float(np.abs(a - b).max() / max(scale_a.max(), scale_b.max())))

        f1 = full_rhs(net, view, x)
        f2 = stoichiometric_rhs(net, view, x)
        scale = np.abs(view.S) @ edge_rates(net, view, x) + np.abs(view.Z) @ np.abs(boundary_vector(net, view, x))
        st.dual_path = max(st.dual_path, float(np.abs(f1 - f2).max() / scale.max()))
        st.cases += 1
    st.elapsed = time.perf_counter() - start
    _SUITE = st
    return st


# -- criteria --------------------------------------------------------------------------


def test_criterion_01_stoichiometry_exact():
    start = time.perf_counter()
    view = enumerate_complexes(parse_network(FIG1))
    s_ok = view.S.tolist() == [[-1, 1, 2, -2, 0], [-2, 2, 1, -1, 0], [1, -1, -1, 0, -1], [0, 0, 0, 1, 1]]
    z_ok = view.Z.tolist() == [[1, 0, 2, 0], [2, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]
    r3 = enumerate_complexes(parse_network(REACTION3))
    r3_ok = (
        r3.B.tolist() == [[-1], [1]]
        and r3.Z.tolist() == [[1, 0], [3, 0], [0, 1], [0, 3]]
        and r3.S.tolist() == [[-1], [-3], [1], [3]]
    )
    elapsed = time.perf_counter() - start
    report(
        1,
        "stoichiometry exactness",
        s_ok and z_ok and r3_ok and elapsed < 1.0,
        f"S={s_ok} Z={z_ok} reaction3={r3_ok}, {elapsed:.3f}s < 1s",
    )


def test_criterion_02_schur_properties():
    st = _suite()
    ok = st.cases >= 200 and st.colsum <= PROP_TOL and st.diag_min > 0 and st.off_max <= 0 and st.elapsed < 30
    report(
        2,
        "Schur complement property suite",
        ok,
        f"{st.cases} cases, max |1^T L_hat|/max|L_hat| = {st.colsum:.2e} <= {PROP_TOL:g}, "
        f"min diag/max|L_hat| = {st.diag_min:.2e} > 0, max off-diag = {st.off_max:.2e} <= 0, {st.elapsed:.1f}s < 30s",
    )


def test_criterion_03_two_forms():
    st = _suite()
    report(
        3,
        "reduced model two-form equivalence",
        st.two_form <= PROP_TOL,
        f"{st.cases} cases, max relative gap {st.two_form:.2e} <= {PROP_TOL:g}",
    )


def test_criterion_04_dual_path():
    st = _suite()
    report(
        4,
        "dual-path full RHS",
        st.dual_path <= PROP_TOL,
        f"{st.cases} cases, max relative gap {st.dual_path:.2e} <= {PROP_TOL:g}",
    )


def test_criterion_05_closed_form():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    counts = set()
    for _ in range(100):
        u = lambda: float(np.exp(rng.uniform(-1.5, 1.5)))  # noqa: E731
        params = ChainParameters(u(), u(), u(), u(), tuple(u() for _ in range(4)), tuple(u() for _ in range(4)))
        net = three_complex_chain(params)
        view = enumerate_complexes(net)
        x = rng.uniform(0.1, 5.0, 6)
        red = plan_reduction(net, view, [1], x)
        L_hat = schur(red, x).L_hat
        forward, reverse = -L_hat[1, 0] * x[0] * x[1], -L_hat[0, 1] * x[4] * x[5]
        closed = chain_reduce_closed_form(params, x)
        worst = max(worst, abs(closed - (forward - reverse)) / (forward + reverse))
        counts.add((params.n_parameters, len(chain_reduced_law(params, x[2], x[3]).parameters)))
    elapsed = time.perf_counter() - start
    report(
        5,
        "Example-1 closed form",
        worst <= CLOSED_FORM_TOL and counts == {(12, 6)} and elapsed < 5,
        f"100 states, max relative gap {worst:.2e} <= {CLOSED_FORM_TOL:g}, parameters (full, reduced) {sorted(counts)}, {elapsed:.2f}s < 5s",
    )


def test_criterion_06_transitivity():
    rng = np.random.default_rng(6)
    worst, cases, seed = 0.0, 0, 0
    while cases < 100:
        net, view, _, x = random_case(10_000 + seed, min_complexes=4)
        seed += 1
        order = rng.permutation(net.c)
        k = int(rng.integers(2, net.c - 1))
        v1, v2 = sorted(order[: k // 2].tolist()), sorted(order[k // 2 : k].tolist())
        L = laplacian(net, view, x).L
        one, _, _ = reduce_laplacian(L, v1 + v2)
        stage, kept1, _ = reduce_laplacian(L, v1)
        pos = {int(c): i for i, c in enumerate(kept1)}
        two, _, _ = reduce_laplacian(stage, [pos[i] for i in v2])
        worst = max(worst, float(np.abs(one - two).max() / np.abs(one).max()))
        cases += 1
    report(6, "Schur transitivity", worst <= TRANSITIVITY_TOL, f"{cases} cases, max relative gap {worst:.2e} <= {TRANSITIVITY_TOL:g}")


def test_criterion_07_timescale_separation():
    start = time.perf_counter()
    net = mm_chain(3, fast=(1,), **SURROGATE)
    view = enumerate_complexes(net)
    atol = 1e-9
    x_eq = find_steady_state(net, view, np.array([1.0, 1.5, 1.0, 1.5, 1.0, 1.5]), SolverConfig(t_end=100, atol=atol))
    red = plan_reduction(net, view, [1], x_eq)
    res = pulse_experiment(
        net, view, red, x_eq, {"X1": 2 * x_eq[0]}, SolverConfig(t_end=5, atol=atol), ComparisonSpec((0, 1, 4, 5), atol=atol)
    )
    gap = float(np.abs(res.full.final - res.reduced.final).max())
    converged = res.full.status == CONVERGED and res.reduced.status == CONVERGED
    elapsed = time.perf_counter() - start
    ok = res.metrics.aggregate <= SCORE_LIMIT and converged and gap <= 10 * atol and elapsed < 10
    report(
        7,
        "timescale-separation quality",
        ok,
        f"score {res.metrics.aggregate:.4f} <= {SCORE_LIMIT}, both converged={converged}, "
        f"steady-state gap {gap:.2e} <= {10 * atol:g}, {elapsed:.2f}s < 10s",
    )


def test_criterion_08_integrator_order():
    slope = convergence_slope()
    report(8, "integrator convergence order", slope >= ORDER_LIMIT, f"log-log slope {slope:.2f} >= {ORDER_LIMIT}")


def _closed_cases():
    ex1 = three_complex_chain(ChainParameters(2.0, 0.5, 1.5, 0.8, (1.0, 2.0, 0.5, 1.0), (0.7, 1.2, 2.0, 0.9)))
    yield ex1, [1], {"X1": None}
    chain = mm_chain(4, fast=(1,), factor=100, k=2, km=3)
    yield chain, [1], {"X1": None}
    yield chain, [1, 2], {"X2": None}


def test_criterion_09_conservation_drift():
    atol = 1e-9
    worst = 0.0
    runs = 0
    for net, removed, pulse in _closed_cases():
        view = enumerate_complexes(net)
        x_eq = find_steady_state(net, view, np.linspace(0.5, 1.5, net.m), SolverConfig(t_end=200))
        red = plan_reduction(net, view, removed, x_eq)
        overrides = {name: 2 * x_eq[net.species_index(name)] for name in pulse}
        observed = tuple(red.dynamic_species)
        res = pulse_experiment(net, view, red, x_eq, overrides, SolverConfig(t_end=10, atol=atol), ComparisonSpec(observed))
        x0 = res.initial_state
        for w in conservation_basis(view):
            worst = max(worst, float(np.abs(res.full.states @ w - w @ x0).max()))
            if not any(w[i] for i in red.constant_species):
                worst = max(worst, float(np.abs(res.reduced.states @ w - w @ x0).max()))
        # totals conserved only by the reduced stoichiometry
        for w in left_null_basis(red.Z_hat):
            if not any(w[i] for i in red.constant_species):
                worst = max(worst, float(np.abs(res.reduced.states @ w - w @ x0).max()))
        runs += 1
    report(9, "conservation drift", worst <= 100 * atol, f"{runs} pulse runs, max drift {worst:.2e} <= {100 * atol:g}")


def _scan_once():
    net = mm_chain(5, fast=(2,), **SURROGATE)
    view = enumerate_complexes(net)
    x_eq = find_steady_state(net, view, np.array([1.0 + 0.5 * (i % 2) for i in range(net.m)]), SolverConfig(t_end=100))
    x0 = x_eq.copy()
    x0[0] *= 2
    ranking = scan_candidates(net, view, x0, [1, 2, 3], ComparisonSpec((0, 1, 8, 9)), SolverConfig(t_end=10))
    return [(r.removed, r.score) for r in ranking]


def test_criterion_10_scan():
    first = _scan_once()
    second = _scan_once()
    top, score = first[0]
    singles = sorted((s, r) for r, s in first if len(r) == 1)
    ok = top == (2,) and first == second
    report(
        10,
        "scan ranks the fast complex first",
        ok,
        f"top subset {top} (X5+X6) score {score:.2e}; singleton scores "
        + ", ".join(f"{r}:{s:.2e}" for s, r in singles)
        + f"; repeat identical={first == second}",
    )


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
