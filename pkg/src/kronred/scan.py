"""Search over complex subsets for the reduction that best tracks the full model."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import KronredError
from .network import Network, StoichiometryView
from .reduction import plan_reduction
from .sim import ComparisonSpec, SolverConfig, Trajectory, compare, simulate_full, simulate_reduced

EXHAUSTIVE_LIMIT = 4


@dataclass(frozen=True)
class ScanResult:
    removed: tuple[int, ...]
    score: float | None
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.score is not None


def _threads(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("KRONRED_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def evaluate_subset(
    network: Network,
    view: StoichiometryView,
    x0: np.ndarray,
    removed: tuple[int, ...],
    full: Trajectory,
    spec: ComparisonSpec,
    config: SolverConfig,
) -> ScanResult:
    try:
        reduced = plan_reduction(network, view, removed, x0)
        spec.validate(network.m, reduced)
        traj = simulate_reduced(reduced, x0, config)
        return ScanResult(removed, compare(full, traj, spec).aggregate)
    except (KronredError, ValueError) as exc:
        return ScanResult(removed, None, f"{type(exc).__name__}: {exc}")


def rank_results(results) -> list[ScanResult]:
    feasible = sorted((r for r in results if r.feasible), key=lambda r: (r.score, len(r.removed), r.removed))
    failed = sorted((r for r in results if not r.feasible), key=lambda r: (len(r.removed), r.removed))
    return feasible + failed


def scan_candidates(
    network: Network,
    view: StoichiometryView,
    x0,
    candidates,
    spec: ComparisonSpec,
    config: SolverConfig = SolverConfig(),
    max_size: int = EXHAUSTIVE_LIMIT,
    threads: int | None = None,
    full: Trajectory | None = None,
) -> list[ScanResult]:
    """Score candidate removal sets, best (lowest aggregate error) first.

    Subsets up to ``min(max_size, 4)`` complexes are enumerated exhaustively;
    larger sizes up to ``max_size`` grow the best subset of the previous size
    one complex at a time.  Infeasible subsets are listed last with a reason.
    ``x0`` is the starting state of every run and the reference state of
    every reduction.  ``threads`` (default ``KRONRED_THREADS`` or 1) caps
    concurrent subset evaluations.
    """
    candidates = sorted({int(c) for c in candidates})
    if not candidates:
        return []
    x0 = np.asarray(x0, dtype=float)
    if full is None:
        full = simulate_full(network, view, x0, config)
    n_threads = _threads(threads)

    def run(subsets: list[tuple[int, ...]]) -> list[ScanResult]:
        job = lambda s: evaluate_subset(network, view, x0, s, full, spec, config)  # noqa: E731
        if n_threads == 1 or len(subsets) == 1:
            return [job(s) for s in subsets]
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(job, subsets))

    exhaustive = min(max_size, EXHAUSTIVE_LIMIT, len(candidates))
    subsets = [s for size in range(1, exhaustive + 1) for s in combinations(candidates, size)]
    results = run(subsets)

    current = rank_results([r for r in results if len(r.removed) == exhaustive])
    for _ in range(exhaustive + 1, min(max_size, len(candidates)) + 1):
        if not current or not current[0].feasible:
            break
        base = current[0].removed
        grown = [tuple(sorted(base + (c,))) for c in candidates if c not in base]
        current = rank_results(run(grown))
        results.extend(current)
    return rank_results(results)
