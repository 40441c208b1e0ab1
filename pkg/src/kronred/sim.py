"""ODE integration, steady-state detection and trajectory comparison."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import GridNotCovered, MaxStepsExceeded, NonPositivity, NotAtEquilibrium, StepSizeTooSmall
from .kinetics import full_rhs
from .network import Network, StoichiometryView
from .reduction import ReducedNetwork, reduced_rhs

CONVERGED = "converged"
HORIZON = "reached-horizon"
FAILED = "failed"

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 6))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# |h * lambda| cap for the dominant mode; the method's real stability
# boundary is near 3.3, at 2.6 the amplification factor is about 0.28
_STABLE_HLAMBDA = 2.6
_STEADY_STEPS = 3


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-6
    atol: float = 1e-9
    h_init: float | None = None
    h_min: float = 1e-14
    t_end: float = 10.0
    max_steps: int = 200_000
    detect_steady_state: bool = True

    def __post_init__(self) -> None:
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.h_init is not None and not self.h_min < self.h_init:
            raise ValueError("h_min must be smaller than h_init")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    status: str
    reason: str = ""
    derivatives: np.ndarray | None = None
    stats: dict = field(default_factory=dict)
    species: list[str] | None = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def interpolant(self):
        """Cubic interpolant over the solver grid (Hermite when slopes are known)."""
        if len(self.times) < 2:
            t = np.array([self.times[0], self.times[0] + 1.0])
            return CubicSpline(t, np.vstack([self.states[0]] * 2), axis=0)
        if self.derivatives is not None:
            return CubicHermiteSpline(self.times, self.states, self.derivatives, axis=0)
        return CubicSpline(self.times, self.states, axis=0)

    def to_csv(self, path, species: list[str] | None = None) -> None:
        names = species or self.species or [f"x{i}" for i in range(self.states.shape[1])]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *names])
            for t, row in zip(self.times, self.states):
                w.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in row)])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        data = np.array([[float(v) for v in row] for row in body])
        return cls(times=data[:, 0], states=data[:, 1:], status=HORIZON, species=header[1:])


def _initial_step(rhs, t0, x0, f0, rtol, atol, t_end) -> float:
    # Hairer, Norsett & Wanner, starting step heuristic
    scale = atol + rtol * np.abs(x0)
    d0 = np.sqrt(np.mean((x0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    x1 = x0 + h0 * f0
    f1 = rhs(t0 + h0, np.maximum(x1, 0.0))
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_end - t0)


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], x0, config: SolverConfig = SolverConfig(), t0: float = 0.0) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) with PI step control.

    ``rhs(t, x)`` returns the derivative.  Steps that produce a negative
    component are rejected and retried at half the step size.  When the
    derivative's max-norm stays below ``10 * atol`` for three accepted steps
    the run stops, and the steady state is held until ``t_end``.

    Step growth is also capped by an estimate of the dominant eigenvalue so
    that decaying modes are damped rather than parked on the edge of the
    stability region, where error control alone would let them ring at the
    tolerance level forever.
    """
    x = np.array(x0, dtype=float)
    if x.ndim != 1 or np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("initial state must be a finite nonnegative vector")
    rtol, atol, t_end = config.rtol, config.atol, config.t_end
    t = float(t0)
    f = np.asarray(rhs(t, x), dtype=float)
    nfev = 1
    times, states, derivs = [t], [x.copy()], [f.copy()]
    stats = {"accepted": 0, "rejected": 0, "positivity_rejections": 0, "nfev": 0}

    def finish(status: str, reason: str = "") -> Trajectory:
        stats["nfev"] = nfev
        return Trajectory(
            times=np.array(times),
            states=np.array(states),
            status=status,
            reason=reason,
            derivatives=np.array(derivs),
            stats=dict(stats),
        )

    steady = 0
    if config.detect_steady_state and np.max(np.abs(f), initial=0.0) <= 10 * atol:
        steady = 1
    if config.h_init is not None:
        h = config.h_init
    else:
        h = _initial_step(rhs, t, x, f, rtol, atol, t_end)
        nfev += 1
    h = max(h, config.h_min * 2)
    err_prev = 1e-4
    k = np.empty((7, x.size))
    steps = 0
    while t < t_end:
        if steps >= config.max_steps:
            traj = finish(FAILED, "max steps exceeded")
            raise MaxStepsExceeded(f"step budget {config.max_steps} exhausted at t={t:g}", traj)
        steps += 1
        last = t + h >= t_end
        if last:
            h = t_end - t
        k[0] = f
        negative = False
        for s in range(1, 7):
            xs = x + h * (_A[s, :s] @ k[:s])
            if np.any(xs < 0):
                negative = True
                break
            if s == 5:
                x_stage6 = xs
            k[s] = rhs(t + _C[s] * h, xs)
            nfev += 1
        # the seventh stage point is the propagated solution (FSAL)
        x_new = xs
        if negative:
            stats["positivity_rejections"] += 1
            stats["rejected"] += 1
            h *= 0.5
            if h < config.h_min:
                traj = finish(FAILED, "negative concentrations")
                raise NonPositivity(f"negative state persisted below h_min at t={t:g}", traj)
            continue
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
        err = math.sqrt(float(np.mean((h * (_E @ k) / scale) ** 2))) if x.size else 0.0
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t = t_end if last else t + h
            x = x_new
            f = k[6].copy()
            times.append(t)
            states.append(x.copy())
            derivs.append(f.copy())
            stats["accepted"] += 1
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-_ALPHA) * err_prev ** _BETA
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
            h *= factor
            # stages 6 and 7 sit at the same time, so their slope difference
            # over their state difference estimates the dominant eigenvalue
            dy = float(np.linalg.norm(x_new - x_stage6))
            if dy > 1e3 * np.finfo(float).eps * max(1.0, float(np.abs(x).max())):
                rho = float(np.linalg.norm(k[6] - k[5])) / dy
                if rho > 0:
                    h = min(h, _STABLE_HLAMBDA / rho)
            if config.detect_steady_state:
                steady = steady + 1 if np.max(np.abs(f), initial=0.0) <= 10 * atol else 0
                if steady >= _STEADY_STEPS:
                    if t < t_end:
                        times.append(t_end)
                        states.append(x.copy())
                        derivs.append(np.zeros_like(x))
                    return finish(CONVERGED)
        else:
            stats["rejected"] += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** (-_ALPHA))
        if h < config.h_min:
            traj = finish(FAILED, "step size underflow")
            raise StepSizeTooSmall(f"step size {h:.3g} below h_min at t={t:g}", traj)
    return finish(HORIZON)


def full_model_rhs(network: Network, view: StoichiometryView):
    return lambda t, x: full_rhs(network, view, x, t)


def reduced_model_rhs(reduced: ReducedNetwork):
    return lambda t, x: reduced_rhs(reduced, x, t)


def simulate_full(network: Network, view: StoichiometryView, x0, config: SolverConfig = SolverConfig()) -> Trajectory:
    traj = integrate(full_model_rhs(network, view), x0, config)
    traj.species = network.species_names
    return traj


def simulate_reduced(reduced: ReducedNetwork, x0, config: SolverConfig = SolverConfig()) -> Trajectory:
    traj = integrate(reduced_model_rhs(reduced), reduced.pin(x0), config)
    traj.species = reduced.parent.species_names
    return traj


@dataclass(frozen=True)
class ComparisonSpec:
    """Which species to compare (a row selector ``y = C x``) and on what grid."""

    observed: tuple[int, ...]
    grid: np.ndarray | None = None
    atol: float = 1e-9
    n_grid: int = 401

    def __post_init__(self) -> None:
        if not self.observed:
            raise ValueError("observed species list is empty")

    def validate(self, m: int, reduced: ReducedNetwork | None = None) -> None:
        if any(not 0 <= i < m for i in self.observed):
            raise ValueError("observed species index out of range")
        if reduced is not None:
            frozen = sorted(set(self.observed) & reduced.constant_species)
            if frozen:
                names = [reduced.parent.species[i].name for i in frozen]
                raise ValueError(f"observed species are frozen in the reduced model: {names}")


@dataclass
class SpeciesMetrics:
    relative_l2: float
    max_abs: float
    steady_state_deviation: float


@dataclass
class Metrics:
    species: dict[int, SpeciesMetrics]
    aggregate: float
    names: dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "aggregate_score": self.aggregate,
            "species": {
                self.names.get(i, str(i)): {
                    "relative_l2": s.relative_l2,
                    "max_abs": s.max_abs,
                    "steady_state_deviation": s.steady_state_deviation,
                }
                for i, s in self.species.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def comparison_grid(full: Trajectory, reduced: Trajectory, spec: ComparisonSpec) -> np.ndarray:
    lo = max(full.times[0], reduced.times[0])
    hi = min(full.times[-1], reduced.times[-1])
    if spec.grid is None:
        return np.linspace(lo, hi, spec.n_grid)
    grid = np.asarray(spec.grid, dtype=float)
    for name, tr in (("full", full), ("reduced", reduced)):
        if grid.min() < tr.times[0] or grid.max() > tr.times[-1]:
            raise GridNotCovered(
                f"grid [{grid.min():g}, {grid.max():g}] outside {name} trajectory "
                f"[{tr.times[0]:g}, {tr.times[-1]:g}]"
            )
    return grid


def resample(traj: Trajectory, grid: np.ndarray) -> np.ndarray:
    return np.asarray(traj.interpolant()(grid))


def compare(full: Trajectory, reduced: Trajectory, spec: ComparisonSpec) -> Metrics:
    """Per-species relative L2 error, max error and final-state deviation.

    The aggregate score is the largest relative L2 error.
    """
    grid = comparison_grid(full, reduced, spec)
    a = resample(full, grid)
    b = resample(reduced, grid)
    per = {}
    for i in spec.observed:
        diff = a[:, i] - b[:, i]
        denom = max(float(np.linalg.norm(a[:, i])), spec.atol)
        per[i] = SpeciesMetrics(
            relative_l2=float(np.linalg.norm(diff)) / denom,
            max_abs=float(np.abs(diff).max()),
            steady_state_deviation=float(abs(full.final[i] - reduced.final[i])),
        )
    names = {i: full.species[i] for i in spec.observed} if full.species else {}
    return Metrics(species=per, aggregate=max(s.relative_l2 for s in per.values()), names=names)


@dataclass
class PulseResult:
    full: Trajectory
    reduced: Trajectory
    metrics: Metrics
    initial_state: np.ndarray


EQUILIBRIUM_TOL = 1e-6


def apply_overrides(network: Network, state, overrides: dict) -> np.ndarray:
    x = np.array(state, dtype=float)
    for key, value in overrides.items():
        idx = network.species_index(key) if isinstance(key, str) else int(key)
        x[idx] = float(value)
    return x


def pulse_experiment(
    network: Network,
    view: StoichiometryView,
    reduced: ReducedNetwork,
    pre_state,
    overrides: dict,
    config: SolverConfig,
    spec: ComparisonSpec,
) -> PulseResult:
    """Perturb an equilibrium at t=0 and integrate full and reduced models.

    ``overrides`` maps species (name or index) to the post-pulse value.
    """
    pre = np.asarray(pre_state, dtype=float)
    residual = float(np.max(np.abs(full_rhs(network, view, pre)), initial=0.0))
    if residual > EQUILIBRIUM_TOL:
        raise NotAtEquilibrium(f"pre-pulse state has |rhs|_inf = {residual:.3g} > {EQUILIBRIUM_TOL:g}")
    spec.validate(network.m, reduced)
    x0 = apply_overrides(network, pre, overrides)
    full = simulate_full(network, view, x0, config)
    red = simulate_reduced(reduced, x0, config)
    return PulseResult(full=full, reduced=red, metrics=compare(full, red, spec), initial_state=x0)


def full_motion_matrix(network: Network, view: StoichiometryView) -> np.ndarray:
    """Columns spanning every direction the full model can move in."""
    fed = [b.complex for b in network.boundary]
    return np.hstack([view.S, view.Z[:, fed]]).astype(float)


def reduced_motion_matrix(reduced: ReducedNetwork) -> np.ndarray:
    """Columns spanning the directions the reduced model can move in.

    Reduced edges contribute ``Z_hat`` differences; kept complexes that can
    receive boundary flux (directly or through removed complexes) contribute
    their own ``Z`` column.
    """
    from .reduction import reduced_edges

    net, view = reduced.parent, reduced.view
    cols = [view.Z[:, b] - view.Z[:, a] for a, b, _ in reduced_edges(reduced)]
    fed = {b.complex for b in net.boundary}
    removed = set(reduced.removed)
    reach = set(fed)
    frontier = [k for k in fed if k in removed]
    while frontier:
        u = frontier.pop()
        for a, b in zip(view.tails.tolist(), view.heads.tolist()):
            if a == u and b not in reach:
                reach.add(b)
                if b in removed:
                    frontier.append(b)
    cols += [view.Z[:, k] for k in reduced.kept if k in reach]
    if not cols:
        return np.zeros((net.m, 0))
    return np.column_stack(cols).astype(float)


def polish_steady_state(rhs, x, motion: np.ndarray, tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    """Newton iteration for ``rhs(x) = 0`` restricted to ``x + range(motion)``.

    Keeps every conserved total of the starting point.
    """
    x = np.array(x, dtype=float)
    if motion.size == 0:
        return x
    u, sv, _ = np.linalg.svd(motion, full_matrices=False)
    Q = u[:, sv > 1e-10 * sv.max()]
    for _ in range(max_iter):
        f = np.asarray(rhs(0.0, x))
        if np.max(np.abs(f), initial=0.0) <= tol:
            break
        delta = 1e-7 * max(1.0, float(np.abs(x).max()))
        J = np.column_stack(
            [(np.asarray(rhs(0.0, x + delta * q)) - np.asarray(rhs(0.0, x - delta * q))) / (2 * delta) for q in Q.T]
        )
        dz = np.linalg.lstsq(Q.T @ J, -(Q.T @ f), rcond=None)[0]
        x_new = x + Q @ dz
        if np.any(x_new < 0):
            break
        x = x_new
    return x


def find_steady_state(network: Network, view: StoichiometryView, x0, config: SolverConfig = SolverConfig()) -> np.ndarray:
    """Integrate the full model, then polish the end point with Newton."""
    traj = simulate_full(network, view, x0, config)
    return polish_steady_state(full_model_rhs(network, view), traj.final, full_motion_matrix(network, view))


def reduced_steady_state(reduced: ReducedNetwork, x) -> np.ndarray:
    return polish_steady_state(reduced_model_rhs(reduced), reduced.pin(x), reduced_motion_matrix(reduced))
