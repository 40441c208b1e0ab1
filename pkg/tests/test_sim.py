import numpy as np
import pytest

from kronred import (
    ComparisonSpec,
    GridNotCovered,
    MaxStepsExceeded,
    NonPositivity,
    NotAtEquilibrium,
    SolverConfig,
    Trajectory,
    compare,
    conservation_basis,
    enumerate_complexes,
    integrate,
    parse_network,
    plan_reduction,
    pulse_experiment,
)
from kronred.errors import StepSizeTooSmall
from kronred.sim import (
    CONVERGED,
    HORIZON,
    find_steady_state,
    full_model_rhs,
    polish_steady_state,
    full_motion_matrix,
    reduced_steady_state,
    simulate_full,
    simulate_reduced,
)


def decay(t, x):
    return np.array([-x[0], x[0]])


def test_zero_rhs_converges():
    traj = integrate(lambda t, x: np.zeros_like(x), [1.0, 2.0], SolverConfig(t_end=5))
    assert traj.status == CONVERGED
    assert (traj.states == [1.0, 2.0]).all()
    assert traj.times[-1] == 5


def test_linear_decay_matches_exponential():
    traj = integrate(decay, [1.0, 0.0], SolverConfig(t_end=1.0, detect_steady_state=False))
    assert traj.status == HORIZON
    assert abs(traj.final[0] - np.exp(-1)) <= 1e-5
    assert abs(traj.final[0] - 0.36788) <= 1e-5
    assert traj.stats["accepted"] == len(traj.times) - 1


def test_reversible_pair_reaches_half_half():
    net = parse_network("reaction r: A <-> B ; massaction kf=1 kr=1")
    cfg = SolverConfig(t_end=60)
    traj = simulate_full(net, enumerate_complexes(net), [1.0, 0.0], cfg)
    assert traj.status == CONVERGED
    assert np.abs(traj.final - 0.5).max() <= 10 * cfg.atol


def test_states_stay_nonnegative():
    # fast consumption drives A toward zero; a naive step would overshoot
    net = parse_network("reaction r: A + B -> C ; massaction kf=50")
    traj = simulate_full(net, enumerate_complexes(net), [1.0, 1.2, 0.0], SolverConfig(t_end=20, rtol=1e-3, atol=1e-6))
    assert (traj.states >= 0).all()


def test_non_positivity_error():
    # constant drain that no step size can satisfy once A is exhausted
    with pytest.raises(NonPositivity) as err:
        integrate(lambda t, x: np.array([-1.0]), [1e-3], SolverConfig(t_end=1.0, h_min=1e-10))
    assert err.value.trajectory is not None
    assert err.value.trajectory.status == "failed"


def test_max_steps():
    with pytest.raises(MaxStepsExceeded):
        integrate(decay, [1.0, 0.0], SolverConfig(t_end=100, max_steps=5, detect_steady_state=False))


def test_step_size_underflow():
    def blowup(t, x):
        return np.array([x[0] ** 2])

    with pytest.raises(StepSizeTooSmall):
        integrate(blowup, [1.0], SolverConfig(t_end=2.0, h_min=1e-8))


def test_rejects_bad_config():
    with pytest.raises(ValueError):
        SolverConfig(rtol=0)
    with pytest.raises(ValueError):
        SolverConfig(h_init=1e-15, h_min=1e-14)
    with pytest.raises(ValueError):
        integrate(decay, [-1.0, 0.0])


def endpoint_errors(tols):
    errors, evals = [], []
    for tol in tols:
        traj = integrate(decay, [1.0, 0.0], SolverConfig(rtol=tol, atol=tol * 1e-3, t_end=1.0, detect_steady_state=False))
        errors.append(abs(traj.final[0] - np.exp(-1.0)))
        evals.append(traj.stats["accepted"])
    return np.array(errors), np.array(evals)


def convergence_slope() -> float:
    """Slope of log(error) against log(1/steps): the observed order."""
    errors, steps = endpoint_errors([1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10])
    return float(-np.polyfit(np.log(steps), np.log(errors), 1)[0])


def test_convergence_order():
    assert convergence_slope() >= 3.5


def test_trajectory_csv_round_trip(tmp_path):
    traj = integrate(decay, [1.0, 0.0], SolverConfig(t_end=1.0))
    path = tmp_path / "traj.csv"
    traj.to_csv(path, ["A", "B"])
    assert path.read_text().splitlines()[0] == "t,A,B"
    back = Trajectory.from_csv(path)
    assert back.species == ["A", "B"]
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.states, traj.states)


def test_compare_identical_is_zero():
    traj = integrate(decay, [1.0, 0.0], SolverConfig(t_end=2.0))
    m = compare(traj, traj, ComparisonSpec((0, 1)))
    assert m.aggregate == 0.0
    assert all(s.max_abs == 0 and s.steady_state_deviation == 0 for s in m.species.values())


def test_compare_metric_definitions():
    t = np.linspace(0, 1, 11)
    a = Trajectory(t, np.column_stack([np.ones(11), 2 * np.ones(11)]), HORIZON)
    b = Trajectory(t, np.column_stack([1.1 * np.ones(11), 2 * np.ones(11)]), HORIZON)
    m = compare(a, b, ComparisonSpec((0, 1), n_grid=21))
    assert m.species[0].relative_l2 == pytest.approx(0.1)
    assert m.species[0].max_abs == pytest.approx(0.1)
    assert m.species[0].steady_state_deviation == pytest.approx(0.1)
    assert m.species[1].relative_l2 == pytest.approx(0.0, abs=1e-15)
    assert m.aggregate == pytest.approx(0.1)


def test_compare_grid_not_covered():
    traj = integrate(decay, [1.0, 0.0], SolverConfig(t_end=1.0))
    with pytest.raises(GridNotCovered):
        compare(traj, traj, ComparisonSpec((0,), grid=np.linspace(0, 2, 5)))


def test_comparison_spec_validation(example1):
    red = plan_reduction(*example1, [1])
    with pytest.raises(ValueError):
        ComparisonSpec(())
    with pytest.raises(ValueError, match="frozen"):
        ComparisonSpec((0, 2)).validate(6, red)
    with pytest.raises(ValueError):
        ComparisonSpec((7,)).validate(6)


def test_identity_reduction_compare(fig1):
    net, view = fig1
    red = plan_reduction(net, view, [0, 1][:0])
    cfg = SolverConfig(t_end=3.0)
    x0 = np.array([1.0, 0.5, 0.2, 0.0])
    m = compare(simulate_full(net, view, x0, cfg), simulate_reduced(red, x0, cfg), ComparisonSpec((0, 1, 2, 3)))
    assert m.aggregate <= 2 * cfg.rtol


def test_pulse_requires_equilibrium(example1):
    net, view = example1
    red = plan_reduction(net, view, [1])
    with pytest.raises(NotAtEquilibrium):
        pulse_experiment(net, view, red, [2, 1, 1, 1, 1, 1], {}, SolverConfig(), ComparisonSpec((0,)))


def test_zero_pulse_at_equilibrium(example1):
    net, view = example1
    red = plan_reduction(net, view, [1])
    res = pulse_experiment(net, view, red, np.ones(6), {}, SolverConfig(t_end=2), ComparisonSpec((0, 1, 4, 5)))
    assert res.metrics.aggregate == 0.0
    assert res.full.status == CONVERGED and res.reduced.status == CONVERGED


def test_pulse_on_frozen_species(example1):
    net, view = example1
    red = plan_reduction(net, view, [1])
    res = pulse_experiment(net, view, red, np.ones(6), {"X3": 2.0}, SolverConfig(t_end=3), ComparisonSpec((0, 1, 4, 5)))
    assert (res.reduced.states[:, 2] == 1.0).all()  # held at its frozen value
    assert res.full.states[-1, 2] < 2.0  # relaxes in the full model
    assert set(res.metrics.species) == {0, 1, 4, 5}


def test_conservation_drift_full_and_reduced(example1):
    net, view = example1
    cfg = SolverConfig(t_end=10)
    x0 = np.array([2.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    full = simulate_full(net, view, x0, cfg)
    for w in conservation_basis(view):
        drift = np.abs(full.states @ w - w @ x0).max()
        assert drift <= 100 * cfg.atol
    red = plan_reduction(net, view, [1], x0)
    traj = simulate_reduced(red, x0, cfg)
    w = np.array([1, -1, 0, 0, 0, 0])
    assert np.abs(traj.states @ w - w @ x0).max() <= 100 * cfg.atol


def test_polished_steady_state_keeps_totals(example1):
    net, view = example1
    x0 = np.array([2.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    xs = find_steady_state(net, view, x0, SolverConfig(t_end=50))
    assert np.abs(full_model_rhs(net, view)(0, xs)).max() <= 1e-12
    M = full_motion_matrix(net, view)
    # the displacement lies in the stoichiometric subspace
    resid = xs - x0 - M @ np.linalg.lstsq(M, xs - x0, rcond=None)[0]
    assert np.abs(resid).max() <= 1e-12


def test_reduced_steady_state(example1):
    net, view = example1
    red = plan_reduction(net, view, [1])
    xs = reduced_steady_state(red, np.array([2.0, 1.0, 1.0, 1.0, 1.0, 1.0]))
    # the reduced step is still symmetric: x1 x2 = x5 x6 with totals x1 - x2, x5 - x6 and x1 + x5 kept
    assert xs[0] * xs[1] == pytest.approx(xs[4] * xs[5], rel=1e-10)
    assert xs[0] - xs[1] == pytest.approx(1.0) and xs[0] + xs[4] == pytest.approx(3.0)


def test_polish_without_motion_is_identity():
    x = np.array([1.0, 2.0])
    assert polish_steady_state(lambda t, y: y, x, np.zeros((2, 0))) is not x
    assert polish_steady_state(lambda t, y: y, x, np.zeros((2, 0))).tolist() == [1.0, 2.0]
