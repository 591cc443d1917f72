import numpy as np
import pytest

from flowlab.errors import BallEscapeError, ConfigurationError, ConvergenceError, DegeneratePairError
from flowlab.families import conformal_bump, perturbation_direction, random_trajectory_fields
from flowlab.fixed_point import PicardProblem, contraction_ratio, phi_apply, picard_solve
from flowlab.parabolic import (
    FlowTrajectory,
    RicciFlowBackground,
    StaticBackground,
    integrate_deturck_direct,
    integrate_ricci_flow,
    zero_trajectory,
)


@pytest.fixture
def bump16(grid16):
    return conformal_bump(grid16, 0.17)


def test_phi_of_zero_flat_is_zero(flat32):
    prob = PicardProblem("static-existence", StaticBackground(flat32), 0.05, 0.1)
    assert not np.any(phi_apply(zero_trajectory(flat32.grid, prob.times), prob).fields)


def test_phi_of_zero_short_time(bump16):
    prob = PicardProblem("static-existence", StaticBackground(bump16), 0.01, 0.1)
    out = phi_apply(zero_trajectory(bump16.grid, prob.times), prob)
    Z = prob.Z
    for t, f in zip(prob.times[1:], out.fields[1:]):
        assert np.max(np.abs(f - t * Z)) <= 2 * t**2 * np.max(np.abs(Z))


def test_static_existence_converges_and_matches_direct(bump16):
    bg = StaticBackground(bump16)
    prob = PicardProblem("static-existence", bg, 0.05, 0.1)
    h, trace = picard_solve(prob)
    assert trace.converged and trace.measured_ratio < 0.5
    assert all(b < a for a, b in zip(trace.increments, trace.increments[1:]))
    assert prob.xnorm(phi_apply(h, prob) - h) <= prob.tol
    direct = integrate_deturck_direct(bump16.g, bg, times=prob.times)
    assert np.max(np.abs(direct.fields - h.fields)) < 1e-4
    assert trace.to_csv().splitlines()[0] == "iteration,norm,increment,ratio"


def test_ball_escape_and_non_convergence(bump16):
    bg = StaticBackground(bump16)
    with pytest.raises(BallEscapeError) as exc:
        picard_solve(PicardProblem("static-existence", bg, 0.05, 1e-3))
    assert exc.value.iteration == 1
    with pytest.raises(ConvergenceError):
        picard_solve(PicardProblem("static-existence", bg, 0.05, 0.1, max_iter=2))


def test_perturbation_zero_data(bump16):
    bg = RicciFlowBackground(integrate_ricci_flow(bump16, 0.05))
    prob = PicardProblem("perturbation", bg, 0.05, 0.05, h0=np.zeros(bump16.g.shape))
    h, trace = picard_solve(prob)
    assert trace.iterations == 1 and not np.any(h.fields)


def test_perturbation_on_a_later_piece(bump16):
    traj = integrate_ricci_flow(bump16, 0.05)
    bg = RicciFlowBackground(traj)
    times = traj.times[len(traj) // 2 :]
    h0 = 1e-2 * perturbation_direction(bump16.grid, 0, metric=bg.metric_at(times[0]))
    prob = PicardProblem("perturbation", bg, 1.0, 0.05, h0=h0, times=times)
    assert prob.times[0] > 0 and np.isclose(prob.T, times[-1] - times[0])
    h, trace = picard_solve(prob)
    assert trace.converged and np.array_equal(h.fields[0], h0)


def test_problem_guards(bump16, flat32):
    bg = StaticBackground(bump16)
    with pytest.raises(ConfigurationError):
        PicardProblem("bogus", bg, 0.05, 0.1)
    with pytest.raises(ConfigurationError):
        PicardProblem("perturbation", bg, 0.05, 0.1)
    with pytest.raises(ConfigurationError):
        PicardProblem("perturbation", bg, 0.05, 0.1, h0=np.broadcast_to(np.eye(2), bump16.g.shape))
    rf = RicciFlowBackground(integrate_ricci_flow(bump16, 0.05))
    with pytest.raises(ConfigurationError):
        PicardProblem("static-existence", rf, 0.05, 0.1)


def _pair(prob, rng, delta):
    out = []
    for _ in range(2):
        f = FlowTrajectory(prob.grid, prob.times, random_trajectory_fields(prob.grid, prob.times, rng))
        out.append(f.scaled(delta * rng.uniform(0.3, 1.0) / prob.xnorm(f)))
    return out


def test_contraction_ratio(grid16, bump16):
    from flowlab.geometry import Metric

    prob = PicardProblem("static-existence", StaticBackground(Metric.flat(grid16)), 0.05, 1e-2)
    rng = np.random.default_rng(0)
    v, w = _pair(prob, rng, 1e-2)
    assert contraction_ratio(v, w, prob).ratio < 0.5
    with pytest.raises(DegeneratePairError):
        contraction_ratio(v, v, prob)
    # the ratio scales roughly linearly with the ball size
    means = []
    deltas = [1e-3, 1e-2, 1e-1]
    for d in deltas:
        p = PicardProblem("static-existence", StaticBackground(bump16), 0.05, d)
        r = np.random.default_rng(1)
        means.append(np.mean([contraction_ratio(*_pair(p, r, d), p).ratio for _ in range(3)]))
    slope = np.polyfit(np.log(deltas), np.log(means), 1)[0]
    assert 0.8 < slope < 1.2
