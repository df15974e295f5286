"""Dynamics, transforms, and rollouts for the inverted pendulum."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmtcf import pendulum as pend
from lmtcf.blackbox import EngineeredPendulumPolicy


def rk4_trajectory(theta0, theta_dot0, steps, dt=pend.DT):
    """Independent RK4 integrator of the same unforced dynamics (the oracle)."""

    def deriv(y):
        return np.array([y[1], 15.0 * np.sin(y[0])])

    y = np.array([theta0, theta_dot0], dtype=float)
    out = [y.copy()]
    for _ in range(steps):
        k1 = deriv(y)
        k2 = deriv(y + dt / 2 * k1)
        k3 = deriv(y + dt / 2 * k2)
        k4 = deriv(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    return np.array(out)


def test_upright_equilibrium_is_fixed_point():
    s = pend.PendulumState(0.0, 0.0)
    s2 = pend.step(s, 0.0)
    assert s2.theta == 0.0 and s2.theta_dot == 0.0


def test_bottom_rest_stays_at_rest():
    # sin(pi) is ~1.2e-16 in floats, so "stays zero" holds to float noise
    s = pend.step(pend.PendulumState(np.pi, 0.0), 0.0)
    assert abs(s.theta_dot) < 1e-15


def test_energy_drift_matches_rk4():
    s = pend.PendulumState(0.1, 0.0)
    e0 = s.energy()
    energies = [e0]
    for _ in range(100):
        s = pend.step(s, 0.0)
        energies.append(s.energy())
    rk = rk4_trajectory(0.1, 0.0, 100)
    rk_energies = [pend.PendulumState(th, thd).energy() for th, thd in rk]
    drift = energies[-1] - energies[0]
    drift_rk4 = rk_energies[-1] - rk_energies[0]
    assert abs(drift - drift_rk4) <= 0.02 * abs(e0)


def test_torque_is_clamped():
    s1 = pend.step(pend.PendulumState(1.0, 0.0), 100.0)
    s2 = pend.step(pend.PendulumState(1.0, 0.0), pend.MAX_TORQUE)
    assert s1 == s2


@settings(max_examples=200, deadline=None)
@given(theta=st.floats(-50, 50), theta_dot=st.floats(-50, 50),
       torque=st.floats(-10, 10))
def test_step_preserves_state_invariants(theta, theta_dot, torque):
    s = pend.step(pend.PendulumState(theta, theta_dot), torque)
    assert -np.pi < s.theta <= np.pi
    assert -pend.MAX_SPEED <= s.theta_dot <= pend.MAX_SPEED


def test_to_raw_upright():
    obs = pend.to_raw(pend.PendulumState(0.0, 3.0))
    assert (obs.x, obs.y, obs.theta_dot) == (1.0, 0.0, 3.0)


def test_raw_is_on_unit_circle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        s = pend.PendulumState(rng.uniform(-np.pi, np.pi), rng.uniform(-8, 8))
        obs = pend.to_raw(s)
        assert abs(obs.x ** 2 + obs.y ** 2 - 1.0) < 1e-12


@settings(max_examples=300, deadline=None)
@given(theta=st.floats(-np.pi + 1e-9, np.pi), theta_dot=st.floats(-8, 8))
def test_round_trip_raw_engineered(theta, theta_dot):
    s = pend.PendulumState(theta, theta_dot)
    back = pend.from_raw(pend.to_raw(s))
    assert back.theta == pytest.approx(s.theta, abs=1e-12)
    assert back.theta_dot == s.theta_dot


def test_from_raw_normalizes_off_circle():
    s = pend.from_raw(np.array([0.9, 0.9, 0.0]))
    assert s.theta == pytest.approx(np.pi / 4)


def test_from_raw_rejects_origin():
    with pytest.raises(ValueError):
        pend.from_raw(np.array([0.0, 0.0, 1.0]))


def test_rollout_zero_policy_oscillates_within_clamp():
    traj = pend.rollout(lambda obs: 0.0, pend.PendulumState(np.pi - 0.5, 0.0), 300)
    speeds = [abs(s.theta_dot) for s in traj.states]
    assert max(speeds) <= pend.MAX_SPEED
    assert max(speeds) > 0.1  # it does swing


def test_rollout_length_and_alignment():
    traj = pend.rollout(lambda obs: 0.5, pend.PendulumState(1.0, 0.0), 17)
    assert len(traj.states) == 18
    assert len(traj.actions) == 18  # last action evaluated but never applied


def test_rollout_policy_failure_reports_step():
    def bad_policy(obs):
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError, match="step 0"):
        pend.rollout(bad_policy, pend.PendulumState(1.0, 0.0), 5)


def test_rollout_closed_loop_reaches_upright():
    policy = EngineeredPendulumPolicy()
    traj = pend.rollout(policy, pend.PendulumState(np.pi, 0.0), 500)
    thetas = np.array([s.theta for s in traj.states])
    hit = np.nonzero(np.abs(thetas) < 0.05)[0]
    assert hit.size > 0, "never reached the upright band"
    assert np.all(np.abs(thetas[hit[0]:]) < 0.05), "did not stay upright"


def test_trajectory_csv_export(tmp_path):
    traj = pend.rollout(lambda obs: 0.0, pend.PendulumState(1.0, 0.0), 5)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,theta,theta_dot,x,y,torque"
    assert len(lines) == 7  # header + steps + 1 states
    row0 = [float(v) for v in lines[1].split(",")]
    assert row0[1] == pytest.approx(1.0)
