"""Inverted pendulum dynamics and the raw <-> engineered feature transforms.

Angle convention: theta = 0 is upright, positive counter-clockwise, wrapped
to (-pi, pi].  The raw observation (x, y, theta_dot) = (cos theta, sin theta,
theta_dot) is the dependent-coordinate view; (theta, theta_dot) is the
engineered, independent-coordinate view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRAVITY = 10.0
LENGTH = 1.0
MASS = 1.0
DT = 0.05
MAX_TORQUE = 2.0
MAX_SPEED = 8.0
INERTIA = MASS * LENGTH ** 2 / 3.0  # uniform rod about its end


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = (theta + np.pi) % (2.0 * np.pi) - np.pi
    return np.pi if wrapped == -np.pi else float(wrapped)


@dataclass(frozen=True)
class PendulumState:
    theta: float
    theta_dot: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        object.__setattr__(self, "theta_dot", float(np.clip(self.theta_dot, -MAX_SPEED, MAX_SPEED)))

    def energy(self) -> float:
        """Kinetic plus potential energy, zero level at the pivot height."""
        return 0.5 * INERTIA * self.theta_dot ** 2 \
            + MASS * GRAVITY * (LENGTH / 2.0) * np.cos(self.theta)


@dataclass(frozen=True)
class RawObservation:
    x: float
    y: float
    theta_dot: float

    def as_vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta_dot])


def to_raw(state: PendulumState) -> RawObservation:
    return RawObservation(
        x=float(np.cos(state.theta)), y=float(np.sin(state.theta)),
        theta_dot=state.theta_dot,
    )


def from_raw(obs: RawObservation | np.ndarray) -> PendulumState:
    """Invert to_raw; off-circle (x, y) are normalized onto the unit circle."""
    if isinstance(obs, RawObservation):
        x, y, theta_dot = obs.x, obs.y, obs.theta_dot
    else:
        x, y, theta_dot = (float(v) for v in np.asarray(obs, dtype=float))
    if x * x + y * y == 0.0:
        raise ValueError("(x, y) = (0, 0) has no angle")
    return PendulumState(theta=float(np.arctan2(y, x)), theta_dot=theta_dot)


def step(state: PendulumState, torque: float, dt: float = DT) -> PendulumState:
    """Semi-implicit Euler step; torque is clamped to +-MAX_TORQUE."""
    u = float(np.clip(torque, -MAX_TORQUE, MAX_TORQUE))
    theta_acc = (3.0 * GRAVITY / (2.0 * LENGTH)) * np.sin(state.theta) \
        + (3.0 / (MASS * LENGTH ** 2)) * u
    theta_dot = float(np.clip(state.theta_dot + theta_acc * dt, -MAX_SPEED, MAX_SPEED))
    return PendulumState(theta=state.theta + theta_dot * dt, theta_dot=theta_dot)


@dataclass
class Trajectory:
    states: list[PendulumState]
    actions: list[float]  # policy output at every state incl. the final one

    def __len__(self) -> int:
        return len(self.states)

    def observations(self) -> np.ndarray:
        return np.array([to_raw(s).as_vector() for s in self.states])

    def to_csv(self, path, dt: float = DT) -> None:
        with open(path, "w") as fh:
            fh.write("t,theta,theta_dot,x,y,torque\n")
            for i, (s, a) in enumerate(zip(self.states, self.actions)):
                obs = to_raw(s)
                fh.write(f"{i * dt!r},{s.theta!r},{s.theta_dot!r},"
                         f"{obs.x!r},{obs.y!r},{a!r}\n")


def rollout(policy, initial: PendulumState, steps: int, dt: float = DT) -> Trajectory:
    """Run `steps` closed-loop steps; `policy` maps a raw observation to torque.

    Returns steps + 1 states; actions are evaluated at every state so rows
    stay aligned, the final action is never applied.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    states = [initial]
    actions = []
    state = initial
    for k in range(steps):
        try:
            action = float(policy(to_raw(state).as_vector()))
        except Exception as exc:
            raise RuntimeError(f"policy failed at step {k}: {exc}") from exc
        actions.append(action)
        state = step(state, action, dt=dt)
        states.append(state)
    actions.append(float(policy(to_raw(state).as_vector())))
    return Trajectory(states=states, actions=actions)
