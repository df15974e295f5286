"""Opaque predictor contract plus the concrete black boxes used in anger.

Everything downstream (surrogate training, explanation validation, the
service) talks to a BlackBoxPredictor and never sees its internals.  Three
implementations live here: a loadable feed-forward network evaluator, an
analytic pendulum controller standing in for a trained policy, and a fixed
random network standing in for the docking agent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import pendulum as pend


class EvaluationError(RuntimeError):
    pass


class BlackBoxPredictor:
    """Deterministic total map from an input box to a clamped output box."""

    input_dim: int
    output_dim: int
    input_bounds: np.ndarray   # (m, 2)
    output_bounds: np.ndarray  # (n, 2)

    def predict(self, x) -> np.ndarray:
        raise NotImplementedError

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([self.predict(row) for row in X])

    def _clamp_output(self, y: np.ndarray) -> np.ndarray:
        return np.clip(y, self.output_bounds[:, 0], self.output_bounds[:, 1])

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected {self.input_dim}-vector, got shape {x.shape}")
        return x


# ---------------------------------------------------------------------------
# Feed-forward network evaluator

_ACTIVATIONS = {
    "tanh": np.tanh,
    "relu": lambda z: np.maximum(z, 0.0),
    "identity": lambda z: z,
}


@dataclass
class LayerSpec:
    weights: np.ndarray  # (n_out, n_in)
    bias: np.ndarray     # (n_out,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError("layer weights must be (n_out, n_in) with matching bias")


@dataclass
class MlpSpec:
    layers: list[LayerSpec]
    input_bounds: np.ndarray
    output_bounds: np.ndarray
    output_scale: np.ndarray | None = None

    def __post_init__(self):
        self.input_bounds = np.asarray(self.input_bounds, dtype=float)
        self.output_bounds = np.asarray(self.output_bounds, dtype=float)
        for a, b in zip(self.layers[:-1], self.layers[1:]):
            if b.weights.shape[1] != a.weights.shape[0]:
                raise ValueError("consecutive layer dimensions do not chain")
        n = self.layers[-1].weights.shape[0]
        if self.output_bounds.shape != (n, 2):
            raise ValueError("final layer width must equal output_dim")
        if self.output_scale is not None:
            self.output_scale = np.asarray(self.output_scale, dtype=float)

    def to_json(self) -> dict:
        doc = {
            "layers": [
                {"weights": l.weights.tolist(), "bias": l.bias.tolist(),
                 "activation": l.activation}
                for l in self.layers
            ],
            "input_bounds": self.input_bounds.tolist(),
            "output_bounds": self.output_bounds.tolist(),
        }
        if self.output_scale is not None:
            doc["output_scale"] = self.output_scale.tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "MlpSpec":
        layers = [
            LayerSpec(weights=l["weights"], bias=l["bias"], activation=l["activation"])
            for l in doc["layers"]
        ]
        scale = doc.get("output_scale")
        return cls(layers=layers, input_bounds=doc["input_bounds"],
                   output_bounds=doc["output_bounds"],
                   output_scale=None if scale is None else np.asarray(scale))

    @classmethod
    def load(cls, path) -> "MlpSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _mlp_forward_batch(spec: MlpSpec, H: np.ndarray) -> np.ndarray:
    for i, layer in enumerate(spec.layers):
        with np.errstate(over="ignore", invalid="ignore"):  # detected explicitly below
            H = _ACTIVATIONS[layer.activation](H @ layer.weights.T + layer.bias)
        if not np.all(np.isfinite(H)):
            raise EvaluationError(f"non-finite activation in layer {i}")
    if spec.output_scale is not None:
        H = H * spec.output_scale
    return np.clip(H, spec.output_bounds[:, 0], spec.output_bounds[:, 1])


def mlp_forward(spec: MlpSpec, x) -> np.ndarray:
    """Plain forward pass; output clamped to the spec's output bounds."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.layers[0].weights.shape[1],):
        raise ValueError(f"expected {spec.layers[0].weights.shape[1]}-vector, got {x.shape}")
    return _mlp_forward_batch(spec, x[None, :])[0]


class MlpPredictor(BlackBoxPredictor):
    def __init__(self, spec: MlpSpec,
                 feature_names: list[str] | None = None,
                 output_names: list[str] | None = None):
        self.spec = spec
        self.input_dim = spec.layers[0].weights.shape[1]
        self.output_dim = spec.layers[-1].weights.shape[0]
        self.input_bounds = spec.input_bounds
        self.output_bounds = spec.output_bounds
        self.feature_names = feature_names or [f"x{j}" for j in range(self.input_dim)]
        self.output_names = output_names or [f"y{k}" for k in range(self.output_dim)]

    def predict(self, x) -> np.ndarray:
        return mlp_forward(self.spec, self._check_input(x))

    def predict_batch(self, X) -> np.ndarray:
        return _mlp_forward_batch(self.spec, np.asarray(X, dtype=float))


# ---------------------------------------------------------------------------
# Analytic pendulum controller

SWINGUP_GAIN = 1.0
SWITCH_ANGLE = 0.5
KP = 8.0
KD = 2.0
# potential energy at the upright equilibrium
E_TARGET = pend.MASS * pend.GRAVITY * pend.LENGTH / 2.0


def pendulum_policy(theta: float, theta_dot: float) -> float:
    """Energy-shaping swing-up with a PD catch near the top, in [-2, 2] N*m."""
    if abs(theta) <= SWITCH_ANGLE:
        u = -KP * theta - KD * theta_dot
    else:
        energy = pend.PendulumState(theta, theta_dot).energy()
        u = SWINGUP_GAIN * theta_dot * (E_TARGET - energy)
    return float(np.clip(u, -pend.MAX_TORQUE, pend.MAX_TORQUE))


class RawPendulumPolicy(BlackBoxPredictor):
    """Controller over the raw (cos theta, sin theta, theta_dot) observation.

    Off-circle inputs are normalized internally, so the map is total on the
    full box even though only the cylinder is physical.
    """

    input_dim = 3
    output_dim = 1
    feature_names = ["x", "y", "theta_dot"]
    output_names = ["torque"]

    def __init__(self):
        self.input_bounds = np.array([[-1.0, 1.0], [-1.0, 1.0],
                                      [-pend.MAX_SPEED, pend.MAX_SPEED]])
        self.output_bounds = np.array([[-pend.MAX_TORQUE, pend.MAX_TORQUE]])

    def predict(self, x) -> np.ndarray:
        x = self._check_input(x)
        state = pend.from_raw(x)
        return np.array([pendulum_policy(state.theta, state.theta_dot)])

    def __call__(self, obs) -> float:
        return float(self.predict(obs)[0])


class EngineeredPendulumPolicy(BlackBoxPredictor):
    """Same controller over the independent (theta, theta_dot) coordinates."""

    input_dim = 2
    output_dim = 1
    feature_names = ["theta", "theta_dot"]
    output_names = ["torque"]

    def __init__(self):
        self.input_bounds = np.array([[-np.pi, np.pi],
                                      [-pend.MAX_SPEED, pend.MAX_SPEED]])
        self.output_bounds = np.array([[-pend.MAX_TORQUE, pend.MAX_TORQUE]])

    def predict(self, x) -> np.ndarray:
        x = self._check_input(x)
        return np.array([pendulum_policy(x[0], x[1])])

    def __call__(self, obs) -> float:
        """Raw-observation entry point so it can drive simulations directly."""
        state = pend.from_raw(np.asarray(obs, dtype=float))
        return pendulum_policy(state.theta, state.theta_dot)


# ---------------------------------------------------------------------------
# Synthetic docking stand-in

DOCKING_FEATURES = ["x_rel", "y_rel", "heading", "surge_vel",
                    "sway_vel", "yaw_rate", "quay_dist", "quay_angle"]
DOCKING_OUTPUTS = ["tunnel_force", "az1_force", "az1_angle", "az2_force", "az2_angle"]


def synthetic_docking_predictor(seed: int = 42) -> MlpPredictor:
    """Fixed random 2-hidden-layer tanh net: 8 inputs, 5 continuous outputs.

    Smooth, bounded, and fully determined by the seed; exercises the
    multi-output path the way the docking agent would.
    """
    rng = np.random.default_rng(seed)
    sizes = [8, 32, 32, 5]
    layers = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        layers.append(LayerSpec(
            weights=rng.standard_normal((n_out, n_in)) * (2.0 / np.sqrt(n_in)),
            bias=rng.standard_normal(n_out) * 0.1,
            activation="tanh",
        ))
    output_bounds = np.array([
        [-1.0, 1.0], [-1.0, 1.0], [-np.pi, np.pi], [-1.0, 1.0], [-np.pi, np.pi],
    ])
    spec = MlpSpec(
        layers=layers,
        input_bounds=np.tile([-1.0, 1.0], (8, 1)),
        output_bounds=output_bounds,
        # tanh output fills (-1, 1); rescale angle channels to their range
        output_scale=output_bounds[:, 1],
    )
    return MlpPredictor(spec, feature_names=list(DOCKING_FEATURES),
                        output_names=list(DOCKING_OUTPUTS))
