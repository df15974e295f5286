"""Run configuration and the registry of built-in environments."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .blackbox import (
    BlackBoxPredictor,
    EngineeredPendulumPolicy,
    MlpPredictor,
    MlpSpec,
    RawPendulumPolicy,
    synthetic_docking_predictor,
)
from .builder import TrainConfig
from .engine import CfeWeights, ConstraintFn, SolverParams, make_constraint

ENVIRONMENTS = ("pendulum-engineered", "pendulum-raw", "synthetic-docking", "external-mlp")


@dataclass
class EngineConfig:
    weights: CfeWeights = field(default_factory=CfeWeights)
    solver: SolverParams = field(default_factory=SolverParams)
    num_explanations: int = 1
    max_leaves: int = 50
    eps_y: float | None = None       # None: 0.1 * output range
    eps_target: float | None = None
    constraints: list[dict] = field(default_factory=list)  # [{"id": ..., "params": {...}}]

    def build_constraints(self) -> list[ConstraintFn]:
        return [make_constraint(doc) for doc in self.constraints]


@dataclass
class RunConfig:
    environment: str = "pendulum-engineered"
    seed: int = 42
    tree_path: str = "models/tree.json"
    raw_tree_path: str | None = None    # second tree for the explorer's raw mode
    mlp_path: str | None = None         # weights file for environment external-mlp
    dataset_path: str = "data/dataset.json"
    sampler: str | None = None          # None: environment default
    sample_count: int = 50000
    heldout_fraction: float = 0.2
    r2_gate: float = 0.9
    train: dict = field(default_factory=dict)   # overrides on the env's TrainConfig
    engine: EngineConfig = field(default_factory=EngineConfig)
    port: int = 8000

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.environment!r}; "
                             f"expected one of {ENVIRONMENTS}")
        if self.heldout_fraction <= 0 or self.heldout_fraction >= 1:
            raise ValueError("heldout_fraction must be in (0, 1)")

    def train_config(self) -> TrainConfig:
        base = dataclasses.asdict(default_train_config(self.environment))
        base.update(self.train)
        return TrainConfig(**base)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        engine_doc = doc.pop("engine", {})
        weights = CfeWeights.from_dict(engine_doc.pop("weights", {}))
        solver = SolverParams(**engine_doc.pop("solver", {}))
        engine = EngineConfig(weights=weights, solver=solver, **engine_doc)
        return cls(engine=engine, **doc)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def require_file(self, path: str | None, what: str) -> str:
        if not path or not Path(path).exists():
            raise FileNotFoundError(f"{what} not found: {path!r}")
        return path


def default_train_config(environment: str) -> TrainConfig:
    # calibrated so the default build lands near the reference tree sizes
    if environment == "synthetic-docking":
        return TrainConfig(min_samples_leaf=96)
    return TrainConfig()


def default_sampler(environment: str) -> str:
    return "uniform-in-bounds"


def default_constraints(environment: str) -> list[dict]:
    if environment == "pendulum-raw":
        # the pendulum tip must stay on the circle of radius = rod length
        return [{"id": "unit_circle", "params": {"x_index": 0, "y_index": 1}}]
    return []


def make_predictor(environment: str, seed: int = 42,
                   mlp_path: str | None = None) -> BlackBoxPredictor:
    if environment == "pendulum-engineered":
        return EngineeredPendulumPolicy()
    if environment == "pendulum-raw":
        return RawPendulumPolicy()
    if environment == "synthetic-docking":
        return synthetic_docking_predictor(seed)
    if environment == "external-mlp":
        if not mlp_path:
            raise ValueError("environment external-mlp requires mlp_path")
        return MlpPredictor(MlpSpec.load(mlp_path))
    raise ValueError(f"unknown environment {environment!r}")


def resolve_constraints(config: RunConfig) -> list[ConstraintFn]:
    docs = config.engine.constraints or default_constraints(config.environment)
    return [make_constraint(d) for d in docs]
