"""HTTP service exposing prediction, explanation and live pendulum sessions.

The service holds immutable trees and predictors; explanation requests run
concurrently against them.  A pendulum session is the only mutable state and
each one carries its own lock.  When two pendulum trees are configured (the
engineered and the raw-coordinate surrogate) the explain endpoint accepts a
"mode" field so clients can contrast feasible and infeasible answers.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import pendulum as pend
from .blackbox import BlackBoxPredictor, RawPendulumPolicy
from .config import RunConfig, make_predictor, resolve_constraints
from .engine import CfeQuery, CfeWeights, explain, explain_targeted
from .tree import LinearModelTree


@dataclass
class ModelSlot:
    mode: str
    tree: LinearModelTree
    predictor: BlackBoxPredictor
    constraints: list = field(default_factory=list)


@dataclass
class SimSession:
    state: pend.PendulumState
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceState:
    def __init__(self, config: RunConfig, slots: dict[str, ModelSlot], default_mode: str):
        self.config = config
        self.slots = slots
        self.default_mode = default_mode
        self.sessions: dict[str, SimSession] = {}
        self.sessions_lock = threading.Lock()
        self.policy = RawPendulumPolicy()

    def slot(self, mode: str | None) -> ModelSlot:
        mode = mode or self.default_mode
        if mode not in self.slots:
            raise ValueError(f"unknown mode {mode!r}; available: {sorted(self.slots)}")
        return self.slots[mode]


def build_state(config: RunConfig) -> ServiceState:
    """Load the configured tree(s) and predictors into an immutable state."""
    slots: dict[str, ModelSlot] = {}
    if config.environment.startswith("pendulum"):
        if config.environment == "pendulum-engineered":
            primary_mode, other_mode = "engineered", "raw"
            other_env = "pendulum-raw"
        else:
            primary_mode, other_mode = "raw", "engineered"
            other_env = "pendulum-engineered"
        tree = LinearModelTree.load(config.require_file(config.tree_path, "tree file"))
        slots[primary_mode] = ModelSlot(
            mode=primary_mode, tree=tree,
            predictor=make_predictor(config.environment, config.seed),
            constraints=resolve_constraints(config),
        )
        if config.raw_tree_path:
            other_tree = LinearModelTree.load(
                config.require_file(config.raw_tree_path, "second tree file"))
            other_config = RunConfig.from_dict({"environment": other_env})
            other_config.engine = config.engine
            slots[other_mode] = ModelSlot(
                mode=other_mode, tree=other_tree,
                predictor=make_predictor(other_env, config.seed),
                constraints=resolve_constraints(other_config),
            )
        default_mode = primary_mode
    else:
        tree = LinearModelTree.load(config.require_file(config.tree_path, "tree file"))
        slots["default"] = ModelSlot(
            mode="default", tree=tree,
            predictor=make_predictor(config.environment, config.seed, config.mlp_path),
            constraints=resolve_constraints(config),
        )
        default_mode = "default"
    return ServiceState(config, slots, default_mode)


class PredictBody(BaseModel):
    x: list[float]
    mode: str | None = None


class ExplainBody(BaseModel):
    x: list[float]
    target: list[float] | None = None
    num_explanations: int | None = None
    max_leaves: int | None = None
    weights: dict | None = None
    eps_y: float | None = None
    eps_target: float | None = None
    mode: str | None = None


class SessionBody(BaseModel):
    env: str = "pendulum"
    theta: float | None = None
    theta_dot: float | None = None


class StepBody(BaseModel):
    torque: float | None = None
    auto: bool = False


class SetStateBody(BaseModel):
    theta: float
    theta_dot: float


def _session_view(state: pend.PendulumState) -> dict:
    obs = pend.to_raw(state)
    return {
        "state": {"theta": state.theta, "theta_dot": state.theta_dot},
        "observation": [obs.x, obs.y, obs.theta_dot],
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="lmtcf service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def bad_request(_: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.exception_handler(ValueError)
    async def value_error(_: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(KeyError)
    async def not_found(_: Request, exc: KeyError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/model")
    def model():
        modes = {}
        for mode, slot in state.slots.items():
            tree = slot.tree
            modes[mode] = {
                "input_dim": tree.input_dim,
                "output_dim": tree.output_dim,
                "leaf_count": tree.n_leaves,
                "depth": tree.depth,
                "input_bounds": tree.input_bounds.tolist(),
                "output_bounds": tree.output_bounds.tolist(),
                "feature_names": tree.feature_names,
                "output_names": tree.output_names,
            }
        return {"environment": state.config.environment,
                "default_mode": state.default_mode, "modes": modes}

    @app.post("/predict")
    def predict(body: PredictBody):
        slot = state.slot(body.mode)
        y = slot.predictor.predict(np.asarray(body.x, dtype=float))
        return {"y": y.tolist()}

    @app.post("/explain")
    def do_explain(body: ExplainBody):
        slot = state.slot(body.mode)
        ec = state.config.engine
        weights = CfeWeights.from_dict(body.weights) if body.weights else ec.weights
        query = CfeQuery(
            x=np.asarray(body.x, dtype=float),
            target=None if body.target is None else np.asarray(body.target, dtype=float),
            num_explanations=body.num_explanations or ec.num_explanations,
            max_leaves=min(body.max_leaves or ec.max_leaves, slot.tree.n_leaves),
            weights=weights,
            constraints=slot.constraints,
            eps_y=body.eps_y if body.eps_y is not None else ec.eps_y,
            eps_target=body.eps_target if body.eps_target is not None else ec.eps_target,
        )
        if query.target is not None:
            result = explain_targeted(slot.tree, slot.predictor, query, solver=ec.solver)
        else:
            result = explain(slot.tree, slot.predictor, query, solver=ec.solver)
        doc = result.to_json()
        doc["mode"] = slot.mode
        return doc

    @app.post("/session")
    def open_session(body: SessionBody):
        if body.env != "pendulum":
            raise ValueError(f"unknown session environment {body.env!r}")
        initial = pend.PendulumState(
            theta=body.theta if body.theta is not None else np.pi,
            theta_dot=body.theta_dot if body.theta_dot is not None else 0.0,
        )
        session_id = uuid.uuid4().hex
        with state.sessions_lock:
            state.sessions[session_id] = SimSession(state=initial)
        return {"session_id": session_id, **_session_view(initial)}

    def _get_session(session_id: str) -> SimSession:
        with state.sessions_lock:
            session = state.sessions.get(session_id)
        if session is None:
            raise KeyError(f"unknown session {session_id!r}")
        return session

    @app.post("/session/{session_id}/step")
    def step_session(session_id: str, body: StepBody):
        session = _get_session(session_id)
        with session.lock:
            if body.auto or body.torque is None:
                obs = pend.to_raw(session.state).as_vector()
                torque = float(state.policy.predict(obs)[0])
            else:
                torque = float(body.torque)
            session.state = pend.step(session.state, torque)
            view = _session_view(session.state)
        view["action"] = torque
        return view

    @app.post("/session/{session_id}/set_state")
    def set_state(session_id: str, body: SetStateBody):
        session = _get_session(session_id)
        with session.lock:
            session.state = pend.PendulumState(theta=body.theta, theta_dot=body.theta_dot)
            view = _session_view(session.state)
        return view

    return app
