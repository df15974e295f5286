#!/usr/bin/env python3
"""Regenerate the frontend test fixtures from a real service instance.

Spins the service state up in-process (no network), issues the exact requests
the explorer makes, and writes the raw JSON bodies under
frontend/tests/fixtures/.
"""

import argparse
import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from lmtcf.blackbox import EngineeredPendulumPolicy, RawPendulumPolicy
from lmtcf.builder import TrainConfig, build, sample_blackbox
from lmtcf.config import RunConfig
from lmtcf.service import build_state, create_app


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="frontend/tests/fixtures")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print("building trees ...")
    eng_tree = build(sample_blackbox(EngineeredPendulumPolicy(), "uniform-in-bounds",
                                     50_000, seed=1).split(0.2, seed=2)[0], TrainConfig())
    raw_tree = build(sample_blackbox(RawPendulumPolicy(), "uniform-in-bounds",
                                     50_000, seed=5).split(0.2, seed=6)[0], TrainConfig())
    eng_path, raw_path = out / "_tree_eng.json", out / "_tree_raw.json"
    eng_tree.save(eng_path)
    raw_tree.save(raw_path)

    config = RunConfig.from_dict({
        "environment": "pendulum-engineered",
        "tree_path": str(eng_path),
        "raw_tree_path": str(raw_path),
        "seed": 42,
        "engine": {"weights": {"lambda_feas": 0.0}},
    })
    client = TestClient(create_app(build_state(config)))

    theta, theta_dot = 0.785, 0.0
    raw_obs = [float(np.cos(theta)), float(np.sin(theta)), theta_dot]

    fixtures = {
        "model.json": client.get("/model"),
        "session.json": client.post("/session", json={"env": "pendulum",
                                                      "theta": theta,
                                                      "theta_dot": theta_dot}),
        "explain_targeted_engineered.json": client.post(
            "/explain", json={"x": [theta, theta_dot], "target": [-2.0],
                              "mode": "engineered"}),
        "explain_engineered.json": client.post(
            "/explain", json={"x": [theta, theta_dot], "mode": "engineered"}),
        "explain_raw.json": client.post(
            "/explain", json={"x": raw_obs, "mode": "raw", "num_explanations": 3}),
    }
    for name, response in fixtures.items():
        assert response.status_code == 200, (name, response.text)
        (out / name).write_text(json.dumps(response.json(), indent=2))
        print(f"wrote {out / name}")
    eng_path.unlink()
    raw_path.unlink()


if __name__ == "__main__":
    main()
