#!/usr/bin/env python3
"""Produce the model artifacts and config the service (and explorer UI) need.

Writes models/pendulum_engineered.json, models/pendulum_raw.json and a ready
service config to the chosen directory, then prints the serve command.
"""

import argparse
import json
from pathlib import Path

from lmtcf.blackbox import EngineeredPendulumPolicy, RawPendulumPolicy
from lmtcf.builder import TrainConfig, build, fidelity, sample_blackbox


def train_tree(predictor, seed):
    dataset = sample_blackbox(predictor, "uniform-in-bounds", 50_000, seed=seed)
    train, heldout = dataset.split(0.2, seed=seed + 1)
    tree = build(train, TrainConfig())
    report = fidelity(tree, heldout, 0.2)
    return tree, report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="models")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    eng_tree, eng_report = train_tree(EngineeredPendulumPolicy(), seed=1)
    raw_tree, raw_report = train_tree(RawPendulumPolicy(), seed=5)
    eng_path = out / "pendulum_engineered.json"
    raw_path = out / "pendulum_raw.json"
    eng_tree.save(eng_path)
    raw_tree.save(raw_path)
    print(f"engineered tree: {eng_tree.n_leaves} leaves, R^2 {min(eng_report.r2):.3f}")
    print(f"raw tree:        {raw_tree.n_leaves} leaves, R^2 {min(raw_report.r2):.3f}")

    config = {
        "environment": "pendulum-engineered",
        "tree_path": str(eng_path),
        "raw_tree_path": str(raw_path),
        "port": args.port,
    }
    config_path = out / "service_config.json"
    config_path.write_text(json.dumps(config, indent=2))
    print(f"\nserve with:\n  lmtcf --config {config_path} serve")


if __name__ == "__main__":
    main()
