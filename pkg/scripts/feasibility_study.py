#!/usr/bin/env python3
"""Contrast raw-coordinate and engineered-coordinate counterfactual feasibility.

Builds one surrogate over the raw (x, y, theta_dot) observation and one over
the engineered (theta, theta_dot) state, queries both on the same suite of
physical states, and reports how many answers violate the pendulum's circle
constraint in each setup.
"""

import argparse

import numpy as np

from lmtcf.blackbox import EngineeredPendulumPolicy, RawPendulumPolicy
from lmtcf.builder import TrainConfig, build, sample_blackbox
from lmtcf.engine import CfeQuery, CfeWeights, explain, unit_circle_constraint
from lmtcf.pendulum import PendulumState, to_raw


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--queries", type=int, default=250)
    parser.add_argument("--seed", type=int, default=99)
    parser.add_argument("--penalty", type=float, default=0.0,
                        help="constraint penalty weight for the raw tree")
    args = parser.parse_args()

    raw_bb = RawPendulumPolicy()
    eng_bb = EngineeredPendulumPolicy()
    print("building surrogates ...")
    raw_tree = build(sample_blackbox(raw_bb, "uniform-in-bounds", 50_000, seed=5)
                     .split(0.2, seed=6)[0], TrainConfig())
    eng_tree = build(sample_blackbox(eng_bb, "uniform-in-bounds", 50_000, seed=1)
                     .split(0.2, seed=2)[0], TrainConfig())

    circle = unit_circle_constraint()
    raw_weights = CfeWeights(lambda_feas=args.penalty)
    rng = np.random.default_rng(args.seed)
    states = [PendulumState(rng.uniform(-np.pi, np.pi), rng.uniform(-8, 8))
              for _ in range(args.queries)]

    stats = {"raw": [0, 0], "engineered": [0, 0]}  # [counterfactuals, infeasible]
    worst = 0.0
    for state in states:
        res = explain(raw_tree, raw_bb,
                      CfeQuery(x=to_raw(state).as_vector(), weights=raw_weights,
                               constraints=[circle]))
        for cf in res.counterfactuals:
            stats["raw"][0] += 1
            stats["raw"][1] += not cf.feasible
            worst = max(worst, abs(cf.residuals["unit_circle"]))

        res = explain(eng_tree, eng_bb, CfeQuery(x=np.array([state.theta, state.theta_dot])))
        for cf in res.counterfactuals:
            stats["engineered"][0] += 1
            raw_obs = to_raw(PendulumState(cf.x_prime[0], cf.x_prime[1]))
            residual = abs(raw_obs.x ** 2 + raw_obs.y ** 2 - 1.0)
            stats["engineered"][1] += residual > circle.tol_feas

    for mode, (total, bad) in stats.items():
        print(f"{mode:>12}: {total} counterfactuals, {bad} infeasible")
    print(f"worst raw circle residual: {worst:.3f}")


if __name__ == "__main__":
    main()
