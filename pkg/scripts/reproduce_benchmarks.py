#!/usr/bin/env python3
"""Build both reference surrogates and time 250 explanations on each.

Prints a two-row latency table (pendulum and the synthetic docking stand-in)
plus the tree sizes and held-out fidelity, end to end from scratch.
"""

import argparse
import time

from lmtcf.blackbox import EngineeredPendulumPolicy, synthetic_docking_predictor
from lmtcf.builder import build, fidelity, sample_blackbox
from lmtcf.cli import run_bench
from lmtcf.config import RunConfig, default_train_config


def benchmark(env_name, predictor, train_config, states, seed):
    t0 = time.perf_counter()
    dataset = sample_blackbox(predictor, "uniform-in-bounds", 50_000, seed=seed)
    train, heldout = dataset.split(0.2, seed=seed + 1)
    tree = build(train, train_config)
    report = fidelity(tree, heldout, 0.2)
    build_s = time.perf_counter() - t0
    config = RunConfig.from_dict({"environment": env_name, "seed": seed + 2})
    bench = run_bench(tree, predictor, config, states=states)
    return tree, report, bench, build_s


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--states", type=int, default=250)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    rows = []
    for env, predictor in (
        ("pendulum-engineered", EngineeredPendulumPolicy()),
        ("synthetic-docking", synthetic_docking_predictor(42)),
    ):
        tree, report, bench, build_s = benchmark(
            env, predictor, default_train_config(env), args.states, args.seed)
        rows.append((env, tree.n_leaves, min(report.r2), bench))
        print(f"[{env}] {tree.n_leaves} leaves, min R^2 {min(report.r2):.3f}, "
              f"built in {build_s:.1f} s")

    print(f"\n{'application':<22} {'leaves':>7} {'mean':>9} {'median':>9} {'p95':>9}")
    for env, leaves, _, bench in rows:
        print(f"{env:<22} {leaves:>7} {bench['mean_ms']:>7.1f}ms "
              f"{bench['median_ms']:>7.1f}ms {bench['p95_ms']:>7.1f}ms")


if __name__ == "__main__":
    main()
