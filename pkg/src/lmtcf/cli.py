"""Command-line workflow: sample -> train -> explain / bench / serve.

Exit codes: 0 ok, 2 usage or input error, 3 quality gate failed,
4 environment failure (e.g. busy port).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import builder, engine
from .config import (
    ENVIRONMENTS,
    RunConfig,
    default_sampler,
    make_predictor,
    resolve_constraints,
)
from .tree import LinearModelTree, TreeSchemaError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GATE = 3
EXIT_ENV = 4


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    if args.env:
        config.environment = args.env
    if args.seed is not None:
        config.seed = args.seed
    return config


def _parse_vector(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ValueError(f"cannot parse {what} {text!r}: {exc}") from exc


def _make_query(config: RunConfig, tree: LinearModelTree, x, target=None,
                num: int | None = None) -> engine.CfeQuery:
    ec = config.engine
    return engine.CfeQuery(
        x=x, target=target,
        num_explanations=num or ec.num_explanations,
        max_leaves=min(ec.max_leaves, tree.n_leaves),
        weights=ec.weights,
        constraints=resolve_constraints(config),
        eps_y=ec.eps_y, eps_target=ec.eps_target,
    )


def cmd_sample(config: RunConfig, count: int, out: str) -> int:
    if count < 1:
        print("error: count must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    predictor = make_predictor(config.environment, config.seed, config.mlp_path)
    sampler = config.sampler or default_sampler(config.environment)
    if sampler == "trajectory-rollout":
        space = "engineered" if config.environment == "pendulum-engineered" else "raw"
        sampler = builder.TrajectorySampler(space=space)
    dataset = builder.sample_blackbox(predictor, sampler, count, seed=config.seed)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    dataset.save(out)
    print(f"wrote {len(dataset)} rows to {out}")
    return EXIT_OK


def cmd_train(config: RunConfig, dataset_path: str, out: str,
              report_path: str | None = None, force: bool = False) -> int:
    predictor = make_predictor(config.environment, config.seed, config.mlp_path)
    try:
        dataset = builder.Dataset.load(config.require_file(dataset_path, "dataset"),
                                       input_dim=predictor.input_dim)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: cannot read dataset: {exc}", file=sys.stderr)
        return EXIT_INPUT
    train, heldout = dataset.split(config.heldout_fraction, seed=config.seed)
    tree = builder.build(train, config.train_config())
    report = builder.fidelity(tree, heldout, config.heldout_fraction)
    print(json.dumps(report.to_json(), indent=2))
    if min(report.r2) < config.r2_gate and not force:
        print(f"error: held-out R^2 {min(report.r2):.4f} below gate {config.r2_gate}; "
              "tree not written (use --force to override)", file=sys.stderr)
        return EXIT_GATE
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    tree.save(out)
    print(f"wrote tree with {tree.n_leaves} leaves to {out}")
    if report_path:
        with open(report_path, "w") as fh:
            json.dump(report.to_json(), fh, indent=2)
    return EXIT_OK


def _delta_table(result: engine.ExplainResult, tree: LinearModelTree) -> str:
    lines = []
    for rank, cf in enumerate(result.counterfactuals):
        lines.append(f"counterfactual #{rank + 1}  (leaf {cf.leaf_id}, "
                     f"objective {cf.objective_value:.4g}, valid={cf.valid}, "
                     f"feasible={cf.feasible})")
        lines.append(f"  {'feature':>14} {'factual':>12} {'counterfactual':>15} {'delta':>12}")
        for j, name in enumerate(tree.feature_names):
            lines.append(f"  {name:>14} {result.query_x[j]:>12.5g} "
                         f"{cf.x_prime[j]:>15.5g} {cf.delta_x[j]:>12.5g}")
        for k, name in enumerate(tree.output_names):
            lines.append(f"  {name:>14} {result.query_y[k]:>12.5g} "
                         f"{cf.y_prime[k]:>15.5g} {cf.delta_y[k]:>12.5g}")
        if cf.warnings:
            lines.append(f"  warnings: {', '.join(cf.warnings)}")
    if not result.counterfactuals:
        lines.append(f"no counterfactuals: {result.diagnostic}")
    return "\n".join(lines)


def cmd_explain(config: RunConfig, x_text: str, target_text: str | None = None,
                num: int | None = None, tree_path: str | None = None) -> int:
    tree_path = tree_path or config.tree_path
    try:
        tree = LinearModelTree.load(config.require_file(tree_path, "tree file"))
        predictor = make_predictor(config.environment, config.seed, config.mlp_path)
        x = _parse_vector(x_text, "--x")
        target = _parse_vector(target_text, "--target") if target_text else None
        query = _make_query(config, tree, x, target, num)
        if target is not None:
            result = engine.explain_targeted(tree, predictor, query,
                                             solver=config.engine.solver)
        else:
            result = engine.explain(tree, predictor, query, solver=config.engine.solver)
    except (ValueError, TreeSchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(_delta_table(result, tree), file=sys.stderr)
    print(json.dumps(result.to_json(), indent=2))
    return EXIT_OK


def run_bench(tree: LinearModelTree, predictor, config: RunConfig,
              states: int) -> dict:
    """Time explain over random in-bounds states; loading stays outside the clock."""
    rng = np.random.default_rng(config.seed)
    lo, hi = tree.input_bounds[:, 0], tree.input_bounds[:, 1]
    times_ms = []
    leaves = []
    n_valid = 0
    for _ in range(states):
        x = rng.uniform(lo, hi)
        query = _make_query(config, tree, x)
        t0 = time.perf_counter()
        result = engine.explain(tree, predictor, query, solver=config.engine.solver)
        times_ms.append((time.perf_counter() - t0) * 1e3)
        leaves.append(result.leaves_examined)
        n_valid += bool(result.counterfactuals)
    times = np.array(times_ms)
    return {
        "environment": config.environment,
        "states": states,
        "leaf_count": tree.n_leaves,
        "mean_ms": float(times.mean()),
        "median_ms": float(np.median(times)),
        "p95_ms": float(np.percentile(times, 95)),
        "max_ms": float(times.max()),
        "mean_leaves_examined": float(np.mean(leaves)),
        "queries_with_valid_cfe": n_valid,
    }


def cmd_bench(config: RunConfig, states: int, tree_path: str | None = None) -> int:
    if states < 1:
        print("error: states must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        tree = LinearModelTree.load(
            config.require_file(tree_path or config.tree_path, "tree file"))
        predictor = make_predictor(config.environment, config.seed, config.mlp_path)
    except (TreeSchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(run_bench(tree, predictor, config, states), indent=2))
    return EXIT_OK


def cmd_serve(config: RunConfig, port: int | None = None) -> int:
    import uvicorn

    from .service import build_state, create_app

    try:
        app = create_app(build_state(config))
    except (TreeSchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        uvicorn.run(app, host="127.0.0.1", port=port or config.port, log_level="warning")
    except OSError as exc:
        print(f"error: cannot bind port: {exc}", file=sys.stderr)
        return EXIT_ENV
    except SystemExit:  # uvicorn exits itself on startup failure (busy port)
        print("error: service failed to start (port busy?)", file=sys.stderr)
        return EXIT_ENV
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmtcf",
                                     description="counterfactual explanations from LMT surrogates")
    parser.add_argument("--config", help="path to a JSON run configuration")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--env", choices=ENVIRONMENTS, default=None,
                        help="override the configured environment")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample the black box into a dataset file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="build a surrogate tree and report fidelity")
    p.add_argument("--dataset", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--force", action="store_true",
                   help="write the tree even below the fidelity gate")

    p = sub.add_parser("explain", help="explain one state")
    p.add_argument("--x", required=True, help="comma-separated state vector")
    p.add_argument("--target", default=None, help="comma-separated target output")
    p.add_argument("--num", type=int, default=None)
    p.add_argument("--tree", default=None)

    p = sub.add_parser("bench", help="time explanations over random states")
    p.add_argument("--states", type=int, default=250)
    p.add_argument("--tree", default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "sample":
        return cmd_sample(config, args.count, args.out)
    if args.command == "train":
        return cmd_train(config, args.dataset or config.dataset_path, args.out,
                         args.report, args.force)
    if args.command == "explain":
        return cmd_explain(config, args.x, args.target, args.num, args.tree)
    if args.command == "bench":
        return cmd_bench(config, args.states, args.tree)
    if args.command == "serve":
        return cmd_serve(config, args.port)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
