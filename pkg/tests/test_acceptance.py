"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they print.
"""

import contextlib
import sys
import time

import numpy as np

from lmtcf.builder import fidelity
from lmtcf.cli import main, run_bench
from lmtcf.config import RunConfig
from lmtcf.engine import (
    CfeQuery,
    CfeWeights,
    explain,
    explain_targeted,
    snap_tolerances,
    unit_circle_constraint,
)
from lmtcf.ordering import order_leaves
from lmtcf.pendulum import PendulumState, to_raw

from conftest import TreeBlackBox, make_random_tree
from test_ordering import graph_distance_oracle


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", flush=True)


def test_latency_pendulum(pendulum_tree, pendulum_policy):
    """Mean explanation time on a ~220-leaf pendulum tree stays under 0.25 s."""
    with criterion("latency-pendulum"):
        assert 180 <= pendulum_tree.n_leaves <= 260
        config = RunConfig.from_dict({"environment": "pendulum-engineered", "seed": 123})
        t0 = time.perf_counter()
        report = run_bench(pendulum_tree, pendulum_policy, config, states=250)
        total = time.perf_counter() - t0
        print(f"  pendulum bench: mean {report['mean_ms']:.1f} ms over 250 states, "
              f"total {total:.1f} s", file=sys.stderr)
        assert report["mean_ms"] <= 250.0
        assert total <= 120.0


def test_latency_docking(docking_tree, docking_blackbox):
    """Mean explanation time on a ~312-leaf 8-in/5-out tree stays under 0.10 s."""
    with criterion("latency-docking"):
        assert 250 <= docking_tree.n_leaves <= 400
        config = RunConfig.from_dict({"environment": "synthetic-docking", "seed": 321})
        report = run_bench(docking_tree, docking_blackbox, config, states=250)
        print(f"  docking bench: mean {report['mean_ms']:.1f} ms over 250 states",
              file=sys.stderr)
        assert report["mean_ms"] <= 100.0


def test_feasibility_reproduction(pendulum_tree, pendulum_policy,
                                  raw_pendulum_tree, raw_pendulum_policy):
    """Engineered-coordinate answers are always physically realizable; the raw
    tree without a constraint penalty produces infeasible ones."""
    with criterion("feasibility-reproduction"):
        rng = np.random.default_rng(2024)
        lo, hi = pendulum_tree.input_bounds[:, 0], pendulum_tree.input_bounds[:, 1]
        n_returned = 0
        for _ in range(250):
            x = rng.uniform(lo, hi)
            res = explain(pendulum_tree, pendulum_policy, CfeQuery(x=x))
            for cf in res.counterfactuals:
                raw = to_raw(PendulumState(cf.x_prime[0], cf.x_prime[1]))
                assert abs(raw.x ** 2 + raw.y ** 2 - 1.0) <= 1e-9
                n_returned += 1
        assert n_returned >= 250  # every query produced at least one answer

        circle = unit_circle_constraint()
        weights = CfeWeights(lambda_feas=0.0)
        rng = np.random.default_rng(99)
        infeasible_seen = 0
        for _ in range(250):
            state = PendulumState(rng.uniform(-np.pi, np.pi), rng.uniform(-8, 8))
            x = to_raw(state).as_vector()
            res = explain(raw_pendulum_tree, raw_pendulum_policy,
                          CfeQuery(x=x, weights=weights, constraints=[circle]))
            infeasible_seen += sum(not cf.feasible for cf in res.counterfactuals)
        print(f"  raw-tree infeasible candidates: {infeasible_seen}", file=sys.stderr)
        assert infeasible_seen >= 1


def _grid(tree, grid_n=200):
    axes = [np.linspace(lo, hi, grid_n) for lo, hi in tree.input_bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([g.ravel() for g in mesh], axis=1)
    F = tree.predict_batch(P)
    ok = np.all((F >= tree.output_bounds[:, 0]) & (F <= tree.output_bounds[:, 1]), axis=1)
    return P, F, ok


def test_oracle_equivalence():
    """On ten small 2-D trees the engine matches a 200x200 exhaustive search."""
    with criterion("oracle-equivalence"):
        eps_target = 0.3
        for seed in range(10):
            rng = np.random.default_rng(seed)
            n_leaves = int(rng.integers(2, 9))
            tree = make_random_tree(rng, n_leaves=n_leaves, m=2, n=1,
                                    output_bounds=[[-8.0, 8.0]])
            bb = TreeBlackBox(tree)
            x = rng.uniform(-1, 1, size=2)
            y = bb.predict(x)
            tau_in, tau_out = snap_tolerances(tree)
            P, F, ok = _grid(tree)

            w = CfeWeights()
            z = (w.lambda_in * np.abs(P - x).sum(axis=1)
                 - w.lambda_out * ((y - F) ** 2).sum(axis=1)
                 + w.lambda_sparse_in * (np.abs(P - x) > tau_in).sum(axis=1)
                 + w.lambda_sparse_out * (np.abs(y - F) > tau_out).sum(axis=1))
            grid_best = float(np.min(np.where(ok, z, np.inf)))
            res = explain(tree, bb, CfeQuery(x=x, y=y, weights=w,
                                             num_explanations=n_leaves,
                                             max_leaves=n_leaves, eps_y=0.0))
            assert res.counterfactuals
            assert res.counterfactuals[0].objective_value <= grid_best + 1e-2

            x_star = rng.uniform(-1, 1, size=2)
            target = bb.predict(x_star)
            qt = CfeQuery(x=x, y=y, target=target, weights=CfeWeights(lambda_out=50.0),
                          num_explanations=n_leaves, max_leaves=n_leaves,
                          eps_target=eps_target)
            rt = explain_targeted(tree, bb, qt)
            assert rt.counterfactuals
            best_match = F[np.argmin(np.where(ok, np.abs(F - target).max(axis=1), np.inf))]
            got = rt.counterfactuals[0].y_prime
            assert float(np.abs(got - best_match).max()) <= eps_target


def test_truthfulness_invariant(pendulum_tree, pendulum_policy,
                                docking_tree, docking_blackbox):
    """Every reported counterfactual output is the black box's own answer, bit for bit."""
    with criterion("truthfulness"):
        checked = 0
        rng = np.random.default_rng(7)
        for tree, bb, n_queries in ((pendulum_tree, pendulum_policy, 25),
                                    (docking_tree, docking_blackbox, 15)):
            lo, hi = tree.input_bounds[:, 0], tree.input_bounds[:, 1]
            for _ in range(n_queries):
                x = rng.uniform(lo, hi)
                res = explain(tree, bb, CfeQuery(x=x, num_explanations=2))
                target = tree.output_bounds.mean(axis=1)
                res_t = explain_targeted(tree, bb, CfeQuery(x=x, target=target))
                for cf in res.counterfactuals + res_t.counterfactuals:
                    assert np.array_equal(cf.y_prime, np.asarray(bb.predict(cf.x_prime)))
                    checked += 1
        print(f"  truthfulness re-checked on {checked} counterfactuals", file=sys.stderr)
        assert checked >= 80


def test_leaf_ordering_correctness_and_scaling():
    """Structural distances match a graph oracle; runtime grows linearly."""
    with criterion("leaf-ordering"):
        rng = np.random.default_rng(404)
        for _ in range(100):
            m = int(rng.integers(1, 5))
            tree = make_random_tree(rng, n_leaves=int(rng.integers(2, 513)), m=m)
            x = rng.uniform(-1, 1, size=m)
            order = order_leaves(tree, x)
            oracle = graph_distance_oracle(tree, order.origin_leaf)
            assert [oracle[l] for l in order.ordered] == order.distances
            assert sorted(order.ordered) == sorted(tree.leaf_ids)

        sizes = [2 ** k for k in range(5, 13)]
        trees = [make_random_tree(np.random.default_rng(size), n_leaves=size, m=3)
                 for size in sizes]
        node_counts = [len(tree.nodes) for tree in trees]
        # wall-clock on a shared box is noisy; one remeasure is allowed, a
        # superlinear algorithm would fail both
        r2 = max(_ordering_fit_r2(trees, node_counts) for _ in range(2))
        print(f"  ordering linear fit R^2 = {r2:.4f} over sizes {sizes}", file=sys.stderr)
        assert r2 >= 0.98


def _ordering_fit_r2(trees, node_counts) -> float:
    times = _per_call_seconds(
        [(lambda tree=tree: order_leaves(tree, np.zeros(3))) for tree in trees],
        node_counts,
    )
    n = np.array(node_counts, dtype=float)
    t = np.array(times)
    slope, intercept = np.polyfit(n, t, 1)
    predicted = slope * n + intercept
    ss_res = float(np.sum((t - predicted) ** 2))
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    return 1.0 - ss_res / ss_tot


def _per_call_seconds(fns, node_counts, repeats: int = 9) -> list[float]:
    """Batched best-of timing, GC off, repeats interleaved round-robin.

    Batch sizes are calibrated so every batch lasts about equally long, which
    keeps scheduler preemption from inflating the small subjects relative to
    the large ones; taking the minimum over interleaved rounds then drops
    transient load.
    """
    import gc

    # calibration round: one timed call per subject
    per_call = []
    for fn in fns:
        t0 = time.perf_counter()
        fn()
        per_call.append(max(time.perf_counter() - t0, 1e-7))
    target_batch_s = 4e-3
    calls_per_fn = [max(3, int(target_batch_s / pc)) for pc in per_call]

    best = [float("inf")] * len(fns)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            for i, (fn, calls) in enumerate(zip(fns, calls_per_fn)):
                t0 = time.perf_counter()
                for _ in range(calls):
                    fn()
                best[i] = min(best[i], (time.perf_counter() - t0) / calls)
    finally:
        if gc_was_enabled:
            gc.enable()
    return best


def test_surrogate_fidelity_gate(pendulum_tree, pendulum_heldout, tmp_path, capsys):
    """Default-config pendulum surrogate clears R^2 >= 0.9; the trainer refuses
    to ship a tree that does not."""
    with criterion("fidelity-gate"):
        report = fidelity(pendulum_tree, pendulum_heldout, 0.2)
        print(f"  pendulum held-out R^2 = {report.r2}", file=sys.stderr)
        assert min(report.r2) >= 0.9

        data = tmp_path / "small.json"
        tree_out = tmp_path / "tree.json"
        assert main(["--seed", "11", "--env", "pendulum-engineered",
                     "sample", "--count", "2000", "--out", str(data)]) == 0
        rc = main(["--seed", "11", "--env", "pendulum-engineered", "train",
                   "--dataset", str(data), "--out", str(tree_out)])
        capsys.readouterr()
        assert rc == 3
        assert not tree_out.exists()
