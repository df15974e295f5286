"""Shared fixtures: reference trees, black boxes, and test-only tree factories."""

from __future__ import annotations

import numpy as np
import pytest

from lmtcf.blackbox import EngineeredPendulumPolicy, RawPendulumPolicy, synthetic_docking_predictor
from lmtcf.builder import TrainConfig, build, sample_blackbox
from lmtcf.tree import Branch, Leaf, LinearModelTree


def make_random_tree(rng: np.random.Generator, n_leaves: int, m: int = 2, n: int = 1,
                     lo: float = -1.0, hi: float = 1.0,
                     output_bounds=None) -> LinearModelTree:
    """Random tree with guaranteed-consistent thresholds (split inside each box)."""
    nodes: list[Branch | Leaf] = []
    ordinal = 0

    def grow(box: np.ndarray, leaves: int) -> int:
        nonlocal ordinal
        if leaves == 1:
            nodes.append(Leaf(weights=rng.uniform(-2, 2, size=(n, m)),
                              bias=rng.uniform(-1, 1, size=n), leaf_ordinal=ordinal))
            ordinal += 1
            return len(nodes) - 1
        j = int(rng.integers(m))
        frac = rng.uniform(0.3, 0.7)
        t = box[j, 0] + frac * (box[j, 1] - box[j, 0])
        nodes.append(None)  # type: ignore[arg-type]
        my_id = len(nodes) - 1
        n_left = int(rng.integers(1, leaves))
        left_box, right_box = box.copy(), box.copy()
        left_box[j, 1] = t
        right_box[j, 0] = t
        left = grow(left_box, n_left)
        right = grow(right_box, leaves - n_left)
        nodes[my_id] = Branch(feature=j, threshold=float(t), left=left, right=right)
        return my_id

    box = np.tile([lo, hi], (m, 1)).astype(float)
    root = grow(box.copy(), n_leaves)
    if output_bounds is None:
        output_bounds = np.tile([-50.0, 50.0], (n, 1))
    return LinearModelTree(
        nodes=nodes, root_id=root, input_bounds=box,
        output_bounds=np.asarray(output_bounds, dtype=float),
        feature_names=[f"x{j}" for j in range(m)],
        output_names=[f"y{k}" for k in range(n)],
    )


class TreeBlackBox:
    """Wraps a tree as the black box itself: a perfectly faithful surrogate."""

    def __init__(self, tree: LinearModelTree):
        self.tree = tree
        self.input_dim = tree.input_dim
        self.output_dim = tree.output_dim
        self.input_bounds = tree.input_bounds
        self.output_bounds = tree.output_bounds

    def predict(self, x):
        return self.tree.predict(x)

    def predict_batch(self, X):
        return self.tree.predict_batch(X)


@pytest.fixture(scope="session")
def pendulum_policy():
    return EngineeredPendulumPolicy()


@pytest.fixture(scope="session")
def raw_pendulum_policy():
    return RawPendulumPolicy()


@pytest.fixture(scope="session")
def pendulum_dataset(pendulum_policy):
    return sample_blackbox(pendulum_policy, "uniform-in-bounds", 50_000, seed=1)


@pytest.fixture(scope="session")
def pendulum_tree(pendulum_dataset):
    """Engineered (theta, theta_dot) surrogate built with the default config."""
    train, _ = pendulum_dataset.split(0.2, seed=2)
    return build(train, TrainConfig())


@pytest.fixture(scope="session")
def pendulum_heldout(pendulum_dataset):
    _, held = pendulum_dataset.split(0.2, seed=2)
    return held


@pytest.fixture(scope="session")
def raw_pendulum_tree(raw_pendulum_policy):
    ds = sample_blackbox(raw_pendulum_policy, "uniform-in-bounds", 50_000, seed=5)
    train, _ = ds.split(0.2, seed=6)
    return build(train, TrainConfig())


@pytest.fixture(scope="session")
def docking_blackbox():
    return synthetic_docking_predictor(42)


@pytest.fixture(scope="session")
def docking_tree(docking_blackbox):
    ds = sample_blackbox(docking_blackbox, "uniform-in-bounds", 50_000, seed=3)
    train, _ = ds.split(0.2, seed=4)
    return build(train, TrainConfig(min_samples_leaf=96))
