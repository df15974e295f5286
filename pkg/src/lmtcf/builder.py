"""Greedy training of linear model tree surrogates from black-box samples.

Growth is CART-style: each node carries an affine least-squares fit of its
samples, candidate splits are scanned at per-feature sample quantiles, and
the split minimizing the children's total squared error wins.  Split scoring
runs on chunked normal equations so a full scan costs one pass over the
node's rows per feature.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import pendulum as pend
from .blackbox import BlackBoxPredictor
from .tree import Branch, Leaf, LinearModelTree

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    max_depth: int = 14
    min_samples_leaf: int = 48
    candidate_quantiles: int = 15
    min_sse_improvement: float = 1e-3  # relative to the node's own SSE
    seed: int = 0

    def validate(self, input_dim: int) -> None:
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_leaf < 2 * (input_dim + 1):
            raise ValueError(
                f"min_samples_leaf must be >= 2*(m+1) = {2 * (input_dim + 1)} "
                "so leaf least-squares stays determined"
            )
        if self.candidate_quantiles < 1:
            raise ValueError("candidate_quantiles must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        return cls(**{k: doc[k] for k in doc})


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    provenance: str = ""
    feature_names: list[str] | None = None
    output_names: list[str] | None = None
    input_bounds: np.ndarray | None = None
    output_bounds: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.X.ndim != 2 or self.Y.ndim != 2 or len(self.X) != len(self.Y):
            raise ValueError("X and Y must be 2-D with matching row counts")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise ValueError("dataset contains non-finite entries")
        if self.input_bounds is not None:
            self.input_bounds = np.asarray(self.input_bounds, dtype=float)
            if np.any(self.X < self.input_bounds[:, 0]) or np.any(self.X > self.input_bounds[:, 1]):
                raise ValueError("X columns violate the declared input bounds")
        if self.output_bounds is not None:
            self.output_bounds = np.asarray(self.output_bounds, dtype=float)
            if np.any(self.Y < self.output_bounds[:, 0]) or np.any(self.Y > self.output_bounds[:, 1]):
                raise ValueError("Y columns violate the declared output bounds")

    def __len__(self) -> int:
        return len(self.X)

    @property
    def input_dim(self) -> int:
        return self.X.shape[1]

    @property
    def output_dim(self) -> int:
        return self.Y.shape[1]

    def split(self, heldout_fraction: float, seed: int = 0) -> tuple["Dataset", "Dataset"]:
        """Random row split into (train, heldout)."""
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(self))
        n_held = int(round(len(self) * heldout_fraction))
        held, train = perm[:n_held], perm[n_held:]
        mk = lambda idx, tag: Dataset(
            self.X[idx], self.Y[idx], provenance=f"{self.provenance} [{tag}]",
            feature_names=self.feature_names, output_names=self.output_names,
            input_bounds=self.input_bounds, output_bounds=self.output_bounds)
        return mk(train, "train"), mk(held, "heldout")

    # -- file formats ---------------------------------------------------

    def to_json(self) -> dict:
        meta = {"provenance": self.provenance}
        if self.feature_names:
            meta["feature_names"] = list(self.feature_names)
        if self.output_names:
            meta["output_names"] = list(self.output_names)
        if self.input_bounds is not None:
            meta["input_bounds"] = self.input_bounds.tolist()
        if self.output_bounds is not None:
            meta["output_bounds"] = self.output_bounds.tolist()
        return {"X": self.X.tolist(), "Y": self.Y.tolist(), "meta": meta}

    @classmethod
    def from_json(cls, doc: dict) -> "Dataset":
        meta = doc.get("meta", {})
        bounds = lambda key: np.asarray(meta[key], dtype=float) if key in meta else None
        return cls(X=doc["X"], Y=doc["Y"], provenance=meta.get("provenance", ""),
                   feature_names=meta.get("feature_names"),
                   output_names=meta.get("output_names"),
                   input_bounds=bounds("input_bounds"), output_bounds=bounds("output_bounds"))

    def save(self, path) -> None:
        path = str(path)
        if path.endswith(".csv"):
            names = (self.feature_names or [f"x{j}" for j in range(self.input_dim)]) \
                + (self.output_names or [f"y{k}" for k in range(self.output_dim)])
            with open(path, "w") as fh:
                fh.write(",".join(names) + "\n")
                for xr, yr in zip(self.X, self.Y):
                    fh.write(",".join(repr(float(v)) for v in (*xr, *yr)) + "\n")
        else:
            with open(path, "w") as fh:
                json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path, input_dim: int | None = None) -> "Dataset":
        """Read a JSON envelope, or a CSV whose first input_dim columns are features."""
        path = str(path)
        if path.endswith(".csv"):
            if input_dim is None:
                raise ValueError("loading CSV requires input_dim to split the columns")
            with open(path) as fh:
                header = fh.readline().strip().split(",")
                rows = np.loadtxt(fh, delimiter=",", ndmin=2)
            return cls(X=rows[:, :input_dim], Y=rows[:, input_dim:],
                       provenance=f"csv:{path}",
                       feature_names=header[:input_dim], output_names=header[input_dim:])
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass
class FidelityReport:
    r2: list[float]           # per output
    rmse: list[float]         # per output
    leaf_count: int
    depth: int
    heldout_fraction: float
    output_names: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "r2": self.r2, "rmse": self.rmse, "leaf_count": self.leaf_count,
            "depth": self.depth, "heldout_fraction": self.heldout_fraction,
            "output_names": self.output_names,
        }


# ---------------------------------------------------------------------------
# Sampling

class UniformSampler:
    """Independent uniform draws inside the predictor's input box."""

    name = "uniform-in-bounds"

    def draw(self, predictor: BlackBoxPredictor, count: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = predictor.input_bounds[:, 0], predictor.input_bounds[:, 1]
        return rng.uniform(lo, hi, size=(count, predictor.input_dim))


class TrajectorySampler:
    """Closed-loop pendulum rollouts driven by the predictor under test.

    `space` picks whether rows are raw (x, y, theta_dot) observations or
    engineered (theta, theta_dot) states.  Rollouts start from uniformly
    random states; each contributes `steps` rows.
    """

    name = "trajectory-rollout"

    def __init__(self, space: str = "raw", steps: int = 200):
        if space not in ("raw", "engineered"):
            raise ValueError("space must be 'raw' or 'engineered'")
        self.space = space
        self.steps = steps

    def draw(self, predictor: BlackBoxPredictor, count: int, rng: np.random.Generator) -> np.ndarray:
        rows = []
        while len(rows) < count:
            init = pend.PendulumState(
                theta=rng.uniform(-np.pi, np.pi),
                theta_dot=rng.uniform(-pend.MAX_SPEED, pend.MAX_SPEED),
            )
            traj = pend.rollout(self._as_policy(predictor), init, self.steps)
            for state in traj.states[:-1]:  # the final state has no applied action
                if self.space == "raw":
                    rows.append(pend.to_raw(state).as_vector())
                else:
                    rows.append(np.array([state.theta, state.theta_dot]))
        return np.array(rows[:count])

    @staticmethod
    def _as_policy(predictor: BlackBoxPredictor):
        if predictor.input_dim == 3:
            return lambda obs: float(predictor.predict(obs)[0])
        return lambda obs: float(predictor.predict(
            np.array([pend.from_raw(obs).theta, pend.from_raw(obs).theta_dot]))[0])


def sample_blackbox(predictor: BlackBoxPredictor, sampler, count: int,
                    seed: int = 0) -> Dataset:
    """Draw `count` states per the sampler and label them with the black box."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if sampler == "uniform-in-bounds":
        sampler = UniformSampler()
    elif sampler == "trajectory-rollout":
        space = "engineered" if predictor.input_dim == 2 else "raw"
        sampler = TrajectorySampler(space=space)
    rng = np.random.default_rng(seed)
    X = sampler.draw(predictor, count, rng)
    try:
        Y = predictor.predict_batch(X)
    except Exception:
        # re-run row-wise to attribute the failure
        for i, row in enumerate(X):
            try:
                predictor.predict(row)
            except Exception as exc:
                raise RuntimeError(f"predictor failed at sample {i}: {exc}") from exc
        raise
    names = getattr(predictor, "feature_names", None), getattr(predictor, "output_names", None)
    return Dataset(
        X=X, Y=Y,
        provenance=f"sampled n={count} sampler={sampler.name} seed={seed} "
                   f"black_box={type(predictor).__name__}",
        feature_names=names[0], output_names=names[1],
        input_bounds=predictor.input_bounds, output_bounds=predictor.output_bounds,
    )


# ---------------------------------------------------------------------------
# Tree growth

def _ridge_lambda(G: np.ndarray, m: int) -> float:
    # G is [X 1]^T [X 1]; the X block trace sits in the first m diagonal entries
    return 1e-6 * float(np.trace(G[:m, :m])) / m


def _solve_normal(G: np.ndarray, b: np.ndarray, m: int):
    """Solve G theta = b, falling back to a ridge-regularized system."""
    try:
        theta = np.linalg.solve(G, b)
        if np.all(np.isfinite(theta)):
            return theta, False
    except np.linalg.LinAlgError:
        pass
    lam = _ridge_lambda(G, m)
    reg = G.copy()
    reg[np.arange(m), np.arange(m)] += max(lam, 1e-12)
    theta = np.linalg.solve(reg, b)
    return theta, True


def _fit_leaf(A: np.ndarray, Y: np.ndarray, m: int):
    """Affine least squares via lstsq; ridge fallback when rank-deficient."""
    theta, _, rank, _ = np.linalg.lstsq(A, Y, rcond=None)
    used_ridge = False
    if rank < A.shape[1]:
        G = A.T @ A
        theta, used_ridge = _solve_normal(G, A.T @ Y, m)
        used_ridge = True
        log.warning("rank-deficient leaf design matrix (%d rows); ridge fit used", len(A))
    sse = float(np.sum((A @ theta - Y) ** 2))
    return theta, sse, used_ridge


def _best_split(A, Y, yy_total, config: TrainConfig, m: int):
    """Scan quantile candidates on every feature; return the SSE-minimizing split.

    Left/right normal equations come from prefix sums over inter-threshold
    chunks, so each feature costs one sort plus one pass of small matmuls.
    """
    N = len(A)
    G_total = A.T @ A
    b_total = A.T @ Y
    qs = np.arange(1, config.candidate_quantiles + 1) / (config.candidate_quantiles + 1)
    best = None  # (sse, feature, threshold)
    for j in range(m):
        xj = A[:, j]
        order = np.argsort(xj, kind="stable")
        xs = xj[order]
        if xs[0] == xs[-1]:
            continue
        ts = np.unique(np.quantile(xs, qs))
        cuts = np.searchsorted(xs, ts, side="right")
        valid = (cuts >= config.min_samples_leaf) & (cuts <= N - config.min_samples_leaf)
        ts, cuts = ts[valid], cuts[valid]
        if len(ts) == 0:
            continue
        uniq_cuts, first_idx = np.unique(cuts, return_index=True)
        ts, cuts = ts[first_idx], uniq_cuts

        As, Ys = A[order], Y[order]
        edges = np.concatenate([[0], cuts, [N]])
        G_run = np.zeros_like(G_total)
        b_run = np.zeros_like(b_total)
        yy_run = 0.0
        for k in range(len(cuts)):
            chunk = slice(edges[k], edges[k + 1])
            Ac, Yc = As[chunk], Ys[chunk]
            G_run = G_run + Ac.T @ Ac
            b_run = b_run + Ac.T @ Yc
            yy_run = yy_run + float(np.sum(Yc ** 2))
            theta_l, _ = _solve_normal(G_run, b_run, m)
            sse_l = max(yy_run - float(np.sum(theta_l * b_run)), 0.0)
            G_r, b_r, yy_r = G_total - G_run, b_total - b_run, yy_total - yy_run
            theta_r, _ = _solve_normal(G_r, b_r, m)
            sse_r = max(yy_r - float(np.sum(theta_r * b_r)), 0.0)
            total = sse_l + sse_r
            if best is None or total < best[0]:
                best = (total, j, float(ts[k]))
    return best


def build(dataset: Dataset, config: TrainConfig) -> LinearModelTree:
    """Grow an LMT for the dataset; deterministic for a fixed dataset + config."""
    config.validate(dataset.input_dim)
    if len(dataset) < config.min_samples_leaf:
        raise ValueError("dataset smaller than min_samples_leaf")
    m, n = dataset.input_dim, dataset.output_dim
    X, Y = dataset.X, dataset.Y
    A = np.hstack([X, np.ones((len(X), 1))])

    input_bounds = dataset.input_bounds
    if input_bounds is None:
        input_bounds = np.stack([X.min(axis=0), X.max(axis=0)], axis=1)
    output_bounds = dataset.output_bounds
    if output_bounds is None:
        output_bounds = np.stack([Y.min(axis=0), Y.max(axis=0)], axis=1)

    nodes: list[Branch | Leaf] = []
    ordinal = 0

    def grow(idx: np.ndarray, depth: int) -> int:
        nonlocal ordinal
        A_n, Y_n = A[idx], Y[idx]
        theta, sse, _ = _fit_leaf(A_n, Y_n, m)
        split = None
        if depth < config.max_depth and len(idx) >= 2 * config.min_samples_leaf \
                and sse > 1e-12 * max(1.0, float(np.sum(Y_n ** 2))):
            split = _best_split(A_n, Y_n, float(np.sum(Y_n ** 2)), config, m)
            if split is not None and (sse - split[0]) < config.min_sse_improvement * sse:
                split = None
        if split is None:
            nodes.append(Leaf(weights=theta[:m].T.copy(), bias=theta[m].copy(),
                              leaf_ordinal=ordinal))
            ordinal += 1
            return len(nodes) - 1
        _, j, t = split
        nodes.append(None)  # type: ignore[arg-type]  # patched once children exist
        my_id = len(nodes) - 1
        goes_left = X[idx, j] <= t
        left_id = grow(idx[goes_left], depth + 1)
        right_id = grow(idx[~goes_left], depth + 1)
        nodes[my_id] = Branch(feature=j, threshold=t, left=left_id, right=right_id)
        return my_id

    root_id = grow(np.arange(len(X)), 0)
    names_x = dataset.feature_names or [f"x{j}" for j in range(m)]
    names_y = dataset.output_names or [f"y{k}" for k in range(n)]
    return LinearModelTree(
        nodes=nodes, root_id=root_id,
        input_bounds=input_bounds, output_bounds=output_bounds,
        feature_names=list(names_x), output_names=list(names_y),
    )


def fidelity(tree: LinearModelTree, heldout: Dataset,
             heldout_fraction: float = float("nan")) -> FidelityReport:
    """Held-out per-output R^2 / RMSE; quantifies surrogate accuracy."""
    if len(heldout) == 0:
        raise ValueError("held-out dataset is empty")
    pred = tree.predict_batch(heldout.X)
    resid = pred - heldout.Y
    ss_res = np.sum(resid ** 2, axis=0)
    ss_tot = np.sum((heldout.Y - heldout.Y.mean(axis=0)) ** 2, axis=0)
    r2 = np.where(ss_tot > 0.0, 1.0 - ss_res / np.where(ss_tot > 0, ss_tot, 1.0),
                  np.where(ss_res <= 1e-12 * len(heldout), 1.0, -np.inf))
    return FidelityReport(
        r2=[float(v) for v in r2],
        rmse=[float(v) for v in np.sqrt(np.mean(resid ** 2, axis=0))],
        leaf_count=tree.n_leaves, depth=tree.depth,
        heldout_fraction=heldout_fraction,
        output_names=list(tree.output_names),
    )
