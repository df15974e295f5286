"""Linear model trees: evaluation, leaf polytopes, JSON serialization.

A linear model tree is a binary tree of univariate splits whose leaves hold
affine multi-output models.  Globally it is a piecewise-linear map from an
m-dimensional box to n outputs.  Trees are immutable after construction and
safe to share between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1

# Strict splits (x > t on the right branch) are widened into closed halfspaces
# x >= t + delta so the leaf regions stay closed sets for the optimizer.
def strict_gap(threshold: float) -> float:
    return 1e-9 * max(1.0, abs(threshold))


class TreeSchemaError(ValueError):
    """Malformed or unsupported tree document; `location` points at the culprit."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class Branch:
    feature: int
    threshold: float
    left: int   # child for x[feature] <= threshold
    right: int  # child for x[feature] >  threshold


@dataclass(frozen=True)
class Leaf:
    weights: np.ndarray  # (n_outputs, n_features)
    bias: np.ndarray     # (n_outputs,)
    leaf_ordinal: int

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.weights @ x + self.bias


@dataclass(frozen=True)
class Halfspace:
    feature: int
    sense: str   # "le" or "ge"
    bound: float
    origin: str  # "path" or "global-bound"

    def satisfied(self, x: np.ndarray, tol: float = 0.0) -> bool:
        v = x[self.feature]
        return v <= self.bound + tol if self.sense == "le" else v >= self.bound - tol


@dataclass(frozen=True)
class LeafRegion:
    """Axis-aligned polytope of inputs routed to one leaf."""

    leaf_id: int
    halfspaces: tuple[Halfspace, ...]

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return all(h.satisfied(x, tol) for h in self.halfspaces)

    def as_box(self, n_features: int) -> tuple[np.ndarray, np.ndarray]:
        """Collapse the halfspaces to per-feature [lower, upper] arrays."""
        lo = np.full(n_features, -np.inf)
        hi = np.full(n_features, np.inf)
        for h in self.halfspaces:
            if h.sense == "ge":
                lo[h.feature] = max(lo[h.feature], h.bound)
            else:
                hi[h.feature] = min(hi[h.feature], h.bound)
        return lo, hi

@dataclass
class LinearModelTree:
    """Arena-indexed binary tree with affine leaf models.

    `nodes[i]` is either a Branch or a Leaf; ids are dense 0..len(nodes)-1.
    Bounds are inclusive per-feature / per-output [lower, upper] pairs in the
    semantic units of the application.
    """

    nodes: list[Branch | Leaf]
    root_id: int
    input_bounds: np.ndarray   # (m, 2)
    output_bounds: np.ndarray  # (n, 2)
    feature_names: list[str]
    output_names: list[str]
    _parents: dict[int, int] = field(init=False, repr=False, default_factory=dict)
    _depths: dict[int, int] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.input_bounds = np.asarray(self.input_bounds, dtype=float)
        self.output_bounds = np.asarray(self.output_bounds, dtype=float)
        self._validate()

    # -- structure -----------------------------------------------------

    @property
    def input_dim(self) -> int:
        return self.input_bounds.shape[0]

    @property
    def output_dim(self) -> int:
        return self.output_bounds.shape[0]

    @property
    def leaf_ids(self) -> list[int]:
        return [i for i, nd in enumerate(self.nodes) if isinstance(nd, Leaf)]

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)

    @property
    def depth(self) -> int:
        return max(self._depths[i] for i in self.leaf_ids)

    def parent(self, node_id: int) -> int | None:
        return self._parents.get(node_id)

    def node_depth(self, node_id: int) -> int:
        return self._depths[node_id]

    def _validate(self) -> None:
        m = self.input_dim
        if self.input_bounds.shape != (m, 2) or not np.all(np.isfinite(self.input_bounds)):
            raise ValueError("input_bounds must be a finite (m, 2) array")
        if not np.all(self.input_bounds[:, 0] <= self.input_bounds[:, 1]):
            raise ValueError("input_bounds must satisfy lower <= upper")
        if len(self.feature_names) != m:
            raise ValueError("feature_names length must match input_dim")
        if len(self.output_names) != self.output_dim:
            raise ValueError("output_names length must match output_dim")
        if not (0 <= self.root_id < len(self.nodes)):
            raise ValueError(f"root_id {self.root_id} out of range")

        # Walk from the root: every node reachable exactly once, no cycles.
        self._parents.clear()
        self._depths.clear()
        seen = set()
        stack = [(self.root_id, 0)]
        n_branches = 0
        while stack:
            nid, d = stack.pop()
            if nid in seen:
                raise ValueError(f"node {nid} reachable twice (cycle or shared child)")
            seen.add(nid)
            self._depths[nid] = d
            nd = self.nodes[nid]
            if isinstance(nd, Branch):
                n_branches += 1
                if not (0 <= nd.feature < m):
                    raise ValueError(f"branch {nid}: feature {nd.feature} out of range")
                flo, fhi = self.input_bounds[nd.feature]
                if not (flo <= nd.threshold <= fhi):
                    raise ValueError(
                        f"branch {nid}: threshold {nd.threshold} outside bounds "
                        f"[{flo}, {fhi}] of feature {nd.feature}"
                    )
                for child in (nd.left, nd.right):
                    if not (0 <= child < len(self.nodes)):
                        raise ValueError(f"branch {nid}: child {child} out of range")
                    self._parents[child] = nid
                    stack.append((child, d + 1))
            else:
                if nd.weights.shape != (self.output_dim, m):
                    raise ValueError(f"leaf {nid}: weights shape {nd.weights.shape}")
                if nd.bias.shape != (self.output_dim,):
                    raise ValueError(f"leaf {nid}: bias shape {nd.bias.shape}")
        if len(seen) != len(self.nodes):
            raise ValueError("unreachable nodes present")
        if len(seen) - n_branches != n_branches + 1:
            raise ValueError("leaf count must equal branch count + 1")

    # -- evaluation ----------------------------------------------------

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected {self.input_dim}-vector, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("input contains non-finite values")
        return x

    def locate_leaf(self, x) -> int:
        """Id of the leaf whose region contains x (ties at x_j == t go left)."""
        x = self._check_x(x)
        nid = self.root_id
        nd = self.nodes[nid]
        while isinstance(nd, Branch):
            nid = nd.left if x[nd.feature] <= nd.threshold else nd.right
            nd = self.nodes[nid]
        return nid

    def predict(self, x) -> np.ndarray:
        """Affine prediction of the unique leaf x is routed to."""
        x = self._check_x(x)
        leaf = self.nodes[self.locate_leaf(x)]
        return leaf.evaluate(x)

    def predict_batch(self, X) -> np.ndarray:
        """Row-wise predict; routes index sets node by node."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError(f"expected (N, {self.input_dim}) matrix, got {X.shape}")
        out = np.empty((X.shape[0], self.output_dim))
        stack = [(self.root_id, np.arange(X.shape[0]))]
        while stack:
            nid, idx = stack.pop()
            if idx.size == 0:
                continue
            nd = self.nodes[nid]
            if isinstance(nd, Branch):
                goes_left = X[idx, nd.feature] <= nd.threshold
                stack.append((nd.left, idx[goes_left]))
                stack.append((nd.right, idx[~goes_left]))
            else:
                out[idx] = X[idx] @ nd.weights.T + nd.bias
        return out

    # -- leaf polytopes --------------------------------------------------

    def region_of(self, leaf_id: int) -> LeafRegion:
        """Halfspaces of a leaf: root-to-leaf path constraints plus global bounds."""
        if not (0 <= leaf_id < len(self.nodes)) or not isinstance(self.nodes[leaf_id], Leaf):
            raise KeyError(f"no leaf with id {leaf_id}")
        path = []
        nid = leaf_id
        while (pid := self._parents.get(nid)) is not None:
            br = self.nodes[pid]
            if br.left == nid:
                path.append(Halfspace(br.feature, "le", br.threshold, "path"))
            else:
                path.append(Halfspace(br.feature, "ge", br.threshold + strict_gap(br.threshold), "path"))
            nid = pid
        path.reverse()
        for j in range(self.input_dim):
            path.append(Halfspace(j, "ge", float(self.input_bounds[j, 0]), "global-bound"))
            path.append(Halfspace(j, "le", float(self.input_bounds[j, 1]), "global-bound"))
        return LeafRegion(leaf_id=leaf_id, halfspaces=tuple(path))

    def leaf_box(self, leaf_id: int) -> tuple[np.ndarray, np.ndarray]:
        return self.region_of(leaf_id).as_box(self.input_dim)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        nodes = []
        for i, nd in enumerate(self.nodes):
            if isinstance(nd, Branch):
                nodes.append({
                    "id": i, "kind": "branch", "feature": nd.feature,
                    "threshold": nd.threshold, "left": nd.left, "right": nd.right,
                })
            else:
                nodes.append({
                    "id": i, "kind": "leaf",
                    "weights": nd.weights.tolist(), "bias": nd.bias.tolist(),
                })
        return {
            "schema_version": SCHEMA_VERSION,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "feature_names": list(self.feature_names),
            "output_names": list(self.output_names),
            "input_bounds": self.input_bounds.tolist(),
            "output_bounds": self.output_bounds.tolist(),
            "nodes": nodes,
            "root_id": self.root_id,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LinearModelTree":
        def need(obj, key, loc):
            if not isinstance(obj, dict) or key not in obj:
                raise TreeSchemaError(f"missing '{key}'", loc)
            return obj[key]

        version = need(doc, "schema_version", "document")
        if version != SCHEMA_VERSION:
            raise TreeSchemaError(f"unknown schema_version {version!r}", "document")
        m = need(doc, "input_dim", "document")
        n = need(doc, "output_dim", "document")
        raw_nodes = need(doc, "nodes", "document")
        root_id = need(doc, "root_id", "document")
        if not isinstance(raw_nodes, list) or not raw_nodes:
            raise TreeSchemaError("'nodes' must be a non-empty list", "document")

        nodes: list[Branch | Leaf] = [None] * len(raw_nodes)  # type: ignore[list-item]
        ordinal = 0
        for k, nd in enumerate(raw_nodes):
            loc = f"nodes[{k}]"
            nid = need(nd, "id", loc)
            if not isinstance(nid, int) or not (0 <= nid < len(raw_nodes)):
                raise TreeSchemaError(f"id must be a dense index in [0, {len(raw_nodes)})", loc)
            if nodes[nid] is not None:
                raise TreeSchemaError(f"duplicate id {nid}", loc)
            kind = need(nd, "kind", loc)
            if kind == "branch":
                nodes[nid] = Branch(
                    feature=need(nd, "feature", loc),
                    threshold=float(need(nd, "threshold", loc)),
                    left=need(nd, "left", loc),
                    right=need(nd, "right", loc),
                )
            elif kind == "leaf":
                weights = np.asarray(need(nd, "weights", loc), dtype=float)
                bias = np.asarray(need(nd, "bias", loc), dtype=float)
                nodes[nid] = Leaf(weights=weights, bias=bias, leaf_ordinal=ordinal)
                ordinal += 1
            else:
                raise TreeSchemaError(f"unknown kind {kind!r}", loc)

        try:
            return cls(
                nodes=nodes,
                root_id=root_id,
                input_bounds=np.asarray(need(doc, "input_bounds", "document"), dtype=float),
                output_bounds=np.asarray(need(doc, "output_bounds", "document"), dtype=float),
                feature_names=list(need(doc, "feature_names", "document")),
                output_names=list(need(doc, "output_names", "document")),
            )
        except ValueError as exc:
            raise TreeSchemaError(str(exc), "document") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "LinearModelTree":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise TreeSchemaError(f"invalid JSON: {exc}", str(path)) from exc
        return cls.from_json(doc)


def single_leaf_tree(weights, bias, input_bounds, output_bounds,
                     feature_names=None, output_names=None) -> LinearModelTree:
    """Convenience constructor for a tree that is one affine model."""
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    bias = np.atleast_1d(np.asarray(bias, dtype=float))
    m = weights.shape[1]
    n = weights.shape[0]
    return LinearModelTree(
        nodes=[Leaf(weights=weights, bias=bias, leaf_ordinal=0)],
        root_id=0,
        input_bounds=np.asarray(input_bounds, dtype=float),
        output_bounds=np.asarray(output_bounds, dtype=float),
        feature_names=feature_names or [f"x{j}" for j in range(m)],
        output_names=output_names or [f"y{k}" for k in range(n)],
    )
