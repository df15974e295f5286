"""Counterfactual search over a linear model tree surrogate.

For a query state x with factual output y, the engine walks leaf regions from
structurally closest to furthest, minimizes the counterfactual objective
inside each region's box, and confirms every surviving candidate against the
black box itself, so a reported counterfactual output is always the black
box's own answer, never the surrogate's.

The per-leaf problem (L1 input distance, a concave or convex output
quadratic, sparsity penalties, soft physical constraints) is nonconvex; it is
attacked with multi-start projected gradient descent, which is exact-feasible
here because leaf regions are axis-aligned boxes and projection is coordinate
clamping.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .blackbox import BlackBoxPredictor
from .ordering import ordered_prefix
from .tree import Leaf, LinearModelTree


@dataclass
class CfeWeights:
    lambda_in: float = 1.0
    lambda_out: float = 1.0
    lambda_sparse_in: float = 0.1
    lambda_sparse_out: float = 0.1
    lambda_feas: float = 10.0
    input_norm: str = "l1"  # or "l2"

    def validate(self) -> None:
        vals = [self.lambda_in, self.lambda_out, self.lambda_sparse_in,
                self.lambda_sparse_out, self.lambda_feas]
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError("weights must be finite and nonnegative")
        if self.input_norm not in ("l1", "l2"):
            raise ValueError("input_norm must be 'l1' or 'l2'")

    @classmethod
    def from_dict(cls, doc: dict) -> "CfeWeights":
        w = cls(**{k: doc[k] for k in doc})
        w.validate()
        return w


@dataclass
class SolverParams:
    n_starts: int = 8
    iterations: int = 200
    step_frac: float = 0.1
    seed: int = 0
    out_penalty: float = 1e3   # scaled by the largest weight, see _LeafProblem
    snap_guard: float = 1e-9


@dataclass
class ConstraintFn:
    """Scalar residual c(x); equality wants |c| <= tol, inequality c <= tol."""

    id: str
    func: Callable[[np.ndarray], float]
    kind: str = "equality"
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)
    tol_feas: float = 1e-6

    def residual(self, x: np.ndarray) -> float:
        return float(self.func(x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        g = np.empty_like(x)
        for j in range(len(x)):
            h = 1e-6 * max(1.0, abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            g[j] = (self.func(xp) - self.func(xm)) / (2 * h)
        return g

    def satisfied(self, x: np.ndarray) -> bool:
        r = self.residual(x)
        return abs(r) <= self.tol_feas if self.kind == "equality" else r <= self.tol_feas


def unit_circle_constraint(x_index: int = 0, y_index: int = 1,
                           radius: float = 1.0, tol: float = 1e-6) -> ConstraintFn:
    """c(x) = x_i^2 + x_j^2 - r^2: the pendulum-tip circle as an equality."""
    r2 = radius * radius

    def func(x):
        return x[x_index] ** 2 + x[y_index] ** 2 - r2

    def grad(x):
        g = np.zeros_like(x)
        g[x_index] = 2.0 * x[x_index]
        g[y_index] = 2.0 * x[y_index]
        return g

    return ConstraintFn(id="unit_circle", func=func, grad=grad, kind="equality",
                        params={"x_index": x_index, "y_index": y_index, "radius": radius},
                        tol_feas=tol)


CONSTRAINT_FACTORIES = {"unit_circle": unit_circle_constraint}


def make_constraint(doc: dict) -> ConstraintFn:
    kind = doc["id"]
    if kind not in CONSTRAINT_FACTORIES:
        raise ValueError(f"unknown constraint id {kind!r}")
    return CONSTRAINT_FACTORIES[kind](**doc.get("params", {}))


@dataclass
class CfeQuery:
    x: np.ndarray
    y: np.ndarray | None = None          # factual black-box output; filled by explain
    target: np.ndarray | None = None     # requested output for targeted queries
    num_explanations: int = 1
    max_leaves: int = 50
    weights: CfeWeights = field(default_factory=CfeWeights)
    constraints: list[ConstraintFn] = field(default_factory=list)
    output_bounds: np.ndarray | None = None  # override of the tree's output box
    eps_y: float | np.ndarray | None = None      # None -> 0.1 * output range
    eps_target: float | np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=float)
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=float)
        if self.num_explanations < 1:
            raise ValueError("num_explanations must be >= 1")
        if self.max_leaves < 1:
            raise ValueError("max_leaves must be >= 1")
        self.weights.validate()


@dataclass
class Counterfactual:
    x_prime: np.ndarray
    y_lmt: np.ndarray           # surrogate prediction f_l(x')
    y_prime: np.ndarray | None  # black-box confirmed output
    delta_x: np.ndarray
    delta_y: np.ndarray | None
    objective_value: float
    leaf_id: int
    sparsity_in: int
    sparsity_out: int
    valid: bool
    feasible: bool
    residuals: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "x_prime": self.x_prime.tolist(),
            "y_lmt": self.y_lmt.tolist(),
            "y_prime": None if self.y_prime is None else self.y_prime.tolist(),
            "delta_x": self.delta_x.tolist(),
            "delta_y": None if self.delta_y is None else self.delta_y.tolist(),
            "objective": self.objective_value,
            "leaf_id": self.leaf_id,
            "sparsity_in": self.sparsity_in,
            "sparsity_out": self.sparsity_out,
            "valid": self.valid,
            "feasible": self.feasible,
            "residuals": self.residuals,
            "warnings": list(self.warnings),
        }


class LeafCandidate(NamedTuple):
    x_prime: np.ndarray
    y_lmt: np.ndarray
    objective_value: float
    leaf_id: int
    warnings: tuple[str, ...]


class ValidationResult(NamedTuple):
    y_prime: np.ndarray
    valid: bool


class FeasibilityResult(NamedTuple):
    feasible: bool
    residuals: dict


@dataclass
class ExplainResult:
    counterfactuals: list[Counterfactual]
    leaves_examined: int
    wall_time_ms: float
    diagnostic: str | None = None
    best_invalid: Counterfactual | None = None
    query_x: np.ndarray | None = None
    query_y: np.ndarray | None = None
    query_target: np.ndarray | None = None

    def to_json(self) -> dict:
        query = {"x": self.query_x.tolist() if self.query_x is not None else None,
                 "y": self.query_y.tolist() if self.query_y is not None else None}
        if self.query_target is not None:
            query["target"] = self.query_target.tolist()
        doc = {
            "query": query,
            "counterfactuals": [c.to_json() for c in self.counterfactuals],
            "search": {"leaves_examined": self.leaves_examined,
                       "wall_time_ms": self.wall_time_ms},
        }
        if self.diagnostic:
            doc["search"]["diagnostic"] = self.diagnostic
        if self.best_invalid is not None:
            doc["search"]["best_invalid"] = self.best_invalid.to_json()
        return doc


# ---------------------------------------------------------------------------
# Objective

def sparsity(v_ref, v, tau) -> int:
    """Count of coordinates moved further than the snap tolerance."""
    v_ref = np.asarray(v_ref, dtype=float)
    v = np.asarray(v, dtype=float)
    if v_ref.shape != v.shape:
        raise ValueError("sparsity operands must have equal length")
    return int(np.count_nonzero(np.abs(v_ref - v) > tau))


def _input_distance(x, P, norm: str):
    diff = P - x
    if norm == "l1":
        return np.sum(np.abs(diff), axis=-1)
    return np.sqrt(np.sum(diff ** 2, axis=-1))


def objective(x, x_prime, y_anchor, leaf: Leaf, weights: CfeWeights,
              mode: str = "exploratory", constraints: list[ConstraintFn] = (),
              tau_in=0.0, tau_out=0.0, y_factual=None) -> float:
    """Counterfactual objective z at a single point inside a leaf region.

    Exploratory mode rewards moving the surrogate output away from the anchor
    (the factual y); targeted mode penalizes distance to the anchor (the
    requested Y).  Sparsity counts enter as penalties in both modes; the
    output sparsity is measured against the factual output.
    """
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    y_anchor = np.asarray(y_anchor, dtype=float)
    f = leaf.evaluate(x_prime)
    z = weights.lambda_in * float(_input_distance(x, x_prime, weights.input_norm))
    quad = float(np.sum((y_anchor - f) ** 2))
    z += weights.lambda_out * quad if mode == "targeted" else -weights.lambda_out * quad
    y_ref = y_anchor if y_factual is None else np.asarray(y_factual, dtype=float)
    z += weights.lambda_sparse_in * sparsity(x, x_prime, tau_in)
    z += weights.lambda_sparse_out * sparsity(y_ref, f, tau_out)
    for c in constraints:
        z += weights.lambda_feas * c.residual(x_prime) ** 2
    return float(z)


class _LeafProblem:
    """Vectorized smooth objective/gradient over one leaf box (L0 terms excluded)."""

    def __init__(self, x, anchor, W, c, lo, hi, weights: CfeWeights, mode: str,
                 constraints, out_lo, out_hi, out_penalty: float):
        self.x = x
        self.anchor = anchor
        self.W, self.c = W, c
        self.lo, self.hi = lo, hi
        self.w = weights
        self.sign_out = 1.0 if mode == "targeted" else -1.0
        self.constraints = list(constraints)
        self.out_lo, self.out_hi = out_lo, out_hi
        # scale with the weights so uniform weight scaling rescales z uniformly
        self.mu = out_penalty * max(weights.lambda_in, weights.lambda_out,
                                    weights.lambda_feas, 1e-12)

    def outputs(self, P):
        return P @ self.W.T + self.c

    def value(self, P):
        F = self.outputs(P)
        z = self.w.lambda_in * _input_distance(self.x, P, self.w.input_norm)
        z = z + self.sign_out * self.w.lambda_out * np.sum((self.anchor - F) ** 2, axis=-1)
        over = np.maximum(F - self.out_hi, 0.0)
        under = np.maximum(self.out_lo - F, 0.0)
        z = z + self.mu * np.sum(over ** 2 + under ** 2, axis=-1)
        if self.constraints and self.w.lambda_feas > 0:
            pen = np.zeros(len(P))
            for i, p in enumerate(P):
                pen[i] = sum(c.residual(p) ** 2 for c in self.constraints)
            z = z + self.w.lambda_feas * pen
        return z

    def grad(self, P):
        F = self.outputs(P)
        diff = P - self.x
        if self.w.input_norm == "l1":
            g = self.w.lambda_in * np.sign(diff)
        else:
            nrm = np.maximum(np.linalg.norm(diff, axis=-1, keepdims=True), 1e-12)
            g = self.w.lambda_in * diff / nrm
        g = g + self.sign_out * 2.0 * self.w.lambda_out * (F - self.anchor) @ self.W
        over = np.maximum(F - self.out_hi, 0.0)
        under = np.maximum(self.out_lo - F, 0.0)
        g = g + 2.0 * self.mu * (over - under) @ self.W
        if self.constraints and self.w.lambda_feas > 0:
            for i, p in enumerate(P):
                acc = np.zeros_like(p)
                for c in self.constraints:
                    acc += 2.0 * c.residual(p) * c.gradient(p)
                g[i] += self.w.lambda_feas * acc
        return g

    def value_and_grad(self, P):
        """Fused evaluation; shares the output matmul between z and its gradient."""
        F = self.outputs(P)
        err = F - self.anchor
        z = self.w.lambda_in * _input_distance(self.x, P, self.w.input_norm)
        z = z + self.sign_out * self.w.lambda_out * np.einsum("ij,ij->i", err, err)
        diff = P - self.x
        if self.w.input_norm == "l1":
            g = self.w.lambda_in * np.sign(diff)
        else:
            nrm = np.maximum(np.linalg.norm(diff, axis=-1, keepdims=True), 1e-12)
            g = self.w.lambda_in * diff / nrm
        g = g + (self.sign_out * 2.0 * self.w.lambda_out) * (err @ self.W)
        over = np.maximum(F - self.out_hi, 0.0)
        under = np.maximum(self.out_lo - F, 0.0)
        viol = over - under
        if np.any(viol):
            z = z + self.mu * np.einsum("ij,ij->i", viol, viol)
            g = g + (2.0 * self.mu) * (viol @ self.W)
        if self.constraints and self.w.lambda_feas > 0:
            for i, p in enumerate(P):
                pen = 0.0
                acc = np.zeros_like(p)
                for c in self.constraints:
                    r = c.residual(p)
                    pen += r * r
                    acc += (2.0 * r) * c.gradient(p)
                z[i] += self.w.lambda_feas * pen
                g[i] += self.w.lambda_feas * acc
        return z, g

    def repair_output_bounds(self, p, max_iters: int = 50):
        """Alternate projections onto violated output halfspaces and the box."""
        tol = 1e-8 * max(1.0, float(np.max(self.out_hi - self.out_lo)))
        for _ in range(max_iters):
            f = self.W @ p + self.c
            hi_viol = f - self.out_hi
            lo_viol = self.out_lo - f
            worst = max(float(hi_viol.max(initial=0.0)), float(lo_viol.max(initial=0.0)))
            if worst <= tol:
                return p, True
            for k in range(len(f)):
                wk = self.W[k]
                nk = float(wk @ wk)
                if nk == 0.0:
                    continue
                if hi_viol[k] > tol:
                    p = p - wk * (hi_viol[k] / nk)
                elif lo_viol[k] > tol:
                    p = p + wk * (lo_viol[k] / nk)
            p = np.clip(p, self.lo, self.hi)
        f = self.W @ p + self.c
        ok = bool(np.all(f <= self.out_hi + tol) and np.all(f >= self.out_lo - tol))
        return p, ok


def _resolve_eps(eps, bounds, default_frac: float) -> np.ndarray:
    if eps is None:
        return default_frac * (bounds[:, 1] - bounds[:, 0])
    eps = np.asarray(eps, dtype=float)
    return np.broadcast_to(eps, (bounds.shape[0],)).astype(float)


def snap_tolerances(tree: LinearModelTree) -> tuple[np.ndarray, np.ndarray]:
    tau_in = 1e-4 * (tree.input_bounds[:, 1] - tree.input_bounds[:, 0])
    tau_out = 1e-4 * (tree.output_bounds[:, 1] - tree.output_bounds[:, 0])
    return tau_in, tau_out


def solve_leaf(tree: LinearModelTree, leaf_id: int, query: CfeQuery,
               mode: str = "exploratory",
               solver: SolverParams | None = None) -> LeafCandidate | None:
    """Best local optimum of the objective inside one leaf's region box.

    Runs multi-start projected (sub)gradient descent with per-start
    backtracking; sparsity terms are relaxed away during descent and
    reintroduced by post-hoc snap-back of nearly unchanged coordinates.
    Returns None when the region box (intersected with the output bounds)
    admits no feasible point.
    """
    solver = solver or SolverParams()
    leaf = tree.nodes[leaf_id]
    if not isinstance(leaf, Leaf):
        raise KeyError(f"no leaf with id {leaf_id}")
    lo, hi = tree.leaf_box(leaf_id)
    if np.any(lo > hi):
        return None
    x = query.x
    anchor = query.target if mode == "targeted" else query.y
    if anchor is None:
        raise ValueError("query must carry the factual y (exploratory) or target (targeted)")
    out_bounds = query.output_bounds if query.output_bounds is not None else tree.output_bounds
    problem = _LeafProblem(
        x=x, anchor=np.asarray(anchor, dtype=float), W=leaf.weights, c=leaf.bias,
        lo=lo, hi=hi, weights=query.weights, mode=mode,
        constraints=query.constraints,
        out_lo=out_bounds[:, 0], out_hi=out_bounds[:, 1],
        out_penalty=solver.out_penalty,
    )

    m = tree.input_dim
    rng = np.random.default_rng(np.random.SeedSequence(solver.seed, spawn_key=(leaf_id,)))
    starts = np.empty((solver.n_starts, m))
    starts[0] = np.clip(x, lo, hi)
    starts[1] = (lo + hi) / 2.0
    starts[2:] = lo + rng.uniform(size=(solver.n_starts - 2, m)) * (hi - lo)

    P = starts.copy()
    z, g = problem.value_and_grad(P)
    step = np.ones(solver.n_starts)
    base = solver.step_frac * np.maximum(hi - lo, 0.0)
    last_improvement = np.zeros(solver.n_starts)
    for _ in range(solver.iterations):
        gmax = np.max(np.abs(g), axis=1, keepdims=True)
        d = np.divide(g, gmax, out=np.zeros_like(g), where=gmax > 0)
        cand = np.clip(P - step[:, None] * base * d, lo, hi)
        zc, gc = problem.value_and_grad(cand)
        # improvements below float-noise scale do not count as progress
        better = zc < z - 1e-12 * np.abs(z)
        last_improvement = np.where(better, z - zc, last_improvement)
        P[better] = cand[better]
        z[better] = zc[better]
        g[better] = gc[better]
        step[~better] *= 0.5
        if np.all(step < 1e-12):
            break

    tau_in, tau_out = snap_tolerances(tree)
    y_factual = query.y if query.y is not None else problem.outputs(x[None])[0]

    def full_value(p) -> float:
        zs = float(problem.value(p[None])[0])
        f = leaf.evaluate(p)
        zs += query.weights.lambda_sparse_in * sparsity(x, p, tau_in)
        zs += query.weights.lambda_sparse_out * sparsity(y_factual, f, tau_out)
        return zs

    warnings: list[str] = []
    order = np.argsort([full_value(p) for p in P], kind="stable")
    best = None
    for i in order:
        p, ok = problem.repair_output_bounds(P[i].copy())
        if ok:
            best = p
            if step[i] >= 1e-6 and last_improvement[i] > 1e-9:
                warnings.append("solver-not-converged")
            break
    if best is None:
        return None

    # L0 snap-back: coordinates that barely moved return to the query value
    # whenever that does not worsen the full objective
    z_best = full_value(best)
    for j in range(m):
        dj = abs(best[j] - x[j])
        if 0.0 < dj <= tau_in[j] and lo[j] <= x[j] <= hi[j]:
            trial = best.copy()
            trial[j] = x[j]
            z_trial = full_value(trial)
            if z_trial <= z_best + solver.snap_guard:
                best, z_best = trial, z_trial

    return LeafCandidate(
        x_prime=best, y_lmt=leaf.evaluate(best), objective_value=z_best,
        leaf_id=leaf_id, warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Validation and feasibility

def validate_with_blackbox(blackbox: BlackBoxPredictor, x_prime, y,
                           eps_y) -> ValidationResult:
    """Confirm a candidate with the black box; valid when some output moved
    by at least its eps_y threshold."""
    y_prime = np.asarray(blackbox.predict(np.asarray(x_prime, dtype=float)), dtype=float)
    eps = np.broadcast_to(np.asarray(eps_y, dtype=float), y_prime.shape)
    valid = bool(np.any(np.abs(y_prime - np.asarray(y, dtype=float)) >= eps))
    return ValidationResult(y_prime=y_prime, valid=valid)


def check_feasibility(constraints: list[ConstraintFn], x_prime) -> FeasibilityResult:
    x_prime = np.asarray(x_prime, dtype=float)
    residuals = {}
    feasible = True
    for c in constraints:
        r = c.residual(x_prime)
        residuals[c.id] = r
        if not c.satisfied(x_prime):
            feasible = False
    return FeasibilityResult(feasible=feasible, residuals=residuals)


# ---------------------------------------------------------------------------
# Search loops

def _finalize(cand: LeafCandidate, query: CfeQuery, y: np.ndarray,
              y_prime: np.ndarray, valid: bool, tree: LinearModelTree,
              extra_warnings: tuple[str, ...] = ()) -> Counterfactual:
    tau_in, tau_out = snap_tolerances(tree)
    feas = check_feasibility(query.constraints, cand.x_prime)
    return Counterfactual(
        x_prime=cand.x_prime, y_lmt=cand.y_lmt, y_prime=y_prime,
        delta_x=cand.x_prime - query.x, delta_y=y_prime - y,
        objective_value=cand.objective_value, leaf_id=cand.leaf_id,
        sparsity_in=sparsity(query.x, cand.x_prime, tau_in),
        sparsity_out=sparsity(y, y_prime, tau_out),
        valid=valid, feasible=feas.feasible, residuals=feas.residuals,
        warnings=list(cand.warnings + extra_warnings),
    )


def _check_query(tree: LinearModelTree, query: CfeQuery) -> None:
    if query.x.shape != (tree.input_dim,):
        raise ValueError(f"query x must be a {tree.input_dim}-vector")
    lo, hi = tree.input_bounds[:, 0], tree.input_bounds[:, 1]
    if np.any(query.x < lo) or np.any(query.x > hi):
        raise ValueError("query x outside the tree's input bounds")


def explain(tree: LinearModelTree, blackbox: BlackBoxPredictor, query: CfeQuery,
            solver: SolverParams | None = None) -> ExplainResult:
    """Exploratory counterfactual search (what nearby state changes the action?)."""
    return _search(tree, blackbox, query, mode="exploratory", solver=solver)


def explain_targeted(tree: LinearModelTree, blackbox: BlackBoxPredictor,
                     query: CfeQuery, solver: SolverParams | None = None) -> ExplainResult:
    """Targeted search: why this action rather than the requested target Y?"""
    if query.target is None:
        raise ValueError("targeted query requires a target output Y")
    out_bounds = query.output_bounds if query.output_bounds is not None else tree.output_bounds
    if np.any(query.target < out_bounds[:, 0]) or np.any(query.target > out_bounds[:, 1]):
        raise ValueError("target Y outside the output bounds")
    return _search(tree, blackbox, query, mode="targeted", solver=solver)


def _search(tree, blackbox, query, mode, solver) -> ExplainResult:
    t0 = time.perf_counter()
    _check_query(tree, query)
    y = query.y
    if y is None:
        y = np.asarray(blackbox.predict(query.x), dtype=float)
        query.y = y
    eps_y = _resolve_eps(query.eps_y, tree.output_bounds, 0.1)

    if mode == "targeted":
        eps_target = _resolve_eps(query.eps_target, tree.output_bounds, 0.1)
        if np.all(np.abs(query.target - y) < 1e-12):
            # asking why not the action that was in fact taken
            leaf_id = tree.locate_leaf(query.x)
            tau_in, tau_out = snap_tolerances(tree)
            z = objective(query.x, query.x, query.target, tree.nodes[leaf_id],
                          query.weights, "targeted", query.constraints,
                          tau_in, tau_out, y_factual=y)
            cand = LeafCandidate(x_prime=query.x.copy(),
                                 y_lmt=tree.predict(query.x),
                                 objective_value=z, leaf_id=leaf_id, warnings=())
            y_prime, _ = validate_with_blackbox(blackbox, query.x, y, eps_y)
            cf = _finalize(cand, query, y, y_prime, False, tree,
                           extra_warnings=("degenerate-target",))
            return ExplainResult([cf], 1, (time.perf_counter() - t0) * 1e3,
                                 diagnostic="target equals the factual output",
                                 query_x=query.x, query_y=y, query_target=query.target)

    order = ordered_prefix(tree, query.x, query.max_leaves)
    found: list[Counterfactual] = []
    rejected: list[Counterfactual] = []
    examined = 0
    for leaf_id in order.ordered:
        examined += 1
        cand = solve_leaf(tree, leaf_id, query, mode=mode, solver=solver)
        if cand is None:
            continue
        try:
            y_prime, valid = validate_with_blackbox(blackbox, cand.x_prime, y, eps_y)
        except Exception:
            continue  # black-box failure drops the candidate
        if mode == "targeted":
            valid = valid and bool(np.all(np.abs(y_prime - query.target) <= eps_target))
        cf = _finalize(cand, query, y, y_prime, valid, tree)
        (found if valid else rejected).append(cf)
        if len(found) >= query.num_explanations:
            break

    found.sort(key=lambda c: c.objective_value)
    diagnostic = None
    best_invalid = None
    if not found:
        if mode == "targeted" and rejected:
            # fall back to whatever lands closest to the requested target
            closest = min(rejected, key=lambda c: float(np.max(np.abs(c.y_prime - query.target))))
            closest.warnings.append("approximate-target")
            found = [closest]
            diagnostic = "no candidate reached the target within eps_target; closest returned"
        elif rejected:
            best_invalid = min(rejected, key=lambda c: c.objective_value)
            if max(float(np.max(np.abs(c.delta_y))) for c in rejected) == 0.0:
                diagnostic = "no output change achievable in the searched leaves"
            else:
                diagnostic = (f"no valid counterfactual among {examined} leaves; "
                              "best invalid candidate attached")
        else:
            diagnostic = f"no candidate found in {examined} leaves (empty regions)"

    return ExplainResult(
        counterfactuals=found, leaves_examined=examined,
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
        diagnostic=diagnostic, best_invalid=best_invalid,
        query_x=query.x, query_y=y, query_target=query.target,
    )
