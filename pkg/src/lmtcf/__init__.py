"""Counterfactual explanations for multi-output regressors via LMT surrogates."""

from .blackbox import (
    BlackBoxPredictor,
    EngineeredPendulumPolicy,
    MlpPredictor,
    MlpSpec,
    RawPendulumPolicy,
    mlp_forward,
    pendulum_policy,
    synthetic_docking_predictor,
)
from .builder import Dataset, FidelityReport, TrainConfig, build, fidelity, sample_blackbox
from .engine import (
    CfeQuery,
    CfeWeights,
    ConstraintFn,
    Counterfactual,
    ExplainResult,
    SolverParams,
    check_feasibility,
    explain,
    explain_targeted,
    objective,
    solve_leaf,
    sparsity,
    unit_circle_constraint,
    validate_with_blackbox,
)
from .ordering import LeafOrder, order_leaves, ordered_prefix
from .tree import Branch, Leaf, LeafRegion, LinearModelTree, TreeSchemaError, single_leaf_tree

__version__ = "0.1.0"

__all__ = [
    "BlackBoxPredictor", "Branch", "CfeQuery", "CfeWeights", "ConstraintFn",
    "Counterfactual", "Dataset", "EngineeredPendulumPolicy", "ExplainResult",
    "FidelityReport", "Leaf", "LeafOrder", "LeafRegion", "LinearModelTree",
    "MlpPredictor", "MlpSpec", "RawPendulumPolicy", "SolverParams", "TrainConfig",
    "TreeSchemaError", "build", "check_feasibility", "explain", "explain_targeted",
    "fidelity", "mlp_forward", "objective", "order_leaves", "ordered_prefix",
    "pendulum_policy", "sample_blackbox", "single_leaf_tree", "solve_leaf",
    "sparsity", "synthetic_docking_predictor", "unit_circle_constraint",
    "validate_with_blackbox",
]
