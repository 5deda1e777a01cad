"""Ordered counterfactual explanations via mixed-integer linear optimization."""

from .baselines import brute_force, greedy, greedy_order
from .classifiers import LinearModel, ReluNetwork, TreeEnsemble, load_model
from .cost_model import OrderedAction, actual_perturbations, ordering_cost, total_cost
from .feature_space import ActionSet, DatasetStats, FeatureSpec, build_action_set
from .formulation import Extraction, OrdceProblem, SolverParams, extract, sweep_gamma
from .interaction import compute_interaction_matrix
from .partial_order import PartialOrderDag, reduce_to_partial_order

__all__ = [
    "ActionSet", "DatasetStats", "Extraction", "FeatureSpec", "LinearModel", "OrderedAction",
    "OrdceProblem", "PartialOrderDag", "ReluNetwork", "SolverParams", "TreeEnsemble",
    "actual_perturbations", "brute_force", "build_action_set", "compute_interaction_matrix",
    "extract", "greedy", "greedy_order", "load_model", "ordering_cost", "reduce_to_partial_order",
    "sweep_gamma", "total_cost",
]
