"""Submodular data selection and summarization.

Objective models (:mod:`subsum.functions`) expose memoized marginal gains;
greedy solvers (:mod:`subsum.optimize`) maximize them under cardinality,
knapsack, cover and streaming constraints; :mod:`subsum.pipelines` wires
features, models and solvers into summarization, subset selection and
active-learning flows.
"""

__version__ = "0.1.0"

from .core import GroundSet, Selection, SetFunction, new_ground_set, selection_total_cost
from .functions import (
    DisparityMin,
    DisparityMinSum,
    DisparitySum,
    FacilityLocation,
    FeatureBased,
    GraphCut,
    MaxMarginalRelevance,
    ModularImportance,
    ProbabilisticSetCover,
    SaturatedCoverage,
    SetCover,
)
from .ingest import FeatureMatrix
from .optimize import (
    SolverConfig,
    brute_force_opt,
    budgeted_greedy,
    cover_greedy,
    disparity_min_greedy,
    lazy_greedy,
    naive_greedy,
    solve,
    stream_greedy,
)
from .similarity import Kernel, DistanceMatrix, compute_distances, compute_kernel, sparsify_knn

__all__ = [
    "GroundSet",
    "Selection",
    "SetFunction",
    "new_ground_set",
    "selection_total_cost",
    "FacilityLocation",
    "SaturatedCoverage",
    "GraphCut",
    "FeatureBased",
    "SetCover",
    "ProbabilisticSetCover",
    "DisparityMin",
    "DisparitySum",
    "DisparityMinSum",
    "ModularImportance",
    "MaxMarginalRelevance",
    "FeatureMatrix",
    "Kernel",
    "DistanceMatrix",
    "compute_kernel",
    "compute_distances",
    "sparsify_knn",
    "SolverConfig",
    "naive_greedy",
    "lazy_greedy",
    "budgeted_greedy",
    "cover_greedy",
    "stream_greedy",
    "disparity_min_greedy",
    "brute_force_opt",
    "solve",
]
