"""Sparse 2-approximate barycenters of discrete measures under the squared
2-Wasserstein cost, computed by linear programming over small candidate
supports with exact rational arithmetic by default.
"""

from .algorithms import (
    ApproxResult,
    ImprovementTrace,
    PartitionCell,
    approx_barycenter,
    certified_bound,
    exact_barycenter,
    greedy_lex_maximize,
    iterate_local_improvement,
    partition_by_source,
    recover_non_mass_split,
    spread_to_centroids,
)
from .arith import FLOAT, RATIONAL, Arithmetic, get_arithmetic
from .estimator import WassersteinBarycenter
from .exceptions import BarycenterError, DataError, SizeCapError, SolverError
from .lp import LinearProgram, VertexSolution, solve_to_optimal_vertex, solve_warm_started
from .measures import (
    DiscreteMeasure,
    TransportPlan,
    WeightVector,
    centroid_set,
    is_non_mass_splitting,
    sparsity_bound,
    squared_distance,
    transport_cost,
    union_support,
    wasserstein2_squared,
    weighted_centroid,
)
from .oracle import brute_force_phi, brute_force_w2, verify_vertex

__version__ = "0.1.0"

__all__ = [
    "ApproxResult",
    "Arithmetic",
    "BarycenterError",
    "DataError",
    "DiscreteMeasure",
    "FLOAT",
    "ImprovementTrace",
    "LinearProgram",
    "PartitionCell",
    "RATIONAL",
    "SizeCapError",
    "SolverError",
    "TransportPlan",
    "VertexSolution",
    "WassersteinBarycenter",
    "WeightVector",
    "approx_barycenter",
    "brute_force_phi",
    "brute_force_w2",
    "centroid_set",
    "certified_bound",
    "exact_barycenter",
    "get_arithmetic",
    "greedy_lex_maximize",
    "is_non_mass_splitting",
    "iterate_local_improvement",
    "partition_by_source",
    "recover_non_mass_split",
    "solve_to_optimal_vertex",
    "solve_warm_started",
    "sparsity_bound",
    "spread_to_centroids",
    "squared_distance",
    "transport_cost",
    "union_support",
    "verify_vertex",
    "wasserstein2_squared",
    "weighted_centroid",
]
