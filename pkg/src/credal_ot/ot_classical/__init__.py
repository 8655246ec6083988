"""Classical optimal transport: exact discrete solvers and closed-form maps."""

from .discrete import (
    CostMatrix,
    TransportPlan,
    brute_force_kantorovich,
    check_metric,
    euclidean_distances,
    solve_kantorovich,
    solve_monge_discrete,
    wasserstein_p,
)
from .gaussian import (
    GaussianPair,
    bures_cost,
    gaussian_monge_map,
    grid_discretization,
    map_cost,
    matrix_sqrt_spd,
)
from .one_d import (
    Normal1D,
    PiecewiseLinear1D,
    Uniform1D,
    continuous_from_dict,
    discretize,
    monge_map_1d,
)

__all__ = [
    "CostMatrix",
    "GaussianPair",
    "Normal1D",
    "PiecewiseLinear1D",
    "TransportPlan",
    "Uniform1D",
    "brute_force_kantorovich",
    "bures_cost",
    "check_metric",
    "continuous_from_dict",
    "discretize",
    "euclidean_distances",
    "gaussian_monge_map",
    "grid_discretization",
    "map_cost",
    "matrix_sqrt_spd",
    "monge_map_1d",
    "solve_kantorovich",
    "solve_monge_discrete",
    "wasserstein_p",
]
