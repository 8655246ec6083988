"""Optimal transport for lower probabilities of ε-contaminated credal sets."""

from .choquet import AtomFunction, choquet_bounded_coherent, choquet_riemann, choquet_sorted
from .credal_core import (
    Capacity,
    DiscreteDistribution,
    Envelope,
    EpsContamination,
    FiniteSpace,
    IndexMap,
    cdf,
    core_membership,
    decompose,
    extreme_points,
    lower,
    lower_coherent,
    lower_incoherent,
    pushforward_lower,
    quantile,
    upper,
)
from .exceptions import CredalOTError, DomainError, InputError, SizeError, SolverError
from .ot_lower import (
    JointLowerTable,
    LowerPlan,
    check_pushforward_constraint,
    deterministic_lower_plan,
    gamma_geom_membership,
    gamma_r_membership,
    gbc_condition,
    geometric_condition,
    lower_wasserstein_p,
    lpm_objective,
    rlpk_objective,
    solve_lpm,
    solve_rlpk,
)

__all__ = [
    "AtomFunction", "Capacity", "CredalOTError", "DiscreteDistribution", "DomainError",
    "Envelope", "EpsContamination", "FiniteSpace", "IndexMap", "InputError",
    "JointLowerTable", "LowerPlan", "SizeError", "SolverError", "cdf",
    "check_pushforward_constraint", "choquet_bounded_coherent", "choquet_riemann",
    "choquet_sorted", "core_membership", "decompose", "deterministic_lower_plan",
    "extreme_points", "gamma_geom_membership", "gamma_r_membership", "gbc_condition",
    "geometric_condition", "lower", "lower_coherent", "lower_incoherent",
    "lower_wasserstein_p", "lpm_objective", "pushforward_lower", "quantile",
    "rlpk_objective", "solve_lpm", "solve_rlpk", "upper",
]
