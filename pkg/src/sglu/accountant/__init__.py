"""Renyi-unlearning accountant for stochastic gradient Langevin unlearning."""

from sglu.accountant.baselines import (
    D2DNoise,
    d2d_cumulative_iterations,
    d2d_min_iterations,
    d2d_sigma,
    lu_bound,
    lu_learning_rdp,
    lu_least_k,
    lu_sequential_eps,
    lu_sequential_plan,
    lu_sigma_search,
)
from sglu.accountant.bounds import (
    contraction_factor,
    ru_bound_convergent,
    ru_bound_convex,
    ru_bound_nonconvergent,
    ru_bound_random_batch,
    ru_to_dp,
    sequential_z,
    w_inf_adjacent,
    w_inf_batch,
    w_inf_stationary_gap,
    z_convergent,
    z_nonconvergent,
)
from sglu.accountant.planners import (
    ALPHA_GRID,
    BracketError,
    PlannerError,
    UnreachableTargetError,
    converted_epsilon,
    epsilon_fn,
    least_k,
    optimize_alpha,
    sequential_plan,
    sigma_search,
)
from sglu.accountant.types import (
    BatchOverlap,
    BoundSource,
    Hyperparams,
    RenyiBound,
    UnlearnPlan,
    WInftyBudget,
)

__all__ = [
    "ALPHA_GRID",
    "BatchOverlap",
    "BoundSource",
    "BracketError",
    "D2DNoise",
    "Hyperparams",
    "PlannerError",
    "RenyiBound",
    "UnlearnPlan",
    "UnreachableTargetError",
    "WInftyBudget",
    "contraction_factor",
    "converted_epsilon",
    "d2d_cumulative_iterations",
    "d2d_min_iterations",
    "d2d_sigma",
    "epsilon_fn",
    "least_k",
    "lu_bound",
    "lu_learning_rdp",
    "lu_least_k",
    "lu_sequential_eps",
    "lu_sequential_plan",
    "lu_sigma_search",
    "optimize_alpha",
    "ru_bound_convergent",
    "ru_bound_convex",
    "ru_bound_nonconvergent",
    "ru_bound_random_batch",
    "ru_to_dp",
    "sequential_plan",
    "sequential_z",
    "sigma_search",
    "w_inf_adjacent",
    "w_inf_batch",
    "w_inf_stationary_gap",
    "z_convergent",
    "z_nonconvergent",
]
