"""Invert the RU bounds: pick the Renyi order, the unlearning epochs, or the noise.

All planners convert through ``eps + log(1/delta)/(alpha - 1)`` minimised over
the order. The search grid is geometric in ``alpha - 1``; the best grid cell is
then refined with a bounded scalar minimiser in ``log(alpha - 1)``.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from sglu.accountant import bounds
from sglu.accountant.types import BoundSource, Hyperparams, UnlearnPlan

#: ``1 + 2**(k/4)`` for ``k = -16..64``, i.e. orders 1.0625 .. 65537
ALPHA_GRID = 1.0 + 2.0 ** (np.arange(-16, 65) / 4.0)

SIGMA_LOW = 1e-6
SIGMA_HIGH = 10.0
SIGMA_TOL = 1e-8
SIGMA_HIGH_MAX = 1e6
K_MAX = 10**6

PLANNER_MODES = (
    BoundSource.NONCONVERGENT,
    BoundSource.CONVERGENT,
    BoundSource.RANDOM_BATCH,
    BoundSource.CONVEX_ONLY,
)


class PlannerError(RuntimeError):
    """A planner could not produce a configuration meeting its target."""


class UnreachableTargetError(PlannerError):
    pass


class BracketError(PlannerError):
    pass


def optimize_alpha(bound_fn: Callable, delta: float, *, grid=ALPHA_GRID,
                   vectorized: bool = False, refine: bool = True) -> tuple[float, float]:
    """Minimise ``bound_fn(alpha) + log(1/delta)/(alpha - 1)`` over ``alpha > 1``.

    Returns ``(alpha, eps_dp)``. The returned value never exceeds the objective
    at any grid point. With ``vectorized=True``, ``bound_fn`` is called once
    with the whole grid as an array.
    """
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    grid = np.asarray(grid, dtype=float)
    log_inv_delta = math.log(1.0 / delta)

    def objective(alpha):
        return bound_fn(alpha) + log_inv_delta / (alpha - 1.0)

    with np.errstate(over="ignore", invalid="ignore"):
        if vectorized:
            values = np.asarray(objective(grid), dtype=float)
        else:
            values = np.array([objective(a) for a in grid], dtype=float)
    values = np.where(np.isfinite(values), values, np.inf)
    i = int(np.argmin(values))
    if not np.isfinite(values[i]):
        raise PlannerError("conversion objective is non-finite on the whole order grid")
    best_alpha, best = float(grid[i]), float(values[i])
    if not refine or len(grid) < 2:
        return best_alpha, best

    lo = math.log(grid[max(i - 1, 0)] - 1.0)
    hi = math.log(grid[min(i + 1, len(grid) - 1)] - 1.0)

    def in_log_space(u):
        with np.errstate(over="ignore", invalid="ignore"):
            v = float(objective(1.0 + math.exp(u)))
        return v if math.isfinite(v) else math.inf

    res = minimize_scalar(in_log_space, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    if res.success and res.fun < best:
        return 1.0 + math.exp(res.x), float(res.fun)
    return best_alpha, best


def epsilon_fn(h: Hyperparams, K: float, *, mode: BoundSource = BoundSource.CONVERGENT,
               T: float = math.inf, z: float | None = None) -> Callable:
    """Vectorised ``alpha -> eps_ru`` for the selected bound at fixed ``(h, K, T)``."""
    mode = BoundSource(mode)
    bounds.contraction_factor(h)
    if mode is BoundSource.NONCONVERGENT:
        bounds._require_strongly_convex(h, "the non-convergent bound")
        return lambda a: bounds._nonconvergent_eps(h, T, K, a)
    if mode in (BoundSource.CONVERGENT, BoundSource.SEQUENTIAL):
        bounds._require_strongly_convex(h, "the convergent bound")
        return lambda a: bounds._convergent_eps(h, K, a, z)
    if mode is BoundSource.RANDOM_BATCH:
        bounds._require_strongly_convex(h, "the random-batch bound")
        return lambda a: bounds._random_batch_eps(h, T, K, a)
    if mode is BoundSource.CONVEX_ONLY:
        if not math.isfinite(T):
            raise ValueError("the convex-only bound needs a finite burn-in T")
        return lambda a: bounds._convex_eps(h, T, K, a)
    raise ValueError(f"mode {mode.value!r} is not a PNSGD bound")


def converted_epsilon(h: Hyperparams, K: float, delta: float, *,
                      mode: BoundSource = BoundSource.CONVERGENT, T: float = math.inf,
                      z: float | None = None) -> tuple[float, float]:
    """``(alpha*, eps_dp)`` of the selected bound after ``K`` unlearning epochs."""
    return optimize_alpha(epsilon_fn(h, K, mode=mode, T=T, z=z), delta, vectorized=True)


def _smallest_feasible(feasible: Callable[[int], bool], k_max: int) -> int:
    """Least integer ``k >= 1`` with ``feasible(k)``, assuming monotonicity."""
    if feasible(1):
        return 1
    lo, hi = 1, 2
    while not feasible(hi):
        lo = hi
        if hi >= k_max:
            raise UnreachableTargetError(f"target not met within K <= {k_max} epochs")
        hi = min(2 * hi, k_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def least_k(h: Hyperparams, T: float, target_eps_dp: float, delta: float, *,
            mode: BoundSource = BoundSource.CONVERGENT, z: float | None = None,
            k_max: int = K_MAX) -> int:
    """Smallest number of unlearning epochs whose converted bound meets the target.

    The converted bound is non-increasing in ``K`` for every mode, so the
    search gallops to a feasible ``K`` and bisects back; the result is the same
    as a linear scan from ``K = 1``.
    """
    if not target_eps_dp > 0:
        raise ValueError(f"target epsilon must be positive, got {target_eps_dp}")

    def feasible(k):
        return converted_epsilon(h, k, delta, mode=mode, T=T, z=z)[1] <= target_eps_dp

    return _smallest_feasible(feasible, k_max)


def bisect_sigma(feasible: Callable[[float], bool], *, lo: float = SIGMA_LOW,
                 hi: float = SIGMA_HIGH, tol: float = SIGMA_TOL,
                 hi_max: float = SIGMA_HIGH_MAX) -> float:
    """Smallest feasible noise scale (to absolute ``tol``) for a monotone predicate."""
    if feasible(lo):
        return lo
    while not feasible(hi):
        lo = hi
        hi *= 10.0
        if hi > hi_max:
            raise BracketError(f"no sigma up to {hi_max:g} meets the target")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def sigma_search(h: Hyperparams, T: float, K_budget: int, target_eps_dp: float,
                 delta: float, *, mode: BoundSource = BoundSource.NONCONVERGENT,
                 lo: float = SIGMA_LOW, hi: float = SIGMA_HIGH, tol: float = SIGMA_TOL,
                 hi_max: float = SIGMA_HIGH_MAX) -> float:
    """Smallest ``sigma`` for which ``K_budget`` unlearning epochs meet the target.

    ``h.sigma`` is ignored. Since the converted bound is non-increasing in
    ``K``, "least K at sigma is at most K_budget" is the same as "the bound at
    K_budget meets the target", which is what gets evaluated.
    """
    if K_budget < 1:
        raise ValueError(f"K budget must be at least 1, got {K_budget}")

    def feasible(sigma):
        hs = h.replace(sigma=sigma)
        return converted_epsilon(hs, K_budget, delta, mode=mode, T=T)[1] <= target_eps_dp

    return bisect_sigma(feasible, lo=lo, hi=hi, tol=tol, hi_max=hi_max)


def sequential_plan(h: Hyperparams, num_requests: int, target_eps_dp: float, delta: float,
                    *, T: float = math.inf, k_max: int = K_MAX) -> UnlearnPlan:
    """Per-request epoch counts for a stream of single-point replacement requests.

    Request ``s`` gets the least ``K_s`` meeting the target from its running
    budget ``Z^(s)``; the budget then follows
    ``Z^(s+1) = min(c^(K_s n/b) Z^(s) + Z_B, 2R)``. ``Z_B`` is the worst-batch
    adjacent budget after ``T`` learning epochs (converged by default).
    """
    if num_requests < 1:
        raise ValueError(f"need at least one request, got {num_requests}")
    z_b = bounds.z_convergent(h, T).value
    z = z_b
    ks, zs, alphas, eps_dp = [], [], [], []
    for _ in range(num_requests):
        k = least_k(h, T, target_eps_dp, delta, mode=BoundSource.SEQUENTIAL, z=z, k_max=k_max)
        alpha, eps = converted_epsilon(h, k, delta, mode=BoundSource.SEQUENTIAL, z=z)
        ks.append(k)
        zs.append(z)
        alphas.append(alpha)
        eps_dp.append(eps)
        z = bounds._next_z(h, z, k, z_b)
    return UnlearnPlan(tuple(ks), tuple(zs), target_eps_dp, delta, tuple(alphas), tuple(eps_dp))
