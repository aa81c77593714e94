"""Accountants of the two full-batch baselines.

* Delete-to-Descent (D2D): gradient descent with step ``2/(L+m)`` followed by
  Gaussian output perturbation, in the variant that keeps a non-private
  internal state and the one that does not.
* Langevin unlearning (LU): full-batch projected noisy GD analysed through
  log-Sobolev contraction, with ``C_LSI = 2 sigma^2 / m``.

Both are used exactly as published, including D2D's add/remove adjacency.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from sglu.accountant.planners import (
    K_MAX,
    _smallest_feasible,
    bisect_sigma,
    optimize_alpha,
)
from sglu.accountant.types import BoundSource, RenyiBound, UnlearnPlan


@dataclasses.dataclass(frozen=True)
class D2DNoise:
    sigma: float
    I: int
    iterations: int
    gamma: float
    eta: float
    learn_iterations: float | None
    source: BoundSource


def _d2d_gamma(m: float, L: float) -> float:
    if not 0 < m < L:
        raise ValueError(f"D2D needs 0 < m < L, got m={m}, L={L}")
    return (L - m) / (L + m)


def d2d_min_iterations(*, m: float, L: float, eps: float, delta: float, d: int) -> float:
    """Lower bound on ``I`` for D2D without internal state (real-valued)."""
    gamma = _d2d_gamma(m, L)
    a = 2.0 * math.log(2.0 / delta)
    gap = math.sqrt(a + eps) - math.sqrt(a)
    return math.log(math.sqrt(2.0 * d) / (1.0 - gamma) / gap) / math.log(1.0 / gamma)


def d2d_sigma(*, m: float, L: float, M: float, n: int, eps: float, delta: float,
              I: int | None = None, with_internal_state: bool, d: int | None = None,
              R: float | None = None, request: int = 1) -> D2DNoise:
    """Output-perturbation noise of D2D for ``I`` descent steps per request.

    Without internal state the dimension ``d`` is required; ``I`` then defaults
    to the least integer meeting the published lower bound, and ``iterations``
    adds the request-dependent warm-up ``log(log(4 d i / delta)) / log(1/gamma)``
    for request number ``request``.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    gamma = _d2d_gamma(m, L)
    eta = 2.0 / (L + m)
    log_inv_gamma = math.log(1.0 / gamma)
    learn = None

    if with_internal_state:
        if I is None or I < 1:
            raise ValueError("D2D with internal state needs I >= 1 descent steps")
        g = gamma**I
        ld = math.log(1.0 / delta)
        sigma = 4.0 * math.sqrt(2.0) * M * g / (
            m * n * (1.0 - g) * (math.sqrt(ld + eps) - math.sqrt(ld)))
        iterations = int(I)
        source = BoundSource.D2D_THM9
    else:
        if d is None:
            raise ValueError("D2D without internal state needs the dimension d")
        i_min = d2d_min_iterations(m=m, L=L, eps=eps, delta=delta, d=d)
        if I is None:
            I = max(1, math.ceil(i_min))
        elif I < i_min:
            raise ValueError(f"I={I} is below the required {i_min:.3f}")
        if request < 1:
            raise ValueError(f"request index must be >= 1, got {request}")
        g = gamma**I
        a = 2.0 * math.log(2.0 / delta)
        sigma = 8.0 * M * g / (
            m * n * (1.0 - g) * (math.sqrt(a + 3.0 * eps) - math.sqrt(a + 2.0 * eps)))
        extra = math.log(math.log(4.0 * d * request / delta)) / log_inv_gamma
        iterations = math.ceil(I + extra)
        source = BoundSource.D2D_THM28
    if R is not None:
        learn = I + math.log(2.0 * R * m * n / (2.0 * M)) / log_inv_gamma
    return D2DNoise(sigma, int(I), int(iterations), gamma, eta, learn, source)


def d2d_cumulative_iterations(*, m: float, L: float, M: float, n: int, eps: float,
                              delta: float, d: int, num_requests: int) -> list[int]:
    """Per-request descent steps of stateless D2D over a request stream."""
    return [
        d2d_sigma(m=m, L=L, M=M, n=n, eps=eps, delta=delta, d=d,
                  with_internal_state=False, request=i).iterations
        for i in range(1, num_requests + 1)
    ]


def lu_learning_rdp(*, m: float, M: float, n: int, sigma: float, eta: float, S: int,
                    T: float, alpha):
    """Group-``S`` RDP of full-batch PNGD learning after ``T`` iterations."""
    base = 4.0 * alpha * S**2 * M**2 / (m * sigma**2 * n**2)
    return base * -math.expm1(-m * eta * T) if math.isfinite(T) else base


def _lu_eps(m, M, n, sigma, eta, S, K, alpha):
    return np.exp(-m * eta * K / alpha) * lu_learning_rdp(
        m=m, M=M, n=n, sigma=sigma, eta=eta, S=S, T=math.inf, alpha=alpha)


def lu_bound(*, m: float, M: float, n: int, sigma: float, eta: float, S: int, K: float,
             alpha: float) -> RenyiBound:
    """RU bound of Langevin unlearning after ``K`` full-batch iterations, ``S`` points."""
    if not alpha > 1:
        raise ValueError(f"Renyi order must exceed 1, got {alpha}")
    if not m > 0:
        raise ValueError("Langevin unlearning bound needs m > 0")
    return RenyiBound(alpha, float(_lu_eps(m, M, n, sigma, eta, S, K, alpha)), BoundSource.LU)


def lu_least_k(*, m: float, M: float, n: int, sigma: float, eta: float, S: int,
               target_eps_dp: float, delta: float, k_max: int = K_MAX) -> int:
    """Least ``K`` (allowing ``K = 0``) meeting the converted LU bound."""
    def feasible(k):
        fn = lambda a: _lu_eps(m, M, n, sigma, eta, S, k, a)  # noqa: E731
        return optimize_alpha(fn, delta, vectorized=True)[1] <= target_eps_dp

    if feasible(0):
        return 0
    return _smallest_feasible(feasible, k_max)


def lu_sigma_search(*, m: float, M: float, n: int, eta: float, S: int, K_budget: int,
                    target_eps_dp: float, delta: float) -> float:
    """Smallest LU noise scale meeting the target within ``K_budget`` iterations."""
    def feasible(sigma):
        fn = lambda a: _lu_eps(m, M, n, sigma, eta, S, K_budget, a)  # noqa: E731
        return optimize_alpha(fn, delta, vectorized=True)[1] <= target_eps_dp

    return bisect_sigma(feasible)


def lu_sequential_eps(*, m: float, M: float, n: int, sigma: float, eta: float, S: int,
                      ks, alpha):
    """LU bound after the last of several sequential requests, as a function of order.

    Each earlier request enters through the weak triangle inequality, which
    doubles its Renyi order: the initial divergence of request ``s`` is
    ``(a - 1/2)/(a - 1) * eps_{s-1}(2a) + eps_0(2a - 1)``, and ``K_s``
    iterations contract it by ``exp(-m eta K_s / a)``.
    """
    ks = list(ks)
    alpha = np.asarray(alpha, dtype=float)

    def eps0(a):
        return lu_learning_rdp(m=m, M=M, n=n, sigma=sigma, eta=eta, S=S, T=math.inf, alpha=a)

    def after(s, a):
        if s == 0:
            start = eps0(a)
        else:
            start = (a - 0.5) / (a - 1.0) * after(s - 1, 2.0 * a) + eps0(2.0 * a - 1.0)
        return np.exp(-m * eta * ks[s] / a) * start

    return after(len(ks) - 1, alpha)


def lu_sequential_plan(*, m: float, M: float, n: int, sigma: float, eta: float, S: int,
                       num_requests: int, target_eps_dp: float, delta: float,
                       k_max: int = K_MAX) -> UnlearnPlan:
    """Greedy per-request iteration counts for LU over a stream of ``S``-point requests.

    The returned plan has no W-infinity trace (``zs`` is empty).
    """
    ks: list[int] = []
    alphas, eps_dp = [], []

    def converted(k):
        fn = lambda a: lu_sequential_eps(  # noqa: E731
            m=m, M=M, n=n, sigma=sigma, eta=eta, S=S, ks=ks + [k], alpha=a)
        return optimize_alpha(fn, delta, vectorized=True)

    for _ in range(num_requests):
        if converted(0)[1] <= target_eps_dp:
            k = 0
        else:
            k = _smallest_feasible(lambda k: converted(k)[1] <= target_eps_dp, k_max)
        alpha, eps = converted(k)
        ks.append(k)
        alphas.append(alpha)
        eps_dp.append(eps)
    return UnlearnPlan(tuple(ks), (), target_eps_dp, delta, tuple(alphas), tuple(eps_dp))
