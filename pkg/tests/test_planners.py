import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sglu import accountant as acc
from sglu.accountant import BoundSource, Hyperparams
from sglu.accountant.planners import ALPHA_GRID, PlannerError


def test_alpha_grid_range():
    assert ALPHA_GRID[0] == pytest.approx(1.0625)
    assert ALPHA_GRID[-1] == pytest.approx(65537.0)
    assert np.all(np.diff(ALPHA_GRID) > 0)


def test_optimize_alpha_zero_bound():
    delta = 1e-4
    alpha, eps = acc.optimize_alpha(lambda a: 0.0 * a, delta)
    assert alpha == pytest.approx(ALPHA_GRID[-1], rel=1e-6)
    assert eps <= math.log(1 / delta) / (ALPHA_GRID - 1).min() + 1e-15


def test_optimize_alpha_calculus_oracle():
    k, delta = 0.01, 1e-4
    c = math.log(1 / delta)
    alpha_star = 1 + math.sqrt(c / k)
    alpha, eps = acc.optimize_alpha(lambda a: k * a, delta)
    assert alpha == pytest.approx(alpha_star, rel=1e-4)
    assert alpha == pytest.approx(31.3, abs=0.1)
    assert eps == pytest.approx(k * alpha_star + c / (alpha_star - 1), rel=1e-9)
    assert eps == pytest.approx(0.617, abs=1e-3)
    for a in (2.0, 64.0, *ALPHA_GRID):
        assert eps <= k * a + c / (a - 1)


def test_optimize_alpha_vectorized_agrees():
    fn = lambda a: 0.3 * a**1.5  # noqa: E731
    assert acc.optimize_alpha(fn, 1e-3) == pytest.approx(acc.optimize_alpha(fn, 1e-3, vectorized=True))


def test_optimize_alpha_non_finite():
    with pytest.raises(PlannerError):
        acc.optimize_alpha(lambda a: math.inf, 0.1)


def _toy(sigma=1.0):
    # n = b and eta*m = 1/2, so c^(2n/b) = 1/4
    return Hyperparams(n=4, b=4, eta=0.5, sigma=sigma, m=1.0, L=2.0, M=1.0, R=100.0)


def test_least_k_toy_geometric():
    # with delta = 1 the conversion adds nothing, so every extra epoch divides
    # the converted bound by exactly four
    e1 = acc.converted_epsilon(_toy(), 1, 1.0)[1]
    h = _toy(sigma=math.sqrt(e1 / 0.8))
    assert acc.converted_epsilon(h, 1, 1.0)[1] == pytest.approx(0.8, rel=1e-9)
    assert acc.converted_epsilon(h, 2, 1.0)[1] == pytest.approx(0.2, rel=1e-9)
    assert acc.least_k(h, math.inf, 0.05 * (1 + 1e-9), 1.0) == 3
    assert acc.least_k(h, math.inf, 0.8 * (1 + 1e-9), 1.0) == 1


def test_least_k_monotone_in_target():
    h = Hyperparams.for_logistic(1024, 32, 0.01, 0.05)
    ks = [acc.least_k(h, 10, t, 1 / 1024, mode=BoundSource.NONCONVERGENT)
          for t in (2.0, 1.0, 0.5, 0.25, 0.1)]
    assert ks == sorted(ks)


def test_least_k_unreachable():
    h = Hyperparams(n=4, b=4, eta=0.5, sigma=0.01, m=1e-9, L=2.0, M=1.0, R=100.0)
    with pytest.raises(acc.UnreachableTargetError):
        acc.least_k(h, math.inf, 1e-3, 1e-4, k_max=64)


def test_sigma_search_large_budget_hits_floor():
    h = _toy()
    assert acc.sigma_search(h, math.inf, 10**5, 1.0, 1e-4, mode=BoundSource.CONVERGENT) == 1e-6


def test_sigma_scales_with_budget():
    # eps is proportional to (Z/sigma)^2 at every order, so doubling M (and hence
    # the uncapped Z) doubles the required sigma
    base = Hyperparams.for_logistic(512, 512, 0.05, 1.0, R=1e6)
    s1 = acc.sigma_search(base, math.inf, 1, 1.0, 1e-3, mode=BoundSource.CONVERGENT)
    s2 = acc.sigma_search(base.replace(M=2.0), math.inf, 1, 1.0, 1e-3, mode=BoundSource.CONVERGENT)
    assert s2 == pytest.approx(2 * s1, abs=3e-8)


def test_sigma_search_bracket_failure():
    h = Hyperparams(n=4, b=1, eta=0.5, sigma=1.0, m=1e-12, L=2.0, M=1.0, R=100.0)
    with pytest.raises(acc.BracketError):
        acc.sigma_search(h, 1, 1, 1e-3, 1e-4, hi_max=1e3)


def test_sigma_search_mnist_full_batch():
    n = 11264
    h = Hyperparams.for_logistic(n, n, 0.011264, 1.0)
    sigma = acc.sigma_search(h, 1000, 1, 1.0, 1 / n)
    assert sigma == pytest.approx(0.0489, rel=0.05)


@settings(max_examples=40, deadline=None)
@given(nb=st.integers(1, 16), b=st.sampled_from([1, 8, 32]), lam=st.floats(0.01, 0.5),
       target=st.floats(0.05, 5.0), T=st.integers(5, 50))
def test_planner_minimality(nb, b, lam, target, T):
    delta = 1e-4
    h = Hyperparams.for_logistic(nb * b, b, lam, 0.1)
    mode = BoundSource.NONCONVERGENT
    try:
        k = acc.least_k(h, T, target, delta, mode=mode, k_max=10**4)
    except acc.UnreachableTargetError:
        k = None
    if k is not None:
        assert acc.converted_epsilon(h, k, delta, mode=mode, T=T)[1] <= target
        if k > 1:
            assert acc.converted_epsilon(h, k - 1, delta, mode=mode, T=T)[1] > target
    sigma = acc.sigma_search(h, T, 1, target, delta, mode=mode)
    assert acc.converted_epsilon(h.replace(sigma=sigma), 1, delta, mode=mode, T=T)[1] <= target
    if sigma > 0.02:
        below = h.replace(sigma=sigma * (1 - 1e-6))
        assert acc.converted_epsilon(below, 1, delta, mode=mode, T=T)[1] > target


def test_sequential_plan_matches_hand_recursion():
    h = Hyperparams(n=6, b=2, eta=1.0, sigma=0.3, m=0.2, L=1.0, M=1.0, R=100.0)
    delta = 1e-3
    plan = acc.sequential_plan(h, 12, 0.5, delta)
    c = 0.8
    zb = 2 * h.eta * h.M / h.b / (1 - c**3)
    zs = [zb]
    for k in plan.ks[:-1]:
        zs.append(min(c ** (3 * k) * zs[-1] + zb, 2 * h.R))
    # powers of c are evaluated through log1p, so agreement is to rounding
    assert list(plan.zs) == pytest.approx(zs, rel=1e-13)
    assert plan.zs == tuple(acc.sequential_z(h, plan.ks))
    assert all(z <= 2 * h.R for z in plan.zs)
    assert plan.ks[-1] == plan.ks[-2] == plan.ks[-3]
    for z, k, e in zip(plan.zs, plan.ks, plan.eps_dp):
        assert e <= 0.5
        assert acc.least_k(h, math.inf, 0.5, delta, mode=BoundSource.SEQUENTIAL, z=z) == k
    assert plan.cumulative_epochs == sum(plan.ks)


def test_sequential_plan_single_request():
    h = Hyperparams.for_logistic(1024, 32, 0.05, 0.05)
    plan = acc.sequential_plan(h, 1, 0.5, 1e-3)
    assert plan.ks == (acc.least_k(h, math.inf, 0.5, 1e-3),)
    assert plan.zs == (acc.z_convergent(h).value,)


def test_sequential_plan_z_non_decreasing_with_constant_k():
    h = Hyperparams(n=4, b=1, eta=1.0, sigma=0.5, m=0.05, L=1.0, M=1.0, R=100.0)
    plan = acc.sequential_plan(h, 8, 1.0, 1e-3)
    assert all(b >= a for a, b in zip(plan.zs, plan.zs[1:]))
