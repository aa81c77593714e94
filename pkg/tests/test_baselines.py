import math

import pytest

from sglu import accountant as acc
from sglu.accountant import BoundSource, Hyperparams


def test_d2d_internal_state_hand_value():
    noise = acc.d2d_sigma(m=1.0, L=3.0, M=1.0, n=100, eps=1.0, delta=1e-4, I=10,
                          with_internal_state=True)
    ld = math.log(1e4)
    expected = 4 * math.sqrt(2) * (1 / 1024) / (100 * (1023 / 1024) * (math.sqrt(ld + 1) - math.sqrt(ld)))
    assert noise.gamma == 0.5
    assert noise.eta == 0.5
    assert noise.sigma == pytest.approx(expected, rel=1e-13)
    assert noise.source is BoundSource.D2D_THM9


def test_d2d_internal_state_trends():
    kw = dict(m=0.01, L=0.26, M=1.0, n=1000, delta=1e-3, with_internal_state=True)
    s1 = acc.d2d_sigma(eps=1.0, I=1, **kw).sigma
    s5 = acc.d2d_sigma(eps=1.0, I=5, **kw).sigma
    assert s5 < s1
    assert acc.d2d_sigma(eps=1.0, I=5000, **kw).sigma < 1e-20
    assert acc.d2d_sigma(eps=1e-8, I=5, **kw).sigma > 1e3 * s5
    with pytest.raises(ValueError):
        acc.d2d_sigma(eps=0.0, I=5, **kw)
    with pytest.raises(ValueError):
        acc.d2d_sigma(eps=1.0, I=5, **{**kw, "delta": 0.0})


def test_d2d_output_only_iterations():
    m, L, eps, delta, d = 0.009728, 0.259728, 1.0, 1 / 9728, 512
    gamma = (L - m) / (L + m)
    a = 2 * math.log(2 / delta)
    i_min = math.log(math.sqrt(2 * d) / (1 - gamma) / (math.sqrt(a + eps) - math.sqrt(a))) / math.log(1 / gamma)
    assert acc.d2d_min_iterations(m=m, L=L, eps=eps, delta=delta, d=d) == pytest.approx(i_min, rel=1e-13)
    noise = acc.d2d_sigma(m=m, L=L, M=1.0, n=9728, eps=eps, delta=delta, d=d,
                          with_internal_state=False, request=3)
    assert noise.I == math.ceil(i_min)
    extra = math.log(math.log(4 * d * 3 / delta)) / math.log(1 / gamma)
    assert noise.iterations == math.ceil(noise.I + extra)
    g = gamma**noise.I
    expected = 8 * g / (m * 9728 * (1 - g) * (math.sqrt(a + 3 * eps) - math.sqrt(a + 2 * eps)))
    assert noise.sigma == pytest.approx(expected, rel=1e-13)
    with pytest.raises(ValueError):
        acc.d2d_sigma(m=m, L=L, M=1.0, n=9728, eps=eps, delta=delta, d=d,
                      with_internal_state=False, I=1)


def test_d2d_cumulative_grows_with_requests():
    per = acc.d2d_cumulative_iterations(m=0.01, L=0.26, M=1.0, n=1000, eps=1.0, delta=1e-3,
                                        d=16, num_requests=50)
    assert len(per) == 50
    assert per == sorted(per)


def test_lu_bound_hand_value():
    b = acc.lu_bound(m=0.01, M=1.0, n=10**4, sigma=0.03, eta=4.0, S=1, K=100, alpha=10.0)
    assert b.epsilon == pytest.approx(math.exp(-0.4) * 40 / (0.01 * 9e-4 * 1e8), rel=1e-12)
    assert b.source is BoundSource.LU


def test_lu_bound_limits():
    kw = dict(m=0.01, M=1.0, n=1000, sigma=0.1, eta=3.0, alpha=4.0)
    e0 = acc.lu_learning_rdp(T=math.inf, S=1, **{k: v for k, v in kw.items()})
    assert acc.lu_bound(S=1, K=0, **kw).epsilon == pytest.approx(e0, rel=1e-15)
    assert acc.lu_bound(S=2, K=7, **kw).epsilon == pytest.approx(4 * acc.lu_bound(S=1, K=7, **kw).epsilon,
                                                                 rel=1e-14)
    finite = acc.lu_learning_rdp(T=50, S=1, **kw)
    assert finite == pytest.approx(e0 * (1 - math.exp(-0.01 * 3.0 * 50)), rel=1e-13)


def test_lu_least_k_and_sigma():
    kw = dict(m=0.01, M=1.0, n=1000, eta=3.0, S=1, delta=1e-3)
    k = acc.lu_least_k(sigma=0.05, target_eps_dp=1.0, **kw)
    assert k >= 1
    sigma = acc.lu_sigma_search(K_budget=k, target_eps_dp=1.0, **kw)
    assert sigma <= 0.05 + 1e-8


def test_lu_sequential_single_request_matches_bound():
    kw = dict(m=0.01, M=1.0, n=1000, sigma=0.05, eta=3.0, S=1)
    assert acc.lu_sequential_eps(ks=[40], alpha=3.0, **kw) == pytest.approx(
        acc.lu_bound(K=40, alpha=3.0, **kw).epsilon, rel=1e-15)


def test_lu_sequential_two_requests_by_hand():
    kw = dict(m=0.01, M=1.0, n=1000, sigma=0.05, eta=3.0, S=1)
    a, k1, k2 = 3.0, 20, 30

    def e0(x):
        return 4 * x / (0.01 * 0.05**2 * 1000**2)

    first = math.exp(-0.03 * k1 / (2 * a)) * e0(2 * a)
    start = (a - 0.5) / (a - 1) * first + e0(2 * a - 1)
    expected = math.exp(-0.03 * k2 / a) * start
    assert acc.lu_sequential_eps(ks=[k1, k2], alpha=a, **kw) == pytest.approx(expected, rel=1e-13)


def test_lu_cost_grows_faster_than_sglu():
    n, lam = 9728, 0.009728
    h = Hyperparams.for_logistic(n, n, lam, 0.03)
    sglu = acc.sequential_plan(h, 6, 1.0, 1 / n)
    lu = acc.lu_sequential_plan(m=lam, M=1.0, n=n, sigma=0.03, eta=h.eta, S=1,
                                num_requests=6, target_eps_dp=1.0, delta=1 / n)
    assert sglu.ks[-1] == sglu.ks[-2]
    assert list(lu.ks) == sorted(lu.ks)
    assert lu.ks[-1] > lu.ks[1]
    assert lu.ks[-1] - lu.ks[1] > sglu.ks[-1] - sglu.ks[1]
