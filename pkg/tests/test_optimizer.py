import math

import numpy as np
import pytest

from sglu import accountant as acc
from sglu.accountant import Hyperparams
from sglu.data import Dataset, UnlearnRequest, apply_request, synthetic
from sglu.model import LogisticModel, QuadraticModel
from sglu.optimizer import (
    ModelState,
    RunConfig,
    init_state,
    learn,
    make_schedule,
    make_streams,
    pnsgd_step,
    project,
    run_epochs,
    unlearn,
)
from sglu.verify import coupled_gap_check


def test_schedule_partition():
    s = make_schedule(6, 6, 0)
    assert len(s.batches) == 1 and sorted(s.batches[0]) == list(range(6))
    s = make_schedule(6, 2, 0)
    assert len(s.batches) == 3
    assert sorted(np.concatenate(s.batches)) == list(range(6))
    again = make_schedule(6, 2, 0)
    assert all(np.array_equal(a, b) for a, b in zip(s.batches, again.batches))
    assert s.batch_of(int(s.batches[2][0])) == 2
    for n, b in ((6, 4), (4, 5), (4, 0)):
        with pytest.raises(ValueError):
            make_schedule(n, b, 0)


def test_project():
    w = np.array([3.0, 4.0])
    assert project(w, 10.0) is w
    assert project(w, 1.0) == pytest.approx([0.6, 0.8])
    assert np.array_equal(project(np.zeros(2), 1.0), np.zeros(2))


def test_init_state():
    cfg = RunConfig(T=0, K=0, eta=0.1, sigma=0.0, R=100.0, init_mean=0.5, seed=3)
    assert np.array_equal(init_state(cfg, 0.2, 4).w, np.full(4, 0.5))
    big = RunConfig(T=0, K=0, eta=0.1, sigma=0.0, R=1.0, init_mean=5.0)
    assert np.linalg.norm(init_state(big, 0.2, 4).w) == pytest.approx(1.0)
    cfg = RunConfig(T=0, K=0, eta=0.1, sigma=0.3, R=1e9, seed=4)
    a, b = init_state(cfg, 0.2, 3), init_state(cfg, 0.2, 3)
    assert np.array_equal(a.w, b.w)


def test_init_variance_monte_carlo():
    sigma, m = 0.3, 0.2
    cfg = RunConfig(T=0, K=0, eta=0.1, sigma=sigma, R=1e9, seed=7)
    w = init_state(cfg, m, 10**5).w  # one draw, 1e5 independent coordinates
    target = 2 * sigma**2 / m
    se = target * math.sqrt(2 / (len(w) - 1))
    assert abs(w.var(ddof=1) - target) <= 3 * se


def test_init_state_convex_variance():
    cfg = RunConfig(T=0, K=0, eta=0.1, sigma=1.0, R=1e9, seed=1, init_var=4.0)
    w = init_state(cfg, 0.0, 20000).w
    assert w.var() == pytest.approx(4.0, rel=0.05)


def test_one_step_quadratic_closed_form():
    model = QuadraticModel(0.8)
    X = np.array([[0.3]])
    w = pnsgd_step(np.array([2.0]), model, X, None, eta=0.5, sigma=0.0, R=100.0,
                   noise=np.zeros(1))
    assert w[0] == pytest.approx(2.0 - 0.5 * 0.8 * (2.0 - 0.3), rel=1e-15)


def test_zero_step_size_moves_only_the_rng():
    ds = synthetic(8, 3, 1.0, 0)
    state = ModelState(np.array([0.1, 0.2, 0.3]), 0, make_streams(0).noise)
    out = run_epochs(state, LogisticModel(0.1), ds, make_schedule(8, 4, 0), 2,
                     eta=0.0, sigma=1.0, R=10.0)
    assert np.array_equal(out.w, state.w)
    assert out.epoch == 2
    assert state.rng.standard_normal() != make_streams(0).noise.standard_normal()


def test_deterministic_gd_converges():
    ds = synthetic(64, 4, 0.5, 2)
    model = LogisticModel(lam=0.1)
    L = model.constants()[0]
    state = learn(RunConfig(T=2000, K=0, eta=1 / L, sigma=0.0, R=100.0), model, ds,
                  make_schedule(64, 64, 0))
    assert np.linalg.norm(model.batch_gradient(state.w, ds.features, ds.labels)) <= 1e-6


def test_projection_every_iteration():
    ds = synthetic(32, 4, 2.0, 0)
    model = LogisticModel(0.01)
    state = init_state(RunConfig(T=0, K=0, eta=1.0, sigma=1.0, R=0.5), 0.01, 4)
    schedule = make_schedule(32, 4, 0)
    for _ in range(20):
        state = run_epochs(state, model, ds, schedule, 1, eta=1 / 0.26, sigma=1.0, R=0.5)
        assert np.linalg.norm(state.w) <= 0.5 + 1e-12


def test_run_epochs_validation():
    ds = synthetic(8, 3, 1.0, 0)
    state = ModelState(np.zeros(2), 0, make_streams(0).noise)
    with pytest.raises(ValueError):
        run_epochs(state, LogisticModel(0.1), ds, make_schedule(8, 4, 0), 1, eta=1, sigma=1, R=1)
    state = ModelState(np.zeros(3), 0, make_streams(0).noise)
    with pytest.raises(ValueError):
        run_epochs(state, LogisticModel(0.1), ds, make_schedule(4, 4, 0), 1, eta=1, sigma=1, R=1)
    bad = Dataset(np.full((8, 3), np.nan), np.ones(8))
    with pytest.raises(ValueError):
        run_epochs(state, LogisticModel(0.1), bad, make_schedule(8, 4, 0), 1, eta=1, sigma=1, R=1)


def test_determinism_and_unlearn_identity():
    ds = synthetic(32, 4, 1.0, 0)
    model = LogisticModel(0.1)
    cfg = RunConfig(T=3, K=0, eta=2.0, sigma=0.2, R=10.0, seed=5)
    schedule = make_schedule(32, 8, 1)
    a = learn(cfg, model, ds, schedule)
    b = learn(cfg, model, ds, schedule)
    assert np.array_equal(a.w, b.w)
    same = unlearn(a.copy(), model, ds, schedule, 0, eta=2.0, sigma=0.2, R=10.0)
    assert np.array_equal(same.w, a.w)
    # unlearning on unchanged data is the same code path as more learning
    more = learn(RunConfig(T=5, K=0, eta=2.0, sigma=0.2, R=10.0, seed=5), model, ds, schedule)
    cont = unlearn(b, model, ds, schedule, 2, eta=2.0, sigma=0.2, R=10.0)
    assert np.array_equal(more.w, cont.w)


def test_unlearn_reshuffle_option():
    ds = synthetic(32, 4, 1.0, 0)
    model = LogisticModel(0.1)
    schedule = make_schedule(32, 8, 1)
    state = learn(RunConfig(T=1, K=0, eta=2.0, sigma=0.0, R=10.0), model, ds, schedule)
    fixed = unlearn(state.copy(), model, ds, schedule, 1, eta=2.0, sigma=0.0, R=10.0)
    shuffled = unlearn(state.copy(), model, ds, schedule, 1, eta=2.0, sigma=0.0, R=10.0,
                       reshuffle_seed=99)
    assert not np.array_equal(fixed.w, shuffled.w)


def _adjacent(n=32, d=4, b=8, idx=(5,), seed=0):
    ds = synthetic(n, d, 1.0, seed)
    return ds, apply_request(ds, UnlearnRequest(idx, seed=seed + 1)), make_schedule(n, b, seed)


def test_coupled_identical_datasets_stay_together():
    ds, _, schedule = _adjacent()
    rep = coupled_gap_check(LogisticModel(0.1), ds, ds, schedule, 3, eta=2.0, sigma=0.5, R=10.0)
    assert np.all(rep.gaps == 0.0)


def test_coupled_noiseless_recursion():
    ds, dp, schedule = _adjacent(idx=(5, 6, 20))
    rep = coupled_gap_check(LogisticModel(0.1), ds, dp, schedule, 6, eta=2.0, sigma=0.0, R=10.0)
    assert rep.max_violation <= 1e-10
    assert rep.max_epoch_violation <= 1e-10
    assert rep.gaps.max() > 0


def test_coupled_gap_below_accountant_budget():
    # after T epochs the coupled gap of one modified point never exceeds the
    # adjacent budget for the batch that holds it
    ds, dp, schedule = _adjacent(n=48, b=8, idx=(11,))
    model = LogisticModel(0.2)
    L, m, M = model.constants()
    h = Hyperparams(n=48, b=8, eta=1 / L, sigma=0.3, m=m, L=L, M=M, R=10.0)
    j0 = schedule.batch_of(11)
    for T in (1, 2, 5):
        rep = coupled_gap_check(model, ds, dp, schedule, T, eta=h.eta, sigma=0.3, R=10.0, seed=T,
                                init_scale=0.0)
        assert rep.gaps[-1] <= acc.w_inf_adjacent(h, T, j0).value + 1e-12


def test_identical_data_contraction_rate():
    # two chains on the same data from different starts contract by c per step
    ds = synthetic(16, 3, 1.0, 0)
    model = LogisticModel(0.2)
    L, m, _ = model.constants()
    eta = 1 / L
    schedule = make_schedule(16, 4, 0)
    rng = np.random.default_rng(0)
    w, v = rng.standard_normal(3), rng.standard_normal(3)
    for batch in schedule.batches * 5:
        noise = rng.standard_normal(3)
        w2 = pnsgd_step(w, model, ds.features[batch], ds.labels[batch], eta=eta, sigma=0.4, R=5.0, noise=noise)
        v2 = pnsgd_step(v, model, ds.features[batch], ds.labels[batch], eta=eta, sigma=0.4, R=5.0, noise=noise)
        assert np.linalg.norm(w2 - v2) <= (1 - eta * m) * np.linalg.norm(w - v) + 1e-12
        w, v = w2, v2
