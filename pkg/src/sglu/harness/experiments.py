"""Experiment drivers: learn, unlearn one point, sequential requests, trade-off sweeps
and baseline comparisons.

Every driver returns :class:`~sglu.harness.config.ResultRow` objects whose
``eps_dp`` is recomputed from the accountant at the row's own parameters.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from sglu import accountant
from sglu.accountant import BoundSource, Hyperparams
from sglu.data import Dataset, UnlearnRequest, apply_request
from sglu.harness.config import CSV_COLUMNS, ResultRow, burn_in
from sglu.model import LogisticModel
from sglu.optimizer import RunConfig, learn, make_schedule, make_streams, unlearn


@dataclasses.dataclass(frozen=True)
class Workbench:
    """Training data, evaluation data and the logistic model fitted on them."""

    train: Dataset
    test: Dataset | None
    model: LogisticModel

    @property
    def n(self) -> int:
        return self.train.n

    @property
    def eval_set(self) -> Dataset:
        return self.test if self.test is not None else self.train

    def hyperparams(self, b: int, sigma: float, *, R: float = 100.0) -> Hyperparams:
        return Hyperparams.for_logistic(self.n, b, self.model.lam, sigma, M=self.model.clip, R=R)


def run_trial(bench: Workbench, h: Hyperparams, T: int, ks, seed) -> np.ndarray:
    """Learn for ``T`` epochs, then serve one replacement request per entry of ``ks``.

    Returns the evaluation accuracy after learning and after each request.
    Requests target distinct uniformly chosen rows.
    """
    streams = make_streams(seed)
    schedule = make_schedule(h.n, h.b, rng=streams.schedule)
    cfg = RunConfig(T=T, K=0, eta=h.eta, sigma=h.sigma, R=h.R)
    state = learn(cfg, bench.model, bench.train, schedule, streams)
    ev = bench.eval_set
    accs = [bench.model.accuracy(state.w, ev.features, ev.labels)]
    if len(ks):
        rows = streams.schedule.choice(h.n, size=len(ks), replace=False)
        data = bench.train
        for row, k in zip(rows, ks):
            request = UnlearnRequest([row], seed=int(streams.schedule.integers(2**63)))
            data = apply_request(data, request)
            state = unlearn(state, bench.model, data, schedule, int(k),
                            eta=h.eta, sigma=h.sigma, R=h.R)
            accs.append(bench.model.accuracy(state.w, ev.features, ev.labels))
    return np.array(accs)


def run_trials(bench: Workbench, h: Hyperparams, T: int, ks, trials: int, seed: int,
               workers: int | None = None) -> np.ndarray:
    """``trials x (1 + len(ks))`` accuracies from independent RNG substreams."""
    seqs = np.random.SeedSequence(seed).spawn(trials)
    workers = workers or min(trials, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, so results do not depend on scheduling
        results = list(pool.map(lambda s: run_trial(bench, h, T, ks, s), seqs))
    return np.vstack(results)


def _stats(acc: np.ndarray) -> tuple[float, float]:
    return float(acc.mean()), float(acc.std())


def learn_only(bench: Workbench, *, b: int, sigma: float, T: int | None = None,
               trials: int = 20, seed: int = 0, R: float = 100.0) -> ResultRow:
    T = burn_in(b, bench.n) if T is None else T
    h = bench.hyperparams(b, sigma, R=R)
    start = time.perf_counter()
    acc = run_trials(bench, h, T, [], trials, seed)[:, 0]
    mean, std = _stats(acc)
    return ResultRow("learn", b, sigma, requests=0, K=0, cumulative_epochs=0, acc_mean=mean,
                     acc_std=std, trials=trials, retrain_epochs=T,
                     wall_clock=time.perf_counter() - start)


def unlearn_one(bench: Workbench, *, b: int, targets, delta: float | None = None,
                T: int | None = None, k_budget: int = 1, trials: int = 20, seed: int = 0,
                R: float = 100.0, mode: BoundSource = BoundSource.NONCONVERGENT) -> list[ResultRow]:
    """Per target: plan ``sigma`` for a ``k_budget``-epoch budget, learn, unlearn one point."""
    T = burn_in(b, bench.n) if T is None else T
    delta = 1.0 / bench.n if delta is None else delta
    rows = []
    for target in targets:
        start = time.perf_counter()
        base = bench.hyperparams(b, 1.0, R=R)
        sigma = accountant.sigma_search(base, T, k_budget, target, delta, mode=mode)
        h = base.replace(sigma=sigma)
        eps = accountant.converted_epsilon(h, k_budget, delta, mode=mode, T=T)[1]
        acc = run_trials(bench, h, T, [k_budget], trials, seed)[:, -1]
        mean, std = _stats(acc)
        rows.append(ResultRow("sglu", b, sigma, target, delta, 1, k_budget, k_budget, eps, mean,
                              std, trials, T, time.perf_counter() - start))
    return rows


def sequential(bench: Workbench, *, b: int, sigma: float, target: float, requests: int,
               delta: float | None = None, T: int | None = None, trials: int = 20,
               seed: int = 0, R: float = 100.0) -> tuple[list[ResultRow], accountant.UnlearnPlan | None]:
    """Serve ``requests`` single-point replacements with the planned ``K_s``.

    Emits one row per prefix ``s = 0..requests`` of the request stream, with
    the accuracy after request ``s`` and the cumulative epochs so far.
    """
    T = burn_in(b, bench.n) if T is None else T
    delta = 1.0 / bench.n if delta is None else delta
    h = bench.hyperparams(b, sigma, R=R)
    start = time.perf_counter()
    plan = accountant.sequential_plan(h, requests, target, delta) if requests else None
    ks = list(plan.ks) if plan else []
    acc = run_trials(bench, h, T, ks, trials, seed)
    elapsed = time.perf_counter() - start
    rows = []
    total = 0
    for s in range(requests + 1):
        mean, std = _stats(acc[:, s])
        k = ks[s - 1] if s else 0
        total += k
        eps = plan.eps_dp[s - 1] if s else None
        rows.append(ResultRow("sglu", b, sigma, target, delta, s, k, total, eps, mean, std,
                              trials, T, elapsed))
    return rows, plan


def tradeoff(bench: Workbench, *, sigmas, batch_sizes, target: float = 0.01,
             delta: float | None = None, trials: int = 20, seed: int = 0,
             R: float = 100.0, burn_ins: dict | None = None) -> list[ResultRow]:
    """Sweep the ``(sigma, b)`` grid: least ``K`` for one request and the resulting accuracy."""
    delta = 1.0 / bench.n if delta is None else delta
    rows = []
    for b in batch_sizes:
        T = (burn_ins or {}).get(b, burn_in(b, bench.n))
        for sigma in sigmas:
            start = time.perf_counter()
            h = bench.hyperparams(b, sigma, R=R)
            k = accountant.least_k(h, T, target, delta, mode=BoundSource.NONCONVERGENT)
            eps = accountant.converted_epsilon(h, k, delta, mode=BoundSource.NONCONVERGENT, T=T)[1]
            acc = run_trials(bench, h, T, [k], trials, seed)[:, -1]
            mean, std = _stats(acc)
            rows.append(ResultRow("sglu", b, sigma, target, delta, 1, k, k, eps, mean, std,
                                  trials, T, time.perf_counter() - start))
    return rows


def baselines(*, n: int, lam: float, d: int, b: int, sigma: float, target: float,
              requests: int, delta: float | None = None, M: float = 1.0, R: float = 100.0,
              d2d_steps=(1, 5), lu_group: int = 10) -> list[ResultRow]:
    """Accountant-side comparison of SGLU, both D2D variants and LU at one target.

    D2D rows report the per-request noise and descent steps, with ``K`` the
    steps of the final request and ``cumulative_epochs`` the total over the
    stream. LU serves the stream in groups of ``lu_group`` points because its
    Renyi order doubles with every sequential step. No training is run, so
    accuracy columns are empty.
    """
    delta = 1.0 / n if delta is None else delta
    h = Hyperparams.for_logistic(n, b, lam, sigma, M=M, R=R)
    L, m = h.L, h.m
    rows = []

    start = time.perf_counter()
    plan = accountant.sequential_plan(h, requests, target, delta)
    rows.append(ResultRow("sglu", b, sigma, target, delta, requests, plan.ks[-1],
                          plan.cumulative_epochs, plan.eps_dp[-1],
                          wall_clock=time.perf_counter() - start))

    for steps in d2d_steps:
        start = time.perf_counter()
        noise = accountant.d2d_sigma(m=m, L=L, M=M, n=n, eps=target, delta=delta, I=steps,
                                     with_internal_state=True)
        rows.append(ResultRow("d2d_thm9", n, noise.sigma, target, delta, requests, steps,
                              steps * requests, target, wall_clock=time.perf_counter() - start))

    start = time.perf_counter()
    per_request = accountant.d2d_cumulative_iterations(
        m=m, L=L, M=M, n=n, eps=target, delta=delta, d=d, num_requests=requests)
    noise = accountant.d2d_sigma(m=m, L=L, M=M, n=n, eps=target, delta=delta, d=d,
                                 with_internal_state=False, request=requests)
    rows.append(ResultRow("d2d_thm28", n, noise.sigma, target, delta, requests, per_request[-1],
                          sum(per_request), target, wall_clock=time.perf_counter() - start))

    start = time.perf_counter()
    groups = math.ceil(requests / lu_group)
    lu = accountant.lu_sequential_plan(m=m, M=M, n=n, sigma=sigma, eta=1.0 / L,
                                       S=min(lu_group, requests), num_requests=groups,
                                       target_eps_dp=target, delta=delta)
    rows.append(ResultRow("lu", n, sigma, target, delta, requests, lu.ks[-1],
                          lu.cumulative_epochs, lu.eps_dp[-1],
                          wall_clock=time.perf_counter() - start))
    return rows


def write_rows(rows, out: str | os.PathLike | None = None) -> None:
    """Write rows as CSV with the fixed column order, to ``out`` or standard output."""
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_record())
    finally:
        if out:
            fh.close()
