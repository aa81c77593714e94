"""Desk-scale oracles for the accountant and the PNSGD engine.

Noisy gradient descent on a quadratic loss without projection is a linear
Gaussian recursion, so the laws of the learned and unlearned parameters are
Gaussian with computable means and variances, and their Renyi divergence is
exact. Where projection matters, the engine is checked instead against the
per-iteration W-infinity recursion using two chains driven by the same noise.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable

import numpy as np

from sglu import accountant
from sglu.accountant import Hyperparams
from sglu.data import Dataset
from sglu.model import LogisticModel, QuadraticModel
from sglu.optimizer import BatchSchedule, make_streams, pnsgd_step, project


@dataclasses.dataclass(frozen=True)
class GaussianPair:
    """Two isotropic Gaussians sharing the per-coordinate variance ``var``."""

    mu1: np.ndarray
    mu2: np.ndarray
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError(f"variance must be positive, got {self.var}")
        object.__setattr__(self, "mu1", np.atleast_1d(np.asarray(self.mu1, dtype=float)))
        object.__setattr__(self, "mu2", np.atleast_1d(np.asarray(self.mu2, dtype=float)))


def gaussian_renyi(pair: GaussianPair, alpha: float) -> float:
    """``D_alpha`` between the two laws; symmetric because the variances agree."""
    if not alpha > 1:
        raise ValueError(f"Renyi order must exceed 1, got {alpha}")
    diff = pair.mu1 - pair.mu2
    return float(alpha * (diff @ diff) / (2.0 * pair.var))


def mc_gaussian_renyi(pair: GaussianPair, alpha: float, samples: int, rng=None,
                      chunk: int = 1_000_000) -> tuple[float, float]:
    """Monte-Carlo ``D_alpha(P1 || P2)`` from exact density ratios under ``P2``.

    Returns ``(estimate, standard_error)``; the error uses the delta method on
    ``log E[(p1/p2)^alpha]``.
    """
    rng = np.random.default_rng(rng)
    sd = math.sqrt(pair.var)
    total = total_sq = 0.0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        x = pair.mu2 + sd * rng.standard_normal((size, len(pair.mu2)))
        log_ratio = (np.sum((x - pair.mu2) ** 2, axis=1)
                     - np.sum((x - pair.mu1) ** 2, axis=1)) / (2.0 * pair.var)
        r = np.exp(alpha * log_ratio)
        total += r.sum()
        total_sq += (r * r).sum()
        done += size
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    se = math.sqrt(var / samples) / mean / (alpha - 1.0)
    return math.log(mean) / (alpha - 1.0), se


@dataclasses.dataclass(frozen=True)
class ChainTrace:
    ks: np.ndarray
    exact: np.ndarray
    bound: np.ndarray
    alpha: float
    hyperparams: Hyperparams
    # alpha * gap_k^2 / (2 eta sigma^2): the divergence the bound's own noise
    # scale assigns to the exact W-infinity gap between the two laws
    implied: np.ndarray | None = None

    @property
    def violations(self) -> int:
        return int(np.sum(self.exact > self.bound))

    def implied_violations(self, rtol: float = 1e-9) -> int:
        return int(np.sum(self.implied > self.bound * (1.0 + rtol)))


def _epoch_affine(data: np.ndarray, b: int, c: float, eta: float, m: float):
    """Mean update over one epoch of full-batch-by-batch GD: ``mu -> a*mu + shift``."""
    nb = len(data) // b
    shift = 0.0
    for j in range(nb):
        shift = c * shift + eta * m * data[j * b:(j + 1) * b].mean()
    return c**nb, shift


def oracle_unprojected_chain(m: float, eta: float, sigma: float, K: int, d0, d0_prime, *,
                             b: int | None = None, alpha: float = 2.0, R: float = 1e6,
                             data_radius: float | None = None,
                             bound_fn: Callable | None = None) -> ChainTrace:
    """Exact divergence of unlearning versus retraining for a 1-D quadratic loss.

    ``d0`` and ``d0_prime`` are scalars (one data point) or equal-length arrays
    of data points forming an adjacent pair; batches are consecutive blocks of
    ``b``. Learning is taken as converged, so unlearning starts from the
    stationary Gaussian law on ``d0``; after ``k`` epochs on ``d0_prime`` its
    law is compared with the stationary law on ``d0_prime``. The bound side is
    the accountant's converged bound with ``M = m * data_radius`` (default: the
    largest absolute data value). Raises ``ValueError`` if the projection
    radius ``R`` would plausibly bind, which would break exactness.
    """
    data = np.atleast_1d(np.asarray(d0, dtype=float))
    data_p = np.atleast_1d(np.asarray(d0_prime, dtype=float))
    if data.shape != data_p.shape:
        raise ValueError("adjacent datasets must have the same size")
    n = len(data)
    b = n if b is None else b
    if data_radius is None:
        data_radius = float(max(np.abs(data).max(), np.abs(data_p).max()))
    model = QuadraticModel(m, data_radius)
    L, _, M = model.constants()
    h = Hyperparams(n=n, b=b, eta=eta, sigma=sigma, m=m, L=L, M=M, R=R)
    c = accountant.contraction_factor(h)

    # stationary law of the per-iteration chain at epoch boundaries
    a, shift = _epoch_affine(data, b, c, eta, m)
    _, shift_p = _epoch_affine(data_p, b, c, eta, m)
    mu_d = shift / (1.0 - a)
    mu_dp = shift_p / (1.0 - a)
    var = 2.0 * eta * sigma**2 / (1.0 - c * c)
    # the mean gap is linear in the data difference; computing it from that
    # difference avoids cancelling two O(1) means
    gap = _epoch_affine(data - data_p, b, c, eta, m)[1] / (1.0 - a)

    reach = max(abs(mu_d), abs(mu_dp), float(np.abs(data).max()), float(np.abs(data_p).max()))
    if R < reach + 12.0 * math.sqrt(var):
        raise ValueError(f"projection radius R={R} may bind; exact Gaussian propagation invalid")

    ks = np.arange(1, K + 1)
    exact = np.empty(K)
    bound = np.empty(K)
    implied = np.empty(K)
    v = var
    nb = n // b
    for i, k in enumerate(ks):
        # unlearning chain versus the retraining chain held at its stationary
        # law: both see the same batches of d0_prime, so the data terms cancel
        for _ in range(nb):
            gap = c * gap
            v = c * c * v + 2.0 * eta * sigma**2
        exact[i] = gaussian_renyi(GaussianPair(gap, 0.0, v), alpha)
        implied[i] = alpha * gap * gap / (2.0 * eta * sigma**2)
        if bound_fn is None:
            bound[i] = accountant.ru_bound_convergent(h, int(k), alpha).epsilon
        else:
            bound[i] = bound_fn(h, int(k), alpha)
    return ChainTrace(ks, exact, bound, alpha, h, implied)


def fit_log_slope(ks, values) -> float:
    """Least-squares slope of ``log(values)`` against ``ks``."""
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    return float(np.polyfit(ks, np.log(values), 1)[0])


@dataclasses.dataclass(frozen=True)
class GapReport:
    max_violation: float
    max_epoch_violation: float
    gaps: np.ndarray


def coupled_gap_check(model, dataset: Dataset, dataset_prime: Dataset, schedule: BatchSchedule,
                      epochs: int, *, eta: float, sigma: float, R: float, seed=0,
                      init_scale: float = 1.0) -> GapReport:
    """Run two PNSGD chains with shared initialisation and noise on adjacent data.

    The per-iteration gap must satisfy
    ``gap' <= c * gap + 2 eta M S_j / b`` where ``S_j`` counts the rows of
    batch ``j`` that differ; the largest excess over that recursion is reported
    (and likewise for the per-epoch form).
    """
    if dataset.features.shape != dataset_prime.features.shape:
        raise ValueError("adjacent datasets must have the same shape")
    L, m, M = model.constants()
    if eta * L > 1.0 + 1e-12:
        raise ValueError("coupling recursion needs eta <= 1/L")
    c = 1.0 - eta * m
    differs = np.any(dataset.features != dataset_prime.features, axis=1) | (
        dataset.labels != dataset_prime.labels)
    b = schedule.b
    increments = np.array([2.0 * eta * M * differs[batch].sum() / b for batch in schedule.batches])
    nb = len(schedule.batches)
    epoch_increment = sum(c ** (nb - j - 1) * inc for j, inc in enumerate(increments))

    streams = make_streams(seed)
    w = project(init_scale * streams.init.standard_normal(dataset.dim), R)
    w_p = w.copy()
    X, y = dataset.features, dataset.labels
    Xp, yp = dataset_prime.features, dataset_prime.labels
    gaps = [0.0]
    worst = worst_epoch = -math.inf
    for _ in range(epochs):
        epoch_start = gaps[-1]
        for j, batch in enumerate(schedule.batches):
            noise = streams.noise.standard_normal(dataset.dim)
            w = pnsgd_step(w, model, X[batch], y[batch], eta=eta, sigma=sigma, R=R, noise=noise)
            w_p = pnsgd_step(w_p, model, Xp[batch], yp[batch], eta=eta, sigma=sigma, R=R,
                             noise=noise)
            gap = float(np.linalg.norm(w - w_p))
            worst = max(worst, gap - (c * gaps[-1] + increments[j]))
            gaps.append(gap)
        worst_epoch = max(worst_epoch, gaps[-1] - (c**nb * epoch_start + epoch_increment))
    return GapReport(worst, worst_epoch, np.array(gaps))


def finite_diff_suite(model, probes: int, rng=None, *, step: float = 1e-6, dim: int = 5,
                      weight_scale: float = 2.0) -> float:
    """Worst relative error of the analytic per-sample gradient against central differences."""
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(probes):
        w = weight_scale * rng.standard_normal(dim)
        x = rng.standard_normal(dim)
        x /= np.linalg.norm(x)
        y = rng.choice((-1.0, 1.0))
        g = model.grad_clipped(w, x, y)
        fd = np.empty(dim)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = step
            fd[i] = (model.loss(w + e, x, y) - model.loss(w - e, x, y)) / (2.0 * step)
        err = np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-12)
        worst = max(worst, float(err))
    return worst


def stationarity_diagnostic(model, dataset: Dataset, schedule: BatchSchedule, *, eta: float,
                            sigma: float, R: float, epochs: int, chains: int = 200,
                            offset: float = 1.0, seed=0) -> float:
    """Largest z-score between chain ensembles started at ``+offset`` and ``-offset``.

    After burn-in both ensembles should sample the same stationary law, so
    their per-coordinate means and variances agree within Monte-Carlo error.
    """
    root = np.random.SeedSequence(seed)
    finals = []
    for sign, seq in zip((1.0, -1.0), root.spawn(2)):
        out = []
        for child in seq.spawn(chains):
            noise = make_streams(child).noise
            w = project(np.full(dataset.dim, sign * offset), R)
            for _ in range(epochs):
                for batch in schedule.batches:
                    w = pnsgd_step(w, model, dataset.features[batch], dataset.labels[batch],
                                   eta=eta, sigma=sigma, R=R,
                                   noise=noise.standard_normal(dataset.dim))
            out.append(w)
        finals.append(np.array(out))
    a, b = finals
    va, vb = a.var(axis=0, ddof=1), b.var(axis=0, ddof=1)
    se_mean = np.sqrt(va / chains + vb / chains)
    # normal-theory standard error of a sample variance
    se_var = np.sqrt(2.0 * va**2 / (chains - 1) + 2.0 * vb**2 / (chains - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        z_mean = np.abs(a.mean(axis=0) - b.mean(axis=0)) / se_mean
        z_var = np.abs(va - vb) / se_var
    # zero spread: distinct point masses are infinitely far apart, equal ones agree
    z = np.nan_to_num(np.concatenate([z_mean, z_var]), nan=0.0, posinf=np.inf)
    return float(z.max())


# --------------------------------------------------------------------------- suite


def random_quadratic_config(rng: np.random.Generator) -> dict:
    """A random adjacent pair for :func:`oracle_unprojected_chain`."""
    n = int(rng.choice((1, 2, 4, 8, 16)))
    divisors = [d for d in range(1, n + 1) if n % d == 0]
    b = int(rng.choice(divisors))
    m = float(rng.uniform(0.05, 2.0))
    eta = float(rng.uniform(0.05, 1.0)) / m
    sigma = float(rng.uniform(0.05, 2.0))
    data = rng.uniform(-1.0, 1.0, n)
    data_p = data.copy()
    data_p[rng.integers(n)] = rng.uniform(-1.0, 1.0)
    alpha = float(rng.uniform(1.1, 30.0))
    return dict(m=m, eta=eta, sigma=sigma, d0=data, d0_prime=data_p, b=b, alpha=alpha,
                data_radius=1.0)


def tight_quadratic_configs() -> list[dict]:
    """Single-point configurations where the converged bound is nearly attained.

    With ``n = b = 1`` and the data point moved across the whole ball, the
    exact divergence equals the bound times ``(1 - c^2) / 2`` and the
    gap-implied divergence equals the bound itself, so an understated bound
    is detectable.
    """
    out = []
    for m, eta_m, alpha in ((1.0, 0.9, 2.0), (0.3, 0.95, 7.0), (2.0, 0.99, 40.0)):
        out.append(dict(m=m, eta=eta_m / m, sigma=0.5, d0=np.array([1.0]),
                        d0_prime=np.array([-1.0]), b=1, alpha=alpha, data_radius=1.0))
    return out


def oracle_sandwich(configs: int = 100, K: int = 20, seed=0,
                    bound_fn: Callable | None = None) -> dict:
    """Exact-versus-bound check on ``configs`` configurations, the tight ones first."""
    rng = np.random.default_rng(seed)
    tight = tight_quadratic_configs()
    checks = failures = gap_failures = 0
    first = None
    for i in range(configs):
        cfg = tight[i] if i < len(tight) else random_quadratic_config(rng)
        trace = oracle_unprojected_chain(K=K, bound_fn=bound_fn, **cfg)
        bad = np.flatnonzero(trace.exact > trace.bound)
        checks += K
        failures += len(bad)
        if len(bad) and first is None:
            k = int(bad[0])
            first = (f"config {i}: K={trace.ks[k]} exact={trace.exact[k]:.6g} "
                     f"> bound={trace.bound[k]:.6g}")
        loose = np.flatnonzero(trace.implied > trace.bound * (1.0 + 1e-9))
        gap_failures += len(loose)
        if len(loose) and first is None:
            k = int(loose[0])
            first = (f"config {i}: K={trace.ks[k]} gap-implied={trace.implied[k]:.6g} "
                     f"> bound={trace.bound[k]:.6g}")
    return {"checks": checks, "failures": failures + gap_failures,
            "exact_violations": failures, "gap_violations": gap_failures,
            "first_failure": first}


def random_adjacent_logistic(rng: np.random.Generator, n_max: int = 64, d_max: int = 8):
    """Random adjacent unit-norm datasets plus a schedule, a model and a step size."""
    from sglu.data import UnlearnRequest, apply_request, normalize_rows
    from sglu.optimizer import make_schedule

    b = int(rng.choice((1, 2, 4, 8, 16)))
    n = b * int(rng.integers(1, n_max // b + 1))
    d = int(rng.integers(2, d_max + 1))
    X = rng.standard_normal((n, d))
    y = rng.choice((-1.0, 1.0), n)
    ds = normalize_rows(Dataset(X, y))
    S = int(rng.integers(1, min(n, 4) + 1))
    idx = rng.choice(n, size=S, replace=False)
    ds_p = apply_request(ds, UnlearnRequest(idx, seed=int(rng.integers(2**31))))
    model = LogisticModel(lam=float(rng.uniform(0.01, 0.5)))
    L = model.constants()[0]
    eta = float(rng.uniform(0.2, 1.0)) / L
    sigma = float(rng.choice((0.0, rng.uniform(0.01, 1.0))))
    R = float(rng.choice((0.5, 2.0, 100.0)))
    schedule = make_schedule(n, b, rng=rng)
    return model, ds, ds_p, schedule, dict(eta=eta, sigma=sigma, R=R)


def coupled_gap_suite(runs: int = 100, epochs: int = 5, seed=0, tol: float = 1e-10) -> dict:
    rng = np.random.default_rng(seed)
    failures = 0
    first = None
    worst = -math.inf
    for i in range(runs):
        model, ds, ds_p, schedule, kw = random_adjacent_logistic(rng)
        rep = coupled_gap_check(model, ds, ds_p, schedule, epochs, seed=int(rng.integers(2**31)),
                                **kw)
        v = max(rep.max_violation, rep.max_epoch_violation)
        worst = max(worst, v)
        if v > tol:
            failures += 1
            if first is None:
                first = f"run {i}: violation {v:.3g} with {kw}"
    return {"checks": runs, "failures": failures, "first_failure": first, "worst": worst}


def finite_diff_report(probes: int = 1000, seed=0, tol: float = 1e-5) -> dict:
    worst = max(
        finite_diff_suite(LogisticModel(lam=0.01), probes, seed),
        finite_diff_suite(QuadraticModel(1.3), max(probes // 10, 1), seed),
    )
    return {"checks": probes, "failures": int(worst > tol), "worst": worst,
            "first_failure": None if worst <= tol else f"relative error {worst:.3g} > {tol}"}


def _scaled(scale: float) -> Callable | None:
    if scale == 1.0:
        return None
    return lambda h, k, a: scale * accountant.ru_bound_convergent(h, k, a).epsilon


def run_suite(*, quick: bool = False, seed=0, bound_scale: float = 1.0) -> dict:
    """Run every oracle suite and return a JSON-serialisable report.

    ``bound_scale`` multiplies the accountant's bound on the oracle side; values
    below one emulate an unsound accountant and must make the sandwich fail.
    """
    scale = 0.2 if quick else 1.0
    suites = {
        "oracle_sandwich": oracle_sandwich(max(int(100 * scale), 5), 20, seed, _scaled(bound_scale)),
        "coupled_gap": coupled_gap_suite(max(int(100 * scale), 5), 5, seed),
        "finite_diff": finite_diff_report(max(int(1000 * scale), 50), seed),
    }
    ok = all(s["failures"] == 0 for s in suites.values())
    return {"ok": ok, "suites": suites}
