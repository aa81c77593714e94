"""Projected noisy SGD over a fixed cyclic mini-batch schedule.

One epoch visits the batches ``B^0 .. B^{n/b-1}`` in order; each visit applies

    w <- Proj_R(w - eta * g(w, B^j) + sqrt(2 eta) * sigma * W),    W ~ N(0, I).

Learning and unlearning share this update and the schedule; unlearning simply
runs it on the modified dataset starting from the published weights.

Random streams come from a Philox ``SeedSequence`` split into independent
substreams for initialisation, noise and shuffling, so two coupled runs can
share exactly the noise substream.
"""

from __future__ import annotations

import copy
import dataclasses
import math
from typing import NamedTuple

import numpy as np

from sglu.data import Dataset


class Streams(NamedTuple):
    init: np.random.Generator
    noise: np.random.Generator
    schedule: np.random.Generator


def make_streams(seed) -> Streams:
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return Streams(*(np.random.Generator(np.random.Philox(s)) for s in seq.spawn(3)))


@dataclasses.dataclass(frozen=True, eq=False)
class BatchSchedule:
    batches: tuple[np.ndarray, ...]
    seed: int | None = None

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.batches)

    @property
    def b(self) -> int:
        return len(self.batches[0])

    def batch_of(self, index: int) -> int:
        """Position of the batch containing data index ``index``."""
        for j, batch in enumerate(self.batches):
            if index in batch:
                return j
        raise ValueError(f"index {index} is not scheduled")


def make_schedule(n: int, b: int, seed=None, *, rng: np.random.Generator | None = None) -> BatchSchedule:
    """Uniformly random partition of ``range(n)`` into ``n // b`` batches of size ``b``."""
    if b < 1 or b > n:
        raise ValueError(f"batch size b={b} must lie in 1..n={n}")
    if n % b:
        raise ValueError(f"b={b} does not divide n={n}; truncate the dataset first")
    if rng is None:
        rng = make_streams(seed).schedule
    perm = rng.permutation(n)
    batches = tuple(np.sort(chunk) for chunk in perm.reshape(n // b, b))
    for chunk in batches:
        chunk.flags.writeable = False
    return BatchSchedule(batches, seed)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    T: int
    K: int
    eta: float
    sigma: float
    R: float
    init_mean: float = 0.0
    seed: int = 0
    # used only when m = 0, where 2 sigma^2 / m is undefined
    init_var: float = 1.0

    def __post_init__(self):
        if self.T < 0 or self.K < 0:
            raise ValueError(f"epoch counts must be non-negative, got T={self.T}, K={self.K}")


@dataclasses.dataclass
class ModelState:
    """Current weights, completed epochs and the noise stream driving later updates."""

    w: np.ndarray
    epoch: int
    rng: np.random.Generator

    def copy(self) -> ModelState:
        return ModelState(self.w.copy(), self.epoch, copy.deepcopy(self.rng))


def project(w: np.ndarray, R: float) -> np.ndarray:
    """Euclidean projection onto the ball of radius ``R``."""
    norm = float(np.linalg.norm(w))
    if norm <= R:
        return w
    return w * (R / norm)


def init_state(cfg: RunConfig, m: float, dim: int, streams: Streams | None = None) -> ModelState:
    """Draw ``N(init_mean, 2 sigma^2 / m)`` per coordinate and project into the ball."""
    if streams is None:
        streams = make_streams(cfg.seed)
    var = 2.0 * cfg.sigma**2 / m if m > 0 else cfg.init_var
    w = cfg.init_mean + math.sqrt(var) * streams.init.standard_normal(dim)
    return ModelState(project(w, cfg.R), 0, streams.noise)


def pnsgd_step(w, model, X, y, *, eta: float, sigma: float, R: float, noise) -> np.ndarray:
    """One projected noisy gradient step on a batch, with the standard-normal ``noise`` given."""
    g = model.batch_gradient(w, X, y)
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient; the data may be corrupted")
    return project(w - eta * g + math.sqrt(2.0 * eta) * sigma * noise, R)


def _check(state: ModelState, dataset: Dataset, schedule: BatchSchedule) -> None:
    if state.w.shape != (dataset.dim,):
        raise ValueError(f"weights of shape {state.w.shape} for {dataset.dim}-dim data")
    if schedule.n != dataset.n:
        raise ValueError(f"schedule covers {schedule.n} indices, dataset has {dataset.n}")


def run_epochs(state: ModelState, model, dataset: Dataset, schedule: BatchSchedule,
               epochs: int, *, eta: float, sigma: float, R: float) -> ModelState:
    """Run ``epochs`` full passes over the schedule; returns the new state.

    The input state's weights are not modified; its noise stream is advanced.
    """
    _check(state, dataset, schedule)
    X, y = dataset.features, dataset.labels
    w = state.w.copy()
    d = len(w)
    for _ in range(epochs):
        for batch in schedule.batches:
            w = pnsgd_step(w, model, X[batch], y[batch], eta=eta, sigma=sigma, R=R,
                           noise=state.rng.standard_normal(d))
    return ModelState(w, state.epoch + epochs, state.rng)


def learn(cfg: RunConfig, model, dataset: Dataset, schedule: BatchSchedule,
          streams: Streams | None = None) -> ModelState:
    """Initialise and train for ``cfg.T`` epochs."""
    m = model.constants()[1]
    state = init_state(cfg, m, dataset.dim, streams)
    return run_epochs(state, model, dataset, schedule, cfg.T, eta=cfg.eta, sigma=cfg.sigma, R=cfg.R)


def unlearn(state: ModelState, model, new_dataset: Dataset, schedule: BatchSchedule, K: int,
            *, eta: float, sigma: float, R: float, reshuffle_seed=None) -> ModelState:
    """Fine-tune published weights on the updated dataset for ``K`` epochs.

    The learning schedule is reused unless ``reshuffle_seed`` is given.
    """
    if reshuffle_seed is not None:
        schedule = make_schedule(new_dataset.n, schedule.b, reshuffle_seed)
    return run_epochs(state, model, new_dataset, schedule, K, eta=eta, sigma=sigma, R=R)
