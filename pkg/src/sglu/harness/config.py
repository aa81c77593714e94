"""Experiment configuration, workload constants and the result-row schema."""

from __future__ import annotations

import dataclasses
import math
import os

BURN_IN = {32: 10, 128: 20, 512: 50}
FULL_BATCH_BURN_IN = 1000

TARGET_EPS_GRID = (0.05, 0.1, 0.5, 1.0, 2.0, 5.0)
TRADEOFF_SIGMAS = (0.05, 0.1, 0.2, 0.5, 1.0)
TRADEOFF_BATCHES = ("32", "128", "512", "full")


@dataclasses.dataclass(frozen=True)
class Workload:
    """Logistic-regression constants of a preprocessed feature set."""

    name: str
    n: int
    lam: float
    d: int


# lambda = 1e-6 * n for both feature sets
MNIST = Workload("mnist", 11264, 0.011264, 784)
CIFAR10 = Workload("cifar10", 9728, 0.009728, 512)
WORKLOADS = {w.name: w for w in (MNIST, CIFAR10)}


def burn_in(b: int, n: int) -> int:
    """Default learning epochs for batch size ``b`` (full batch when ``b == n``)."""
    if b == n:
        return FULL_BATCH_BURN_IN
    if b in BURN_IN:
        return BURN_IN[b]
    # between tabulated sizes take the next larger one's value
    larger = [k for k in sorted(BURN_IN) if k >= b]
    return BURN_IN[larger[0]] if larger else FULL_BATCH_BURN_IN


def parse_batch_size(raw, n: int | None) -> int:
    """``"full"`` means ``n``; anything else is a positive integer."""
    if isinstance(raw, int):
        value = raw
    elif str(raw).strip().lower() == "full":
        if n is None:
            raise ValueError("batch size 'full' needs a known dataset size")
        return n
    else:
        value = int(raw)
    if value < 1:
        raise ValueError(f"batch size must be positive, got {value}")
    return value


def default_lam(n: int) -> float:
    return 1e-6 * n


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use flag spelling without dashes."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            out[key.replace("-", "_")] = value
    return out


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment command needs once data is loaded.

    Which of ``sigma`` and ``target_eps`` drives a run depends on the command:
    ``unlearn-one`` plans ``sigma`` from the target, while ``sequential`` and
    ``tradeoff`` fix ``sigma`` and plan epoch counts from the target.
    """

    b: int
    T: int
    sigma: float | None = None
    target_eps: float | None = None
    delta: float | None = None
    k_budget: int = 1
    requests: int = 1
    trials: int = 20
    seed: int = 0
    lam: float | None = None
    R: float = 100.0
    M: float = 1.0

    def __post_init__(self):
        if self.sigma is None and self.target_eps is None:
            raise ValueError("one of sigma and target_eps must be set")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.requests < 0:
            raise ValueError(f"requests must be non-negative, got {self.requests}")


CSV_COLUMNS = (
    "method", "b", "sigma", "target_eps", "delta", "requests", "K", "cumulative_epochs",
    "eps_dp", "acc_mean", "acc_std", "trials", "retrain_epochs", "wall_clock",
)


@dataclasses.dataclass
class ResultRow:
    method: str
    b: int
    sigma: float
    target_eps: float | None = None
    delta: float | None = None
    requests: int = 0
    K: int | None = None
    cumulative_epochs: int | None = None
    eps_dp: float | None = None
    acc_mean: float | None = None
    acc_std: float | None = None
    trials: int = 0
    retrain_epochs: int | None = None
    wall_clock: float = 0.0

    def __post_init__(self):
        if self.acc_mean is not None and not 0.0 <= self.acc_mean <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.acc_mean}")
        if self.acc_std is not None and self.acc_std < 0:
            raise ValueError(f"accuracy std must be non-negative, got {self.acc_std}")

    def as_record(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return "inf" if math.isinf(v) else repr(v)
            return str(v)

        return [fmt(getattr(self, name)) for name in CSV_COLUMNS]
