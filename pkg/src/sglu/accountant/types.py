"""Value types shared by the bound evaluators and planners."""

from __future__ import annotations

import dataclasses
import enum
import math
from collections.abc import Sequence


class BoundSource(str, enum.Enum):
    """Which accounting result produced a :class:`RenyiBound`."""

    NONCONVERGENT = "nonconvergent"
    CONVERGENT = "convergent"
    RANDOM_BATCH = "random_batch"
    CONVEX_ONLY = "convex_only"
    SEQUENTIAL = "sequential"
    D2D_THM9 = "d2d_thm9"
    D2D_THM28 = "d2d_thm28"
    LU = "lu"


@dataclasses.dataclass(frozen=True)
class Hyperparams:
    """Constants of one PNSGD learn/unlearn configuration.

    ``sigma`` is the noise scale: each iteration adds ``sqrt(2 * eta) * sigma``
    times a standard Gaussian vector. The step-size condition ``eta <= 1/L`` is
    checked lazily by :func:`contraction_factor` so that planners can build
    candidate configurations freely.
    """

    n: int
    b: int
    eta: float
    sigma: float
    m: float
    L: float
    M: float = 1.0
    R: float = 100.0

    def __post_init__(self):
        if self.n < 1 or self.b < 1:
            raise ValueError(f"n and b must be positive, got n={self.n}, b={self.b}")
        if self.b > self.n or self.n % self.b:
            raise ValueError(f"b={self.b} must divide n={self.n}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.m < 0 or self.L <= 0:
            raise ValueError(f"need m >= 0 and L > 0, got m={self.m}, L={self.L}")
        if self.M < 0:
            raise ValueError(f"M must be non-negative, got {self.M}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")

    @property
    def batches(self) -> int:
        """Number of mini-batches (iterations) per epoch, ``n // b``."""
        return self.n // self.b

    def replace(self, **changes) -> Hyperparams:
        return dataclasses.replace(self, **changes)

    @classmethod
    def for_logistic(cls, n: int, b: int, lam: float, sigma: float, *, M: float = 1.0,
                     R: float = 100.0) -> Hyperparams:
        """Constants of l2-regularised logistic regression run with ``eta = 1/L``."""
        L = 0.25 + lam
        return cls(n=n, b=b, eta=1.0 / L, sigma=sigma, m=lam, L=L, M=M, R=R)


@dataclasses.dataclass(frozen=True)
class RenyiBound:
    alpha: float
    epsilon: float
    source: BoundSource

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError(f"Renyi order must exceed 1, got {self.alpha}")
        if self.epsilon < 0 or math.isnan(self.epsilon):
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")


@dataclasses.dataclass(frozen=True)
class WInftyBudget:
    """An infinity-Wasserstein distance bound, already capped at the diameter 2R."""

    value: float
    capped: bool

    def __float__(self):
        return float(self.value)


@dataclasses.dataclass(frozen=True)
class BatchOverlap:
    """Placement of the modified points: ``(batch_index, count)`` pairs."""

    positions: tuple[tuple[int, int], ...]

    def __init__(self, positions: Sequence[tuple[int, int]]):
        object.__setattr__(self, "positions", tuple((int(j), int(s)) for j, s in positions))

    @property
    def total(self) -> int:
        return sum(s for _, s in self.positions)

    def validate(self, h: Hyperparams) -> None:
        if not self.positions:
            raise ValueError("BatchOverlap needs at least one affected batch")
        seen = set()
        for j, s in self.positions:
            if j in seen:
                raise ValueError(f"batch index {j} listed more than once")
            seen.add(j)
            if not 0 <= j < h.batches:
                raise ValueError(f"batch index {j} outside 0..{h.batches - 1}")
            if not 1 <= s <= h.b:
                raise ValueError(f"batch {j}: modified count {s} outside 1..{h.b}")


@dataclasses.dataclass(frozen=True)
class UnlearnPlan:
    ks: tuple[int, ...]
    zs: tuple[float, ...]
    target_eps: float
    delta: float
    alphas: tuple[float, ...] = ()
    eps_dp: tuple[float, ...] = ()

    @property
    def cumulative_epochs(self) -> int:
        return int(sum(self.ks))
