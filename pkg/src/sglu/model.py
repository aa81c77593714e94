"""Loss workloads with certified smoothness, convexity and Lipschitz constants."""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.special import expit

_UNIT_TOL = 1e-6


def _check_unit(x: np.ndarray) -> None:
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > _UNIT_TOL:
        raise ValueError(f"feature row must have unit l2 norm, got {norm:.8g}")


def clip_rows(g: np.ndarray, radius: float) -> np.ndarray:
    """Project each row of ``g`` into the l2 ball of the given radius."""
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    scale = np.minimum(1.0, radius / np.maximum(norms, np.finfo(float).tiny))
    return g * scale


@dataclasses.dataclass(frozen=True)
class LogisticModel:
    """l2-regularised binary logistic regression with per-sample clipping.

    The data term of every per-sample gradient is clipped to norm ``clip``
    (``M``) before the regulariser ``lam * w`` is added, which keeps the loss
    ``lam``-strongly convex and ``(1/4 + lam)``-smooth on unit-norm features.
    """

    lam: float
    dim: int | None = None
    clip: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"regularisation weight must be positive, got {self.lam}")
        if not self.clip > 0:
            raise ValueError(f"clipping radius must be positive, got {self.clip}")

    def constants(self) -> tuple[float, float, float]:
        """``(L, m, M)``."""
        return 0.25 + self.lam, self.lam, self.clip

    def loss(self, w, x, y) -> float:
        x = np.asarray(x, dtype=float)
        _check_unit(x)
        w = np.asarray(w, dtype=float)
        margin = y * float(x @ w)
        return float(np.logaddexp(0.0, -margin) + 0.5 * self.lam * (w @ w))

    def grad_clipped(self, w, x, y) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        x = np.asarray(x, dtype=float)
        data = (expit(y * float(x @ w)) - 1.0) * y * x
        return clip_rows(data, self.clip) + self.lam * w

    def batch_gradient(self, w, X, y) -> np.ndarray:
        """Mean clipped gradient over the rows of ``X``."""
        w = np.asarray(w, dtype=float)
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(y) == 0:
            raise ValueError("batch must be non-empty")
        coef = (expit(y * (X @ w)) - 1.0) * y
        data = clip_rows(coef[:, None] * X, self.clip)
        return data.mean(axis=0) + self.lam * w

    def objective(self, w, X, y) -> float:
        """Regularised empirical risk over a dataset."""
        margins = np.asarray(y) * (np.asarray(X) @ w)
        return float(np.logaddexp(0.0, -margins).mean() + 0.5 * self.lam * (w @ w))

    def predict(self, w, X) -> np.ndarray:
        return np.where(np.asarray(X) @ w >= 0, 1.0, -1.0)

    def accuracy(self, w, X, y) -> float:
        return float(np.mean(self.predict(w, X) == np.asarray(y)))


@dataclasses.dataclass(frozen=True)
class QuadraticModel:
    """``f(x; d) = (m/2) ||x - d||^2`` over data points inside a ball of ``data_radius``.

    Gradients of two data points differ by ``m ||d - d'|| <= 2 m data_radius``,
    so the effective Lipschitz constant is ``M = m * data_radius``. Labels are
    ignored.
    """

    m: float
    data_radius: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"curvature must be positive, got {self.m}")

    def constants(self) -> tuple[float, float, float]:
        return self.m, self.m, self.m * self.data_radius

    def loss(self, w, x, y=None) -> float:
        diff = np.asarray(w, dtype=float) - np.asarray(x, dtype=float)
        return float(0.5 * self.m * (diff @ diff))

    def grad_clipped(self, w, x, y=None) -> np.ndarray:
        return self.m * (np.asarray(w, dtype=float) - np.asarray(x, dtype=float))

    def batch_gradient(self, w, X, y=None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if len(X) == 0:
            raise ValueError("batch must be non-empty")
        return self.m * (np.asarray(w, dtype=float) - X.mean(axis=0))
