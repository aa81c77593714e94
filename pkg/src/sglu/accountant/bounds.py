"""Closed-form Renyi-unlearning bounds for cyclic-batch PNSGD.

Every function here is pure. Powers of the contraction factor ``c = 1 - eta*m``
are evaluated as ``exp(k * log1p(-eta*m))`` and geometric sums through
``expm1`` so that nearly non-contractive settings (``c -> 1``) stay accurate.
Epoch counts may be ``math.inf`` to request the converged limit.

The private ``_*_eps`` helpers accept numpy arrays of Renyi orders; planners
use them to scan an order grid in one call.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from sglu.accountant.types import (
    BatchOverlap,
    BoundSource,
    Hyperparams,
    RenyiBound,
    WInftyBudget,
)

# slack on eta <= 1/L so that eta = 1/L computed in floating point is accepted
_STEP_RTOL = 1e-12


def contraction_factor(h: Hyperparams) -> float:
    """Lipschitz constant ``1 - eta*m`` of one gradient step.

    Raises ``ValueError`` when ``eta > 1/L`` or ``m > L``, where the gradient
    map is no longer contractive with that constant.
    """
    if h.eta * h.L > 1.0 + _STEP_RTOL:
        raise ValueError(f"step size eta={h.eta} exceeds 1/L={1.0 / h.L}")
    if h.m > h.L * (1.0 + _STEP_RTOL):
        raise ValueError(f"strong convexity m={h.m} exceeds smoothness L={h.L}")
    if h.m == 0:
        return 1.0
    return max(1.0 - h.eta * h.m, 0.0)


def _log_c(h: Hyperparams) -> float:
    x = h.eta * h.m
    return -math.inf if x >= 1.0 else math.log1p(-x)


def _cpow(h: Hyperparams, k: float) -> float:
    """``c**k`` for iteration count ``k >= 0`` (``k`` may be infinite)."""
    if k == 0 or h.m == 0:
        return 1.0
    return math.exp(k * _log_c(h))


def _geometric_ratio(h: Hyperparams, T: float) -> float:
    """``(1 - c^(T n/b)) / (1 - c^(n/b))``, with limit ``T`` when ``m = 0``."""
    if T == 0:
        return 0.0
    if h.m == 0:
        return float(T)
    lc = _log_c(h)
    return math.expm1(T * h.batches * lc) / math.expm1(h.batches * lc)


def _printed_ratio(h: Hyperparams, T: float) -> float:
    """``(1 - c^T) / (1 - c)``, the prefactor as typeset for batch unlearning."""
    if T == 0:
        return 0.0
    if h.m == 0:
        return float(T)
    lc = _log_c(h)
    return math.expm1(T * lc) / math.expm1(lc)


def _cap(h: Hyperparams, raw: float) -> WInftyBudget:
    diameter = 2.0 * h.R
    if raw >= diameter:
        return WInftyBudget(diameter, True)
    return WInftyBudget(raw, False)


def _require_strongly_convex(h: Hyperparams, what: str) -> None:
    if h.m <= 0:
        raise ValueError(f"{what} needs m > 0; use ru_bound_convex for convex-only losses")


def _check_alpha(alpha) -> None:
    if np.any(np.asarray(alpha) <= 1):
        raise ValueError(f"Renyi order must exceed 1, got {alpha}")


def _check_epochs(T: float, name: str = "T") -> None:
    if not T >= 0:
        raise ValueError(f"{name} must be non-negative, got {T}")


def _batch_sum(h: Hyperparams, T: float, positions, printed: bool) -> float:
    prefactor = _printed_ratio(h, T) if printed else _geometric_ratio(h, T)
    total = sum(
        _cpow(h, h.batches - j - 1) * (2.0 * h.eta * h.M * s / h.b) for j, s in positions
    )
    return prefactor * total


def w_inf_batch(h: Hyperparams, T: float, overlap: BatchOverlap, *,
                printed_prefactor: bool = False) -> WInftyBudget:
    """W-infinity bound between learning runs on datasets differing in several points.

    Each ``(j, s)`` in ``overlap`` says that batch ``j`` holds ``s`` modified
    points. By default the per-epoch geometric prefactor is used, so that one
    modified point reproduces :func:`w_inf_adjacent` exactly; pass
    ``printed_prefactor=True`` for the per-iteration ``(1 - c^T)/(1 - c)`` form.
    """
    contraction_factor(h)
    _check_epochs(T)
    overlap.validate(h)
    return _cap(h, _batch_sum(h, T, overlap.positions, printed_prefactor))


def w_inf_adjacent(h: Hyperparams, T: float, j0: int) -> WInftyBudget:
    """W-infinity bound after ``T`` learning epochs on datasets differing in batch ``j0``."""
    contraction_factor(h)
    _check_epochs(T)
    if not 0 <= j0 < h.batches:
        raise ValueError(f"batch index j0={j0} outside 0..{h.batches - 1}")
    return _cap(h, _batch_sum(h, T, ((j0, 1),), False))


def w_inf_stationary_gap(h: Hyperparams, T: float, initial_gap: float) -> float:
    """Contract ``initial_gap`` by ``T`` epochs: ``c^(T n/b) * initial_gap``."""
    contraction_factor(h)
    _check_epochs(T)
    if initial_gap < 0:
        raise ValueError(f"initial_gap must be non-negative, got {initial_gap}")
    return _cpow(h, T * h.batches) * initial_gap


def z_convergent(h: Hyperparams, T: float = math.inf) -> WInftyBudget:
    """Worst-case-batch adjacent budget; the converged limit by default."""
    _require_strongly_convex(h, "z_convergent")
    return w_inf_adjacent(h, T, h.batches - 1)


def z_nonconvergent(h: Hyperparams, T: float) -> WInftyBudget:
    """Initial unlearning budget when learning stopped after ``T`` epochs.

    Adds the residual ``2R c^(T n/b)`` distance to stationarity to the
    batch-position-free adjacent budget.
    """
    _require_strongly_convex(h, "z_nonconvergent")
    residual = 2.0 * h.R * _cpow(h, T * h.batches)
    adjacent = w_inf_adjacent(h, T, h.batches - 1).value
    return _cap(h, residual + adjacent)


def _gauss_eps(h: Hyperparams, alpha, z: float, epochs: float):
    """``alpha z^2 / (2 eta sigma^2) * c^(2 epochs n/b)``."""
    return alpha * z * z / (2.0 * h.eta * h.sigma**2) * _cpow(h, 2.0 * epochs * h.batches)


def _nonconvergent_eps(h: Hyperparams, T: float, K: float, alpha):
    z = z_nonconvergent(h, T).value
    eps1 = _gauss_eps(h, 2.0 * alpha, 2.0 * h.R, T)
    eps2 = _gauss_eps(h, 2.0 * alpha, z, K)
    return (alpha - 0.5) / (alpha - 1.0) * (eps1 + eps2)


def _convergent_eps(h: Hyperparams, K: float, alpha, z: float | None = None):
    if z is None:
        z = z_convergent(h).value
    return _gauss_eps(h, alpha, z, K)


def _random_batch_eps(h: Hyperparams, T: float, K: float, alpha):
    zs = np.array([w_inf_adjacent(h, T, j).value for j in range(h.batches)])
    if h.batches == 1:
        return _gauss_eps(h, alpha, zs[0], K)
    alpha = np.asarray(alpha, dtype=float)
    per_batch = np.stack([_gauss_eps(h, alpha, z, K) for z in zs])
    eps = (logsumexp((alpha - 1.0) * per_batch, axis=0) - math.log(h.batches)) / (alpha - 1.0)
    # log-mean-exp lies between min and max; clip rounding spill-over
    eps = np.clip(eps, per_batch.min(axis=0), per_batch.max(axis=0))
    return eps if eps.ndim else float(eps)


def _convex_eps(h: Hyperparams, T: float, K: float, alpha):
    z = min(2.0 * h.eta * h.M * T / h.b, 2.0 * h.R)
    return alpha * z * z / (2.0 * h.eta * h.sigma**2) * (h.b / (K * h.n))


def ru_bound_nonconvergent(h: Hyperparams, T: float, K: float, alpha: float) -> RenyiBound:
    """RU bound after ``T`` learning and ``K`` unlearning epochs, no convergence assumed.

    Combines the learning residual and the unlearning term at order ``2*alpha``
    through the weak triangle inequality.
    """
    _check_alpha(alpha)
    _require_strongly_convex(h, "ru_bound_nonconvergent")
    contraction_factor(h)
    _check_epochs(K, "K")
    return RenyiBound(alpha, float(_nonconvergent_eps(h, T, K, alpha)), BoundSource.NONCONVERGENT)


def ru_bound_convergent(h: Hyperparams, K: float, alpha: float, *,
                        z: float | None = None) -> RenyiBound:
    """RU bound after ``K`` unlearning epochs started from the stationary law.

    ``z`` overrides the initial W-infinity budget (sequential requests pass
    their running budget here).
    """
    _check_alpha(alpha)
    _require_strongly_convex(h, "ru_bound_convergent")
    contraction_factor(h)
    _check_epochs(K, "K")
    source = BoundSource.CONVERGENT if z is None else BoundSource.SEQUENTIAL
    return RenyiBound(alpha, float(_convergent_eps(h, K, alpha, z)), source)


def ru_bound_random_batch(h: Hyperparams, T: float, K: float, alpha: float) -> RenyiBound:
    """RU bound averaged over the uniformly random batch holding the modified point.

    Pass ``T=math.inf`` for the converged-learning version.
    """
    _check_alpha(alpha)
    _require_strongly_convex(h, "ru_bound_random_batch")
    contraction_factor(h)
    _check_epochs(K, "K")
    return RenyiBound(alpha, float(_random_batch_eps(h, T, K, alpha)), BoundSource.RANDOM_BATCH)


def ru_bound_convex(h: Hyperparams, T: float, K: float, alpha: float) -> RenyiBound:
    """RU bound without strong convexity; decays like ``1/K``.

    Intended for ``m = 0``. It stays valid (though loose) for ``m > 0`` because a
    contraction with ``c < 1`` is also one with ``c = 1``.
    """
    _check_alpha(alpha)
    contraction_factor(h)
    _check_epochs(T)
    if not K >= 1:
        raise ValueError(f"convex-only bound needs K >= 1, got {K}")
    return RenyiBound(alpha, float(_convex_eps(h, T, K, alpha)), BoundSource.CONVEX_ONLY)


def _next_z(h: Hyperparams, z: float, K: float, z_b: float) -> float:
    return min(_cpow(h, K * h.batches) * z + z_b, 2.0 * h.R)


def sequential_z(h: Hyperparams, ks, *, z_b: float | None = None) -> list[float]:
    """Budgets ``Z^(1..S)`` for sequential requests unlearned with ``ks`` epochs each.

    ``Z^(1) = Z_B`` and ``Z^(s+1) = min(c^(K_s n/b) Z^(s) + Z_B, 2R)``; the last
    entry of ``ks`` does not enter the trace. ``z_b`` defaults to the converged
    adjacent budget.
    """
    _require_strongly_convex(h, "sequential_z")
    contraction_factor(h)
    ks = list(ks)
    if not ks:
        raise ValueError("ks must be non-empty")
    if any(k < 0 for k in ks):
        raise ValueError(f"epoch counts must be non-negative, got {ks}")
    if z_b is None:
        z_b = z_convergent(h).value
    z_b = min(z_b, 2.0 * h.R)
    zs = [z_b]
    for k in ks[:-1]:
        zs.append(_next_z(h, zs[-1], k, z_b))
    return zs


def ru_to_dp(eps_ru, alpha, delta: float):
    """Convert an ``(alpha, eps)`` Renyi guarantee to ``(eps', delta)``."""
    _check_alpha(alpha)
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return eps_ru + math.log(1.0 / delta) / (alpha - 1.0)
