"""
Realized measures computed from one session of intraday log prices.

All functions accept either an :class:`~rgquant.market_data.IntradayDay` or a
plain array of log prices. Batched variants operate on a ``(days, m + 1)``
matrix of equally sampled sessions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rgquant.errors import InsufficientDataError, NumericError

__all__ = [
    "RealizedQuantileSpec",
    "empirical_quantile",
    "quantile_rank",
    "realized_variance",
    "realized_quantile",
    "realized_variance_batch",
    "realized_quantile_batch",
]


@dataclass(frozen=True)
class RealizedQuantileSpec:
    """Quantile level and self-similarity exponent of a realized quantile."""

    tau: float
    scale_exponent: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not 0.0 < self.scale_exponent < 1.0:
            raise ValueError(f"scale_exponent must lie in (0, 1), got {self.scale_exponent}")


def _log_prices(day) -> np.ndarray:
    prices = getattr(day, "log_prices", day)
    return np.asarray(prices, dtype=float)


def _increments(day) -> np.ndarray:
    dx = np.diff(_log_prices(day))
    if not np.all(np.isfinite(dx)):
        raise NumericError("non-finite intraday increment")
    return dx


def quantile_rank(tau: float, m: int) -> int:
    """1-based order statistic index ``ceil(tau * m)`` used for sample quantiles."""
    # round first so that e.g. 0.15 * 20 = 3.0000000000000004 maps to 3
    k = math.ceil(round(tau * m, 9))
    return min(max(k, 1), m)


def empirical_quantile(x, tau: float) -> float:
    """Lower sample quantile: the ``ceil(tau * m)``-th order statistic.

    This is the smallest minimizer of ``sum(rho_tau(x_i - b))`` over ``b``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("empty sample")
    k = quantile_rank(tau, x.size)
    return float(np.partition(x, k - 1)[k - 1])


def realized_variance(day) -> float:
    """Sum of squared intraday log-price increments."""
    dx = _increments(day)
    if dx.size < 1:
        raise InsufficientDataError("realized variance needs at least one increment")
    return float(np.dot(dx, dx))


def realized_quantile(day, spec: RealizedQuantileSpec | float) -> float:
    """Empirical quantile of the increments scaled up to the session horizon.

    With ``m`` increments the tick spacing is ``1/m`` of the session, so the
    sample quantile is multiplied by ``m ** H`` (``sqrt(m)`` for ``H = 0.5``).
    """
    if not isinstance(spec, RealizedQuantileSpec):
        spec = RealizedQuantileSpec(float(spec))
    dx = _increments(day)
    m = dx.size
    if m < 2:
        raise InsufficientDataError(f"realized quantile needs at least 2 increments, got {m}")
    return empirical_quantile(dx, spec.tau) * m**spec.scale_exponent


def realized_variance_batch(log_prices: np.ndarray) -> np.ndarray:
    """Realized variance of each row of a ``(days, m + 1)`` price matrix."""
    dx = np.diff(np.asarray(log_prices, dtype=float), axis=1)
    if not np.all(np.isfinite(dx)):
        raise NumericError("non-finite intraday increment")
    return np.einsum("ij,ij->i", dx, dx)


def realized_quantile_batch(log_prices: np.ndarray, taus, scale_exponent: float = 0.5) -> dict[float, np.ndarray]:
    """Realized quantiles for every row and every level in ``taus``."""
    dx = np.diff(np.asarray(log_prices, dtype=float), axis=1)
    m = dx.shape[1]
    if m < 2:
        raise InsufficientDataError(f"realized quantile needs at least 2 increments, got {m}")
    taus = [float(t) for t in taus]
    ranks = sorted({quantile_rank(t, m) - 1 for t in taus})
    part = np.partition(dx, ranks, axis=1)
    scale = m**scale_exponent
    return {t: part[:, quantile_rank(t, m) - 1] * scale for t in taus}
