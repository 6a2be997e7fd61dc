"""
Benchmark quantile forecasters: QGARCH two-step, realized CAViaR and the
rolling sample quantile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from rgquant.errors import ConfigurationError, InsufficientDataError, OptimizationError, SingularDesignError
from rgquant.market_data import observation_arrays
from rgquant.qmle import ParamBox, fit_recursion_qmle, recursion_filter
from rgquant.qreg import QuantileCoeffs, check_loss, solve_qr
from rgquant.realized import empirical_quantile

__all__ = [
    "CaviarParams",
    "QGarchForecaster",
    "RCaviarForecaster",
    "SampleQuantileForecaster",
    "fit_qgarch",
    "fit_rcaviar",
    "caviar_path",
    "caviar_objective",
    "sample_quantile_forecast",
]

MIN_OBS = 100
CAVIAR_BURN_IN = 50
CAVIAR_STARTS = 10
SQ_MIN_WINDOW = 20


def _returns(data) -> np.ndarray:
    if isinstance(data, np.ndarray) or (data and not hasattr(data[0], "y")):
        return np.asarray(data, dtype=float)
    return observation_arrays(data)[0]


def _qgarch_h1(y: np.ndarray) -> float:
    return math.sqrt(max(float(np.mean(y * y)), 1e-12))


@dataclass
class QGarchForecaster:
    """GARCH(1,1) in standard deviations driven by ``|y|``, followed by a
    quantile regression on ``(1, h_{i-1}, |y_{i-1}|)``."""

    omega: float
    gamma: float
    alpha: float
    coeffs: QuantileCoeffs

    def path(self, y) -> np.ndarray:
        y = _returns(y)
        return recursion_filter(self.omega, self.gamma, self.alpha * np.abs(y), _qgarch_h1(y))

    def forecast(self, data) -> float:
        y = _returns(data)
        h_n = self.path(y)[-1]
        c = self.coeffs
        return c.omega_tau + c.gamma_tau * h_n + c.alpha_tau * abs(y[-1])


def fit_qgarch(data, tau: float, seed: int = 0, box: ParamBox | None = None) -> QGarchForecaster:
    """Two-step QGARCH on daily returns (``data`` is returns or observations)."""
    y = _returns(data)
    if y.size < MIN_OBS:
        raise InsufficientDataError(f"QGARCH needs at least {MIN_OBS} returns, got {y.size}")
    box = ParamBox() if box is None else box
    lower, upper = box.lower[:3], box.upper[:3]
    ay = np.abs(y)
    p, _, _ = fit_recursion_qmle(y * y, [ay], lower, upper, seed=seed, h1=_qgarch_h1(y))
    h = recursion_filter(p[0], p[1], p[2] * ay, _qgarch_h1(y))
    X = np.column_stack([np.ones(y.size - 1), h[:-1], ay[:-1]])
    try:
        sol = solve_qr(X, y[1:], tau)
    except SingularDesignError as exc:
        raise ConfigurationError(f"degenerate QGARCH design: {exc}") from exc
    return QGarchForecaster(float(p[0]), float(p[1]), float(p[2]), QuantileCoeffs.from_array(tau, sol.coef))


@dataclass(frozen=True)
class CaviarParams:
    omega: float
    gamma: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not abs(self.gamma) < 1:
            raise ValueError(f"|gamma| must be < 1, got {self.gamma}")

    def as_array(self) -> np.ndarray:
        return np.array([self.omega, self.gamma, self.alpha, self.beta])


def caviar_path(params, y, rv, q1: float) -> np.ndarray:
    """``Q_i = omega + gamma Q_{i-1} + alpha sqrt(rv_{i-1}) + beta |y_{i-1}|``, ``Q_1 = q1``."""
    om, ga, al, be = (params.as_array() if isinstance(params, CaviarParams) else np.asarray(params, dtype=float))
    drive = om + al * np.sqrt(rv[:-1]) + be * np.abs(y[:-1])
    q = np.empty(y.size)
    q[0] = q1
    q[1:] = lfilter([1.0], [1.0, -ga], drive, zi=[ga * q1])[0]
    return q


def caviar_objective(params, y, rv, q1: float, tau: float, burn_in: int = CAVIAR_BURN_IN) -> float:
    """Mean check loss of the CAViaR path over the days after the burn-in."""
    y = np.asarray(y, dtype=float)
    q = caviar_path(params, y, np.asarray(rv, dtype=float), q1)
    return float(np.mean(check_loss(tau, y[burn_in:] - q[burn_in:])))


@dataclass
class RCaviarForecaster:
    params: CaviarParams
    tau: float
    objective: float
    start_objectives: list = field(default_factory=list)
    best_start: int = -1

    def path(self, data) -> np.ndarray:
        y, rv, _, _ = observation_arrays(data)
        q1 = empirical_quantile(y[:CAVIAR_BURN_IN], self.tau)
        return caviar_path(self.params, y, rv, q1)

    def forecast(self, data) -> float:
        y, rv, _, _ = observation_arrays(data)
        q_n = self.path(data)[-1]
        p = self.params
        return p.omega + p.gamma * q_n + p.alpha * math.sqrt(rv[-1]) + p.beta * abs(y[-1])


def fit_rcaviar(obs, tau: float, seed: int = 0, n_starts: int = CAVIAR_STARTS) -> RCaviarForecaster:
    """Realized CAViaR by multi-start Nelder-Mead on the check loss."""
    y, rv, _, _ = observation_arrays(obs)
    if y.size < MIN_OBS:
        raise InsufficientDataError(f"realized CAViaR needs at least {MIN_OBS} days, got {y.size}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    q_sample = empirical_quantile(y, tau)
    # normalize returns so the search is scale free
    scale = float(np.std(y)) or 1.0
    yn, rvn = y / scale, rv / scale**2
    q1 = empirical_quantile(yn[:CAVIAR_BURN_IN], tau)

    def objective(p):
        if not abs(p[1]) < 1:
            return np.inf
        val = caviar_objective(p, yn, rvn, q1, tau)
        return val if math.isfinite(val) else np.inf

    qn = q_sample / scale
    sgn = -1.0 if qn < 0 else 1.0
    rng = np.random.default_rng(seed)
    starts = [np.array([empirical_quantile(yn[CAVIAR_BURN_IN:], tau), 0.0, 0.0, 0.0])]
    for _ in range(n_starts):
        starts.append(
            np.array(
                [
                    rng.uniform(0.0, 2.0) * qn,
                    rng.uniform(0.0, 0.9),
                    sgn * rng.uniform(0.0, 2.0),
                    sgn * rng.uniform(0.0, 2.0),
                ]
            )
        )

    best = None
    start_objs = []
    for i, p0 in enumerate(starts):
        f0 = objective(p0)
        start_objs.append(f0)
        if not math.isfinite(f0):
            continue
        res = minimize(objective, p0, method="Nelder-Mead", options={"maxiter": 2000, "xatol": 1e-8, "fatol": 1e-10})
        p_hat, f_hat = (res.x, float(res.fun)) if res.fun <= f0 else (p0, f0)
        if best is None or f_hat < best[1]:
            best = (p_hat, f_hat, i)
    if best is None:
        raise OptimizationError("no realized CAViaR start produced a finite objective")
    p_hat, f_hat, i_best = best
    params = CaviarParams(p_hat[0] * scale, p_hat[1], p_hat[2], p_hat[3])
    return RCaviarForecaster(params, tau, f_hat * scale, [f * scale for f in start_objs], i_best)


def sample_quantile_forecast(window, tau: float) -> float:
    """Lower empirical tau-quantile of the trailing returns."""
    window = np.asarray(window, dtype=float)
    if window.size < SQ_MIN_WINDOW:
        raise InsufficientDataError(f"sample quantile needs at least {SQ_MIN_WINDOW} returns, got {window.size}")
    return empirical_quantile(window, tau)


@dataclass
class SampleQuantileForecaster:
    tau: float

    def forecast(self, data) -> float:
        return sample_quantile_forecast(_returns(data), self.tau)
