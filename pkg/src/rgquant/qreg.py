"""
Linear quantile regression and the two-step RG / RR quantile models.

The check-loss problem ``min_b sum_i rho_tau(y_i - x_i'b)`` is a linear
program whose vertices interpolate ``p`` observations exactly. The solver
below walks those vertices: each basis is a set of ``p`` interpolated rows,
each edge releases one of them above or below the fit, and the step length is
found by an exact search over the kinks of the piecewise-linear objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from rgquant.errors import ConfigurationError, InsufficientDataError, RGQuantError, SingularDesignError
from rgquant.market_data import observation_arrays
from rgquant.qmle import GarchParams, ParamBox, filter_h, fit_qmle
from rgquant.realized import empirical_quantile

__all__ = [
    "QuantileCoeffs",
    "DesignRow",
    "QRSolution",
    "check_loss",
    "qr_objective",
    "solve_qr",
    "solve_qr_rows",
    "rg_design",
    "rr_design",
    "fit_rg",
    "fit_rr",
    "forecast_quantile",
    "TwoStepForecaster",
    "fit_two_step",
]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class QuantileCoeffs:
    tau: float
    omega_tau: float
    gamma_tau: float
    alpha_tau: float
    beta_tau: float

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("coefficients must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.omega_tau, self.gamma_tau, self.alpha_tau, self.beta_tau])

    @classmethod
    def from_array(cls, tau: float, x) -> "QuantileCoeffs":
        x = [float(v) for v in x] + [0.0] * (4 - len(x))
        return cls(float(tau), *x)


@dataclass(frozen=True)
class DesignRow:
    """Regressor vector ``(1, h, x, sqrt(ov))`` of one day and its response."""

    a: tuple
    y: float

    def __post_init__(self):
        if len(self.a) != 4 or self.a[0] != 1.0:
            raise ValueError("design rows are (1, h, x, sqrt_ov)")
        if not self.a[1] > 0 or self.a[3] < 0:
            raise ValueError("h must be positive and sqrt(ov) nonnegative")


@dataclass
class QRSolution:
    coef: np.ndarray
    residuals: np.ndarray
    basis: np.ndarray
    objective: float
    iterations: int


def check_loss(tau: float, residual):
    """``rho_tau(u) = u * (tau - 1(u < 0))``; works elementwise on arrays."""
    u = np.asarray(residual, dtype=float)
    out = u * (tau - (u < 0))
    return float(out) if out.ndim == 0 else out


def qr_objective(X, y, coef, tau: float) -> float:
    r = np.asarray(y, dtype=float) - np.asarray(X, dtype=float) @ np.asarray(coef, dtype=float)
    return float(np.sum(check_loss(tau, r)))


def _rank_check(X: np.ndarray) -> None:
    R = qr(X, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(R))
    if d.size < X.shape[1] or d[0] == 0 or d[-1] <= RANK_TOL * d[0]:
        raise SingularDesignError(f"design of shape {X.shape} is rank deficient")


def _initial_basis(X: np.ndarray, y: np.ndarray, tau: float) -> np.ndarray:
    """Pick ``p`` independent rows whose least-squares residuals sit closest
    to the tau-quantile of all residuals."""
    n, p = X.shape
    b, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ b
    order = np.argsort(np.abs(r - empirical_quantile(r, tau)), kind="stable")
    chosen: list[int] = []
    Q = np.zeros((p, 0))
    scale = np.linalg.norm(X, axis=1).max()
    for i in order:
        v = X[i] - Q @ (Q.T @ X[i])
        nv = np.linalg.norm(v)
        if nv > 1e-8 * scale:
            chosen.append(int(i))
            Q = np.column_stack([Q, v / nv])
            if len(chosen) == p:
                break
    if len(chosen) < p:
        raise SingularDesignError("could not find a nonsingular starting basis")
    return np.array(chosen)


def solve_qr(X, y, tau: float, max_iter: int | None = None) -> QRSolution:
    """Exact check-loss regression by vertex-to-vertex simplex steps.

    Non-degenerate steps use the steepest edge with an exact line search;
    after a degenerate (zero-length) step the entering and leaving choices
    follow Bland's smallest-index rule until the objective strictly drops.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, p) and y must be (n,)")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in the design")
    n, p = X.shape
    if n < p:
        raise InsufficientDataError(f"{n} rows cannot identify {p} coefficients")
    _rank_check(X)

    basis = _initial_basis(X, y, tau)
    in_basis = np.zeros(n, dtype=bool)
    side = np.ones(n)
    max_iter = max_iter or 50 * n + 1000
    ytol = 1e-12 * (1.0 + np.abs(y).max())
    bland = False

    for it in range(max_iter):
        in_basis[:] = False
        in_basis[basis] = True
        B = X[basis]
        Binv = np.linalg.inv(B)
        coef = Binv @ y[basis]
        r = y - X @ coef
        r[basis] = 0.0
        nz = ~in_basis & (np.abs(r) > ytol)
        side[nz] = np.sign(r[nz])

        w = np.where(side > 0, tau, tau - 1.0)
        w[in_basis] = 0.0
        G = X @ Binv
        c = G.T @ w
        # slope of releasing basis row k above (+) or below (-) the fit
        slopes = np.concatenate([tau + c, (1.0 - tau) - c])
        eps = 1e-11 * (1.0 + np.abs(c).max())
        neg = np.flatnonzero(slopes < -eps)
        if neg.size == 0:
            return QRSolution(coef, r, np.sort(basis), float(np.sum(check_loss(tau, r))), it)

        if bland:
            # smallest original row index, upward release first
            keys = [(basis[j % p], j // p) for j in neg]
            j = neg[min(range(len(neg)), key=lambda a: keys[a])]
        else:
            j = neg[np.argmin(slopes[neg])]
        k, sigma = j % p, (1.0 if j < p else -1.0)
        g = -sigma * G[:, k]
        g[in_basis] = 0.0

        blocking = np.flatnonzero(side * g > 0)
        blocking = blocking[~in_basis[blocking]]
        if blocking.size == 0:
            raise RGQuantError("unbounded quantile regression step")
        t = np.maximum(r[blocking] / g[blocking], 0.0)
        order = np.lexsort((blocking, t))
        slope = slopes[j]
        stop = None
        for pos in order:
            slope += abs(g[blocking[pos]])
            if bland or slope >= -eps:
                stop = pos
                break
        if stop is None:
            raise RGQuantError("unbounded quantile regression step")
        t_star = t[stop]
        passed = blocking[order[: np.flatnonzero(order == stop)[0]]]
        side[passed] = -side[passed]

        leaving = basis[k]
        side[leaving] = sigma
        basis[k] = blocking[stop]
        bland = t_star <= 1e-14 * (1.0 + abs(coef).max())
    raise RGQuantError(f"quantile regression did not converge in {max_iter} iterations")


def solve_qr_rows(rows, tau: float) -> QuantileCoeffs:
    rows = list(rows)
    if len(rows) < 5:
        raise InsufficientDataError(f"need at least 5 rows, got {len(rows)}")
    X = np.array([r.a for r in rows], dtype=float)
    y = np.array([r.y for r in rows], dtype=float)
    return QuantileCoeffs.from_array(tau, solve_qr(X, y, tau).coef)


def _design(h, x, ov, y):
    """Rows ``i = 2..n``: response ``y_i`` on ``(1, h_{i-1}, x_{i-1}, sqrt(ov_{i-1}))``."""
    X = np.column_stack([np.ones(h.size - 1), h[:-1], x[:-1], np.sqrt(ov[:-1])])
    return X, y[1:]


def rg_design(obs, fitted: GarchParams, h1: float | None = None):
    y, rv, ov, _ = observation_arrays(obs)
    h = filter_h(fitted, obs, h1).h
    return _design(h, np.sqrt(rv), ov, y)


def rr_design(obs, fitted: GarchParams, tau: float, h1: float | None = None):
    y, rv, ov, rq = observation_arrays(obs, tau)
    h = filter_h(fitted, obs, h1).h
    return _design(h, rq, ov, y)


def fit_rg(obs, fitted: GarchParams, tau: float) -> QuantileCoeffs:
    """Second step with ``sqrt(RV)`` as the high-frequency regressor."""
    X, y = rg_design(obs, fitted)
    return QuantileCoeffs.from_array(tau, solve_qr(X, y, tau).coef)


def fit_rr(obs, fitted: GarchParams, tau: float) -> QuantileCoeffs:
    """Second step with the realized quantile as the high-frequency regressor."""
    X, y = rr_design(obs, fitted, tau)
    return QuantileCoeffs.from_array(tau, solve_qr(X, y, tau).coef)


def forecast_quantile(coeffs: QuantileCoeffs, h_n: float, x_n: float, ov_n: float) -> float:
    """``omega + gamma h_n + alpha x_n + beta sqrt(ov_n)``."""
    if not (math.isfinite(h_n) and math.isfinite(x_n) and math.isfinite(ov_n)):
        raise ValueError("forecast inputs must be finite")
    if not h_n > 0:
        raise ValueError("h_n must be positive")
    if ov_n < 0:
        raise ValueError("ov_n must be nonnegative")
    return coeffs.omega_tau + coeffs.gamma_tau * h_n + coeffs.alpha_tau * x_n + coeffs.beta_tau * math.sqrt(ov_n)


@dataclass
class TwoStepForecaster:
    """Fitted RG or RR model; ``forecast`` re-filters any window with the
    stored parameters and predicts the day after its last observation."""

    kind: str
    garch: GarchParams
    coeffs: QuantileCoeffs
    report: object = None

    def forecast(self, obs) -> float:
        tau = self.coeffs.tau
        y, rv, ov, rq = observation_arrays(obs, tau if self.kind == "rr" else None)
        h_n = filter_h(self.garch, obs).last
        x_n = rq[-1] if self.kind == "rr" else math.sqrt(rv[-1])
        return forecast_quantile(self.coeffs, h_n, x_n, ov[-1])


def fit_two_step(obs, tau: float, kind: str = "rg", seed: int = 0, box: ParamBox | None = None, garch=None):
    """QMLE first step (unless ``garch`` is supplied) followed by RG or RR."""
    if kind not in ("rg", "rr"):
        raise ConfigurationError(f"unknown two-step model {kind!r}")
    report = None
    if garch is None:
        garch, _, report = fit_qmle(obs, box, seed=seed)
    coeffs = fit_rg(obs, garch, tau) if kind == "rg" else fit_rr(obs, garch, tau)
    return TwoStepForecaster(kind, garch, coeffs, report)
