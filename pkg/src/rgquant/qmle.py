"""
Realized-GARCH volatility filter and its quasi-maximum likelihood fit.

The conditional standard deviation follows

    h_i = omega + gamma * h_{i-1} + alpha * sqrt(RV_{i-1}) + beta * sqrt(OV_{i-1})

and ``RV_i + OV_i`` stands in for the unobserved daily variance in a Gaussian
quasi-likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit, logit

from rgquant.errors import InsufficientDataError, OptimizationError
from rgquant.market_data import observation_arrays

__all__ = [
    "GarchParams",
    "ParamBox",
    "VolFilterState",
    "ConvergenceReport",
    "filter_h",
    "qmle_objective",
    "fit_qmle",
    "forecast_h",
    "default_h1",
    "recursion_filter",
    "fit_recursion_qmle",
]

PROXY_FLOOR = 1e-12
SIMPLEX_MARGIN = 1e-6
MIN_OBS = 50


@dataclass(frozen=True)
class GarchParams:
    omega: float
    gamma: float
    alpha: float
    beta: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError(f"parameters must be finite and strictly positive: {self}")
        if self.gamma + self.alpha + self.beta >= 1:
            raise ValueError(f"gamma + alpha + beta must be < 1: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.omega, self.gamma, self.alpha, self.beta], dtype=float)

    @classmethod
    def from_array(cls, x) -> "GarchParams":
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class ParamBox:
    """Componentwise bounds on ``(omega, gamma, alpha, beta)``."""

    lower: tuple = (1e-6, 1e-6, 1e-6, 1e-6)
    upper: tuple = (10.0, 0.999, 0.999, 0.999)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 2:
            raise ValueError("lower and upper must be equal-length vectors")
        if np.any(lo <= 0) or np.any(lo >= hi):
            raise ValueError("bounds must satisfy 0 < lower < upper")
        if lo[1:].sum() >= 1 - SIMPLEX_MARGIN:
            raise ValueError("lower bounds leave no room under gamma + alpha + beta < 1")

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return bool(np.all(x >= lo - atol) and np.all(x <= hi + atol) and x[1:].sum() <= 1 - SIMPLEX_MARGIN + atol)


@dataclass
class VolFilterState:
    h: np.ndarray
    h1: float

    @property
    def last(self) -> float:
        return float(self.h[-1])


@dataclass
class ConvergenceReport:
    """Outcome of a multi-start fit."""

    best_start: int
    objective: float
    start_objectives: list = field(default_factory=list)
    final_objectives: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    n_floored: int = 0
    message: str = ""

    def as_lines(self) -> list[str]:
        fmt = lambda xs: ",".join(f"{v:.10g}" for v in xs)  # noqa: E731
        return [
            f"best_start={self.best_start}",
            f"objective={self.objective:.12g}",
            f"iterations={','.join(str(i) for i in self.iterations)}",
            f"converged={','.join(str(int(c)) for c in self.converged)}",
            f"start_objectives={fmt(self.start_objectives)}",
            f"final_objectives={fmt(self.final_objectives)}",
            f"floored_days={self.n_floored}",
            f"message={self.message}",
        ]


def recursion_filter(omega: float, gamma: float, drive: np.ndarray, h1: float) -> np.ndarray:
    """Run ``h_i = omega + gamma h_{i-1} + drive_{i-1}`` from ``h_1 = h1``.

    ``drive`` holds the loading-weighted innovations of days ``1..n``; the
    output has the same length, and the last drive term is not used.
    """
    drive = np.asarray(drive, dtype=float)
    n = drive.size
    h = np.empty(n)
    h[0] = h1
    if n > 1:
        h[1:] = lfilter([1.0], [1.0, -gamma], omega + drive[:-1], zi=[gamma * h1])[0]
    return h


def default_h1(rv, ov) -> float:
    """Initial value ``sqrt(mean(RV + OV))``."""
    return math.sqrt(max(float(np.mean(np.asarray(rv) + np.asarray(ov))), PROXY_FLOOR))


def _check_h1(h1: float) -> float:
    h1 = float(h1)
    if not h1 > 0 or not math.isfinite(h1):
        raise ValueError(f"initial value must be positive and finite, got {h1}")
    return h1


def filter_h(params: GarchParams, obs, h1: float | None = None) -> VolFilterState:
    """Filter ``h_i(theta)`` over the observations."""
    _, rv, ov, _ = observation_arrays(obs)
    if rv.size == 0:
        raise InsufficientDataError("no observations to filter")
    h1 = default_h1(rv, ov) if h1 is None else _check_h1(h1)
    drive = params.alpha * np.sqrt(rv) + params.beta * np.sqrt(ov)
    return VolFilterState(recursion_filter(params.omega, params.gamma, drive, h1), h1)


def _gaussian_qll(h: np.ndarray, proxy: np.ndarray) -> float:
    h2 = h * h
    return -float(np.mean(np.log(h2) + proxy / h2))


def qmle_objective(params: GarchParams, obs, h1: float | None = None) -> float:
    """Quasi log-likelihood ``-(1/n) sum(log h_i^2 + (RV_i + OV_i) / h_i^2)``."""
    _, rv, ov, _ = observation_arrays(obs)
    state = filter_h(params, obs, h1)
    proxy = np.maximum(rv + ov, PROXY_FLOOR)
    return _gaussian_qll(state.h, proxy)


def forecast_h(params: GarchParams, state: VolFilterState | float, last_obs) -> float:
    """One recursion step beyond the filtered sample."""
    h_n = state.last if isinstance(state, VolFilterState) else float(state)
    out = params.omega + params.gamma * h_n + params.alpha * math.sqrt(last_obs.rv) + params.beta * math.sqrt(last_obs.ov)
    if not out > 0:
        raise ValueError("forecast of h is not positive")
    return out


class _Transform:
    """Maps R^(k+2) onto the box intersected with the persistence simplex.

    omega is log-scaled inside its bounds; the persistence total
    gamma + sum(loadings) is logistic inside [sum of lower bounds, 1 - margin]
    and split among components by a softmax.
    """

    def __init__(self, lower, upper):
        self.lo = np.asarray(lower, dtype=float)
        self.hi = np.asarray(upper, dtype=float)
        self.tot_lo = self.lo[1:].sum()
        self.tot_hi = 1.0 - SIMPLEX_MARGIN
        self.log_span = math.log(self.hi[0] / self.lo[0])

    def forward(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        omega = self.lo[0] * math.exp(self.log_span * expit(z[0]))
        total = self.tot_lo + (self.tot_hi - self.tot_lo) * expit(z[1])
        logits = np.append(z[2:], 0.0)
        w = np.exp(logits - logits.max())
        w /= w.sum()
        rest = np.minimum(self.lo[1:] + w * (total - self.tot_lo), self.hi[1:])
        return np.concatenate(([min(omega, self.hi[0])], rest))

    def inverse(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        eps = 1e-9
        u0 = math.log(min(max(x[0], self.lo[0]), self.hi[0]) / self.lo[0]) / self.log_span
        total = float(np.clip(x[1:].sum(), self.tot_lo + eps, self.tot_hi - eps))
        z1 = logit((total - self.tot_lo) / (self.tot_hi - self.tot_lo))
        shares = np.maximum(x[1:] - self.lo[1:], eps)
        shares /= shares.sum()
        rest = np.log(shares[:-1] / shares[-1])
        return np.concatenate(([logit(float(np.clip(u0, eps, 1 - eps))), z1], rest))


def fit_recursion_qmle(
    proxy,
    innovations,
    lower,
    upper,
    seed: int = 0,
    n_starts: int = 8,
    h1: float | None = None,
    extra_starts=(),
    maxiter: int = 2000,
):
    """Gaussian QMLE of ``h_i = omega + gamma h_{i-1} + sum_j a_j x_{j,i-1}``.

    Parameters
    ----------
    proxy : array
        Variance proxy per day (``RV + OV``, or squared returns).
    innovations : sequence of arrays
        Lagged innovation series ``x_j`` in return units.
    lower, upper : sequence
        Bounds on ``(omega, gamma, a_1, ..., a_k)``.
    seed : int
        Seed for the random starting points.
    n_starts : int
        Number of starts, the first of which is deterministic.
    extra_starts : sequence of arrays
        Additional parameter vectors used as starting points.

    Returns
    -------
    params : ndarray
    objective : float
    report : ConvergenceReport
    """
    proxy = np.asarray(proxy, dtype=float)
    xs = [np.asarray(x, dtype=float) for x in innovations]
    n = proxy.size
    n_floored = int(np.sum(proxy < PROXY_FLOOR))
    proxy = np.maximum(proxy, PROXY_FLOOR)

    # work in units where the average variance proxy is one
    scale = math.sqrt(float(np.mean(proxy)))
    p_n = proxy / scale**2
    x_n = np.vstack(xs) / scale if xs else np.zeros((0, n))
    lo = np.asarray(lower, dtype=float).copy()
    hi = np.asarray(upper, dtype=float).copy()
    lo[0] /= scale
    hi[0] /= scale
    h1_n = 1.0 if h1 is None else _check_h1(h1) / scale
    tr = _Transform(lo, hi)
    k = len(xs)

    def objective(p):
        drive = p[2:] @ x_n if k else np.zeros(n)
        h = recursion_filter(p[0], p[1], drive, h1_n)
        if not np.all(h > 0):
            return -np.inf
        val = _gaussian_qll(h, p_n)
        return val if math.isfinite(val) else -np.inf

    def neg(z):
        return -objective(tr.forward(z))

    rng = np.random.default_rng(seed)
    mean_x = x_n.mean(axis=1) if k else np.zeros(0)
    starts = []
    for s in range(n_starts):
        if s == 0:
            total = 0.8
            shares = np.full(k + 1, 1.0 / (k + 1))
        else:
            total = rng.uniform(0.4, 0.95)
            shares = rng.dirichlet(np.ones(k + 1))
        comp = total * shares
        omega = max(1.0 - comp[0] - float(comp[1:] @ mean_x), 0.05)
        starts.append(tr.forward(tr.inverse(np.concatenate(([omega], comp)))))
    for p in extra_starts:
        p = np.asarray(p, dtype=float).copy()
        p[0] /= scale
        starts.append(p)

    best = None
    report = ConvergenceReport(best_start=-1, objective=-np.inf, n_floored=n_floored)
    for i, p0 in enumerate(starts):
        f0 = objective(p0)
        report.start_objectives.append(f0)
        if not math.isfinite(f0):
            report.final_objectives.append(f0)
            report.iterations.append(0)
            report.converged.append(False)
            continue
        res = minimize(
            neg,
            tr.inverse(p0),
            method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-10},
        )
        p_hat = tr.forward(res.x)
        f_hat = objective(p_hat)
        if not f_hat >= f0:
            # the transform round trip can move a start off its exact values
            p_hat, f_hat = p0, f0
        report.final_objectives.append(f_hat)
        report.iterations.append(int(res.nit))
        report.converged.append(bool(res.success))
        if best is None or f_hat > best[1]:
            best = (p_hat, f_hat)
            report.best_start = i
    if best is None:
        raise OptimizationError("no starting point produced a finite objective")

    p_hat = best[0].copy()
    p_hat[0] *= scale
    # undo the normalization: log h^2 shifts by log(scale^2)
    report.objective = best[1] - 2.0 * math.log(scale)
    report.start_objectives = [f - 2.0 * math.log(scale) for f in report.start_objectives]
    report.final_objectives = [f - 2.0 * math.log(scale) for f in report.final_objectives]
    report.message = "ok" if all(report.converged) else "some starts hit the iteration limit"
    if n_floored:
        report.message += f"; {n_floored} day(s) with zero variance proxy floored"
    return p_hat, report.objective, report


def fit_qmle(obs, box: ParamBox | None = None, seed: int = 0, n_starts: int = 8, extra_starts=()):
    """Maximize the realized quasi-likelihood over the parameter box.

    Returns ``(GarchParams, objective, ConvergenceReport)``.
    """
    box = ParamBox() if box is None else box
    _, rv, ov, _ = observation_arrays(obs)
    if rv.size < MIN_OBS:
        raise InsufficientDataError(f"QMLE needs at least {MIN_OBS} days, got {rv.size}")
    extra = [p.as_array() if isinstance(p, GarchParams) else p for p in extra_starts]
    p_hat, obj, report = fit_recursion_qmle(
        rv + ov,
        [np.sqrt(rv), np.sqrt(ov)],
        box.lower,
        box.upper,
        seed=seed,
        n_starts=n_starts,
        h1=default_h1(rv, ov),
        extra_starts=extra,
    )
    return GarchParams.from_array(p_hat), obj, report
