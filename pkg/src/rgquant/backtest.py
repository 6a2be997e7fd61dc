"""
VaR evaluation: quantile loss, coverage tests and the rolling-window harness.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc, xlogy

from rgquant.competitors import fit_qgarch, fit_rcaviar, SampleQuantileForecaster
from rgquant.errors import ConfigurationError, DataError, RGQuantError, SingularDesignError
from rgquant.qreg import check_loss, fit_two_step

__all__ = [
    "HitSeries",
    "TestResult",
    "BacktestReport",
    "chi2_sf",
    "hit_sequence",
    "quantile_loss",
    "lruc_test",
    "lrcc_test",
    "dq_test",
    "evaluate",
    "rolling_backtest",
    "relative_losses",
    "write_forecast_csv",
    "write_report_csv",
    "MODELS",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = ["model", "tau", "avg_loss", "rel_loss", "hit_rate", "lruc", "lruc_p", "lrcc", "lrcc_p", "dq", "dq_p"]
DQ_LAGS = 4


def chi2_sf(stat: float, df: int) -> float:
    """Upper tail of the chi-squared distribution via the regularized
    incomplete gamma function."""
    if stat <= 0:
        return 1.0
    return float(gammaincc(0.5 * df, 0.5 * stat))


@dataclass
class HitSeries:
    hits: np.ndarray
    tau: float
    forecasts: np.ndarray

    def __post_init__(self):
        self.hits = np.asarray(self.hits, dtype=int)
        self.forecasts = np.asarray(self.forecasts, dtype=float)
        if self.hits.shape != self.forecasts.shape:
            raise DataError("hits and forecasts differ in length")
        if not np.all((self.hits == 0) | (self.hits == 1)):
            raise DataError("hits must be 0/1")


@dataclass
class TestResult:
    statistic: float
    pvalue: float
    degenerate: bool = False


@dataclass
class BacktestReport:
    model: str
    tau: float
    n: int
    avg_quantile_loss: float
    hit_rate: float
    lruc: TestResult
    lrcc: TestResult
    dq: TestResult
    relative_loss: float = math.nan
    skipped: int = 0
    failures: list = field(default_factory=list)

    def as_row(self) -> list:
        return [
            self.model,
            f"{self.tau:.2f}",
            repr(self.avg_quantile_loss),
            repr(self.relative_loss),
            repr(self.hit_rate),
            repr(self.lruc.statistic),
            repr(self.lruc.pvalue),
            repr(self.lrcc.statistic),
            repr(self.lrcc.pvalue),
            repr(self.dq.statistic),
            repr(self.dq.pvalue),
        ]

    def as_lines(self) -> list[str]:
        return [
            f"model={self.model}",
            f"tau={self.tau:.2f}",
            f"forecasts={self.n}",
            f"skipped={self.skipped}",
            f"avg_loss={self.avg_quantile_loss:.10g}",
            f"rel_loss={self.relative_loss:.10g}",
            f"hit_rate={self.hit_rate:.6f}",
            f"lruc={self.lruc.statistic:.6f} p={self.lruc.pvalue:.6f}",
            f"lrcc={self.lrcc.statistic:.6f} p={self.lrcc.pvalue:.6f}",
            f"dq={self.dq.statistic:.6f} p={self.dq.pvalue:.6f}",
        ]


def hit_sequence(y, q) -> np.ndarray:
    """``1(y_t < q_t)`` on close-to-close returns."""
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    if y.shape != q.shape:
        raise DataError("returns and forecasts differ in length")
    return (y < q).astype(int)


def quantile_loss(y, q, tau: float) -> float:
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    if y.shape != q.shape:
        raise DataError(f"cannot align {y.size} returns with {q.size} forecasts")
    if y.size == 0:
        raise DataError("empty forecast series")
    return float(np.mean(check_loss(tau, y - q)))


def _bernoulli_ll(k: float, n: float, p: float) -> float:
    """``k log p + (n - k) log(1 - p)`` with ``0 log 0 = 0``."""
    return float(xlogy(k, p) + xlogy(n - k, 1.0 - p))


def lruc_test(hits, tau: float) -> TestResult:
    """Unconditional coverage likelihood ratio, chi-squared with 1 df."""
    hits = np.asarray(hits, dtype=int)
    n = hits.size
    if n < 1:
        raise DataError("no hits")
    x = int(hits.sum())
    stat = -2.0 * (_bernoulli_ll(x, n, tau) - _bernoulli_ll(x, n, x / n))
    stat = stat if stat > 0 else 0.0
    return TestResult(stat, chi2_sf(stat, 1))


def lrcc_test(hits, tau: float) -> TestResult:
    """Conditional coverage likelihood ratio against a first-order Markov
    alternative, chi-squared with 2 df.

    Both likelihoods are evaluated over the ``n - 1`` transitions. A state
    that is never left contributes a unit factor and marks the result as
    degenerate.
    """
    hits = np.asarray(hits, dtype=int)
    if hits.size < 2:
        raise DataError("conditional coverage needs at least 2 hits")
    prev, cur = hits[:-1], hits[1:]
    n00 = int(np.sum((prev == 0) & (cur == 0)))
    n01 = int(np.sum((prev == 0) & (cur == 1)))
    n10 = int(np.sum((prev == 1) & (cur == 0)))
    n11 = int(np.sum((prev == 1) & (cur == 1)))
    x = n01 + n11
    total = n00 + n01 + n10 + n11
    ll_alt = 0.0
    degenerate = False
    for stay_zero, to_one in ((n00, n01), (n10, n11)):
        row = stay_zero + to_one
        if row == 0:
            degenerate = True
            continue
        ll_alt += _bernoulli_ll(to_one, row, to_one / row)
    stat = -2.0 * (_bernoulli_ll(x, total, tau) - ll_alt)
    stat = stat if stat > 0 else 0.0
    return TestResult(stat, chi2_sf(stat, 2), degenerate)


def dq_test(hits, forecasts, tau: float, lags: int = DQ_LAGS) -> TestResult:
    """Dynamic quantile test on ``(1, Hit_{t-1..t-lags}, q_t)``, chi-squared
    with ``lags + 2`` df."""
    hits = np.asarray(hits, dtype=float)
    q = np.asarray(forecasts, dtype=float)
    n = hits.size
    if q.size != n:
        raise DataError("hits and forecasts differ in length")
    if n <= lags + 10:
        raise DataError(f"DQ test with {lags} lags needs more than {lags + 10} observations")
    demeaned = hits - tau
    target = demeaned[lags:]
    cols = [np.ones(n - lags)]
    cols += [demeaned[lags - k : n - k] for k in range(1, lags + 1)]
    cols.append(q[lags:])
    X = np.column_stack(cols)
    XtX = X.T @ X
    s = np.linalg.svd(XtX, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise SingularDesignError("DQ regressors are collinear (constant forecasts or hits?)")
    Xty = X.T @ target
    stat = float(Xty @ np.linalg.solve(XtX, Xty)) / (tau * (1.0 - tau))
    stat = stat if stat > 0 else 0.0
    return TestResult(stat, chi2_sf(stat, lags + 2))


def _safe(test, *args) -> TestResult:
    try:
        return test(*args)
    except (DataError, SingularDesignError):
        return TestResult(math.nan, math.nan, True)


def evaluate(model: str, y, q, tau: float, lags: int = DQ_LAGS) -> BacktestReport:
    """Score an aligned forecast series."""
    hits = hit_sequence(y, q)
    return BacktestReport(
        model=model,
        tau=tau,
        n=int(hits.size),
        avg_quantile_loss=quantile_loss(y, q, tau),
        hit_rate=float(hits.mean()),
        lruc=_safe(lruc_test, hits, tau),
        lrcc=_safe(lrcc_test, hits, tau),
        dq=_safe(dq_test, hits, q, tau, lags),
    )


def _fit_rg(obs, tau, seed):
    return fit_two_step(obs, tau, "rg", seed=seed)


def _fit_rr(obs, tau, seed):
    return fit_two_step(obs, tau, "rr", seed=seed)


def _fit_sq(obs, tau, seed):
    return SampleQuantileForecaster(tau)


MODELS = {
    "rg": _fit_rg,
    "rr": _fit_rr,
    "qgarch": lambda obs, tau, seed: fit_qgarch(obs, tau, seed=seed),
    "rcaviar": lambda obs, tau, seed: fit_rcaviar(obs, tau, seed=seed),
    "sq": _fit_sq,
}


@dataclass
class RollingResult:
    report: BacktestReport
    days: list
    y: np.ndarray
    q: np.ndarray
    hits: np.ndarray


def rolling_backtest(obs, model, tau: float, window: int, refit_every: int = 1, seed: int = 0, lags: int = DQ_LAGS):
    """One-day-ahead forecasts from a rolling estimation window.

    ``model`` is a key of :data:`MODELS` or a callable ``(obs, tau, seed)``
    returning an object with ``forecast(window_obs)``. For day ``t`` the
    model sees days ``t - window .. t - 1`` only. A failed refit skips the
    day and is recorded in the report.
    """
    obs = list(obs)
    if obs and obs[0].flagged:
        obs = obs[1:]
    name = model if isinstance(model, str) else getattr(model, "__name__", "custom")
    if isinstance(model, str):
        if model not in MODELS:
            raise ConfigurationError(f"unknown model {model!r}; choose from {sorted(MODELS)}")
        fit = MODELS[model]
    else:
        fit = model
    if window < 1 or len(obs) <= window:
        raise ConfigurationError(f"window {window} leaves no out-of-sample days in a panel of {len(obs)}")
    if refit_every < 1:
        raise ConfigurationError("refit_every must be >= 1")

    fitted = None
    last_fit = None
    days, ys, qs, failures = [], [], [], []
    for t in range(window, len(obs)):
        train = obs[t - window : t]
        try:
            if fitted is None or last_fit is None or t - last_fit >= refit_every:
                fitted = fit(train, tau, seed + t)
                last_fit = t
            q_t = float(fitted.forecast(train))
            if not math.isfinite(q_t):
                raise RGQuantError("non-finite forecast")
        except (RGQuantError, ValueError, ArithmeticError) as exc:
            failures.append((obs[t].day_index, str(exc)))
            fitted = None
            continue
        days.append(obs[t].day_index)
        ys.append(obs[t].y)
        qs.append(q_t)
    if not qs:
        raise RGQuantError(f"every refit failed for model {name}")
    y = np.array(ys)
    q = np.array(qs)
    report = evaluate(name, y, q, tau, lags)
    report.skipped = len(failures)
    report.failures = failures
    return RollingResult(report, days, y, q, hit_sequence(y, q))


def relative_losses(reports, reference: str = "rg") -> None:
    """Divide each report's loss by the reference model's loss at the same tau."""
    ref = {}
    for r in reports:
        if r.model == reference:
            ref[round(r.tau, 9)] = r.avg_quantile_loss
    for r in reports:
        key = round(r.tau, 9)
        if key not in ref:
            raise ConfigurationError(f"reference model {reference!r} missing at tau={r.tau}")
        r.relative_loss = r.avg_quantile_loss / ref[key] if ref[key] > 0 else math.nan


def write_forecast_csv(path, days, y, q) -> None:
    hits = hit_sequence(y, q)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "y", "q_hat", "hit"])
        for d, yi, qi, hi in zip(days, np.asarray(y).tolist(), np.asarray(q).tolist(), hits.tolist()):
            w.writerow([d, repr(yi), repr(qi), hi])


def write_report_csv(path, reports) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow(r.as_row())
