"""
Simulation of the realized-GARCH diffusion and the Monte Carlo MAE study.

Each day ``i`` spans ``[i - 1, i)``: an overnight stretch of length
``1 - lam`` followed by the open-to-close session of length ``lam``. The spot
variance is piecewise constant,

    session:    (w / lam)           * h_i^2 * (1 + d_i)
    overnight:  ((1 - w) / (1 - lam)) * h_i^2 * (1 + d_i)

with ``d_i + 0.1`` noncentral chi-squared, so the day's integrated variance is
``h_i^2 (1 + d_i)`` and the open-to-close part is ``IV_i = w h_i^2 (1 + d_i)``.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from rgquant.competitors import fit_qgarch, fit_rcaviar
from rgquant.errors import RGQuantError
from rgquant.market_data import DEFAULT_LAMBDA, DailyObservation, IntradayDay
from rgquant.qmle import GarchParams, fit_qmle
from rgquant.qreg import TwoStepForecaster, fit_rg, fit_rr
from rgquant.realized import empirical_quantile, realized_quantile_batch, realized_variance_batch

__all__ = [
    "DgpConfig",
    "GroundTruth",
    "simulate_panel",
    "simulate_observations",
    "monte_carlo_true_quantile",
    "true_coefficients",
    "MAEResult",
    "mae_experiment",
    "write_truth_csv",
    "MAE_COLUMNS",
]

TRUE_PARAMS = GarchParams(1.0, 0.1, 0.5, 0.2)
D_SHIFT = 0.1
MAE_COLUMNS = ["n", "m", "tau", "model", "param", "mae", "reps_used"]


@dataclass(frozen=True)
class DgpConfig:
    params: GarchParams = TRUE_PARAMS
    w: float = 0.75
    lam: float = DEFAULT_LAMBDA
    n: int = 500
    m: int = 100
    seed: int = 0
    d_df: float = 0.05
    d_nc: float = 0.05
    burn_in: int = 200

    def __post_init__(self):
        if not 0.0 < self.w < 1.0:
            raise ValueError(f"w must lie in (0, 1), got {self.w}")
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lam must lie in (0, 1), got {self.lam}")
        if self.n < 2 or self.m < 2:
            raise ValueError("need n >= 2 days and m >= 2 intraday steps")
        degenerate = self.d_df == 0 and self.d_nc == 0
        if self.d_df < 0 or self.d_nc < 0 or not (degenerate or abs(self.d_df + self.d_nc - D_SHIFT) < 1e-12):
            raise ValueError("d + 0.1 must have mean 0.1 (df + noncentrality = 0.1), or both zero for d = 0")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")

    def with_(self, **kw) -> "DgpConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return DgpConfig(**d)

    def digest(self) -> str:
        blob = repr(sorted((k, repr(v)) for k, v in asdict(self).items()))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class GroundTruth:
    """Latent quantities of the recorded days.

    ``h`` has ``n + 1`` entries; the last is ``h_{n+1}``, the volatility of the
    day after the panel.
    """

    h: np.ndarray
    iv: np.ndarray
    ov: np.ndarray
    d: np.ndarray
    y: np.ndarray


def _draw_d(rng: np.random.Generator, cfg: DgpConfig, size) -> np.ndarray:
    if cfg.d_df == 0 and cfg.d_nc == 0:
        return np.zeros(size)
    if cfg.d_df == 0:
        # zero df: Poisson(nc / 2) mixture of chi2(2k), with chi2(0) = 0
        k = rng.poisson(cfg.d_nc / 2.0, size)
        return np.where(k > 0, 2.0 * rng.gamma(np.maximum(k, 1), 1.0), 0.0) - D_SHIFT
    return rng.noncentral_chisquare(cfg.d_df, cfg.d_nc, size) - D_SHIFT


def _simulate_arrays(cfg: DgpConfig):
    rng = np.random.default_rng(cfg.seed)
    total = cfg.burn_in + cfg.n
    m = cfg.m
    p = cfg.params
    d = _draw_d(rng, cfg, total)
    z_night = rng.standard_normal((total, m))
    z_day = rng.standard_normal((total, m))
    # overnight Euler steps only matter through their sum
    s_night = z_night.sum(axis=1) / math.sqrt(m)

    h = np.empty(total + 1)
    h[0] = p.omega / (1.0 - p.gamma - p.alpha - p.beta)
    var_day = h[:-1].copy()
    iv = np.empty(total)
    ov = np.empty(total)
    for i in range(total):
        v = h[i] * h[i] * (1.0 + d[i])
        var_day[i] = v
        iv[i] = cfg.w * v
        ov[i] = (1.0 - cfg.w) * v * s_night[i] ** 2
        h[i + 1] = p.omega + p.gamma * h[i] + p.alpha * math.sqrt(iv[i]) + p.beta * math.sqrt(ov[i])

    gap = np.sqrt((1.0 - cfg.w) * var_day) * s_night
    steps = np.sqrt(iv / m)[:, None] * z_day
    session = np.cumsum(steps, axis=1)
    day_ret = gap + session[:, -1]
    close = np.cumsum(day_ret)
    close_prev = np.concatenate(([0.0], close[:-1]))
    opens = close_prev + gap
    prices = np.empty((total, m + 1))
    prices[:, 0] = opens
    prices[:, 1:] = opens[:, None] + session
    # pin the close so that day i's close is bit-identical to day i+1's close_prev
    prices[:, -1] = close

    keep = slice(cfg.burn_in, total)
    truth = GroundTruth(
        h=h[cfg.burn_in :].copy(),
        iv=iv[keep].copy(),
        ov=ov[keep].copy(),
        d=d[keep].copy(),
        y=day_ret[keep].copy(),
    )
    return prices[keep], close_prev[keep], truth


def simulate_panel(cfg: DgpConfig):
    """Simulate ``cfg.n`` recorded days after ``cfg.burn_in`` discarded ones.

    Returns ``(days, truth)``; deterministic given ``cfg.seed``.
    """
    prices, close_prev, truth = _simulate_arrays(cfg)
    days = [IntradayDay(i + 1, prices[i], float(close_prev[i])) for i in range(cfg.n)]
    return days, truth


def simulate_observations(cfg: DgpConfig, taus=()):
    """Like :func:`simulate_panel` but returns daily observations directly,
    skipping the per-day objects (same numbers, vectorized)."""
    prices, close_prev, truth = _simulate_arrays(cfg)
    rv = realized_variance_batch(prices)
    rq = realized_quantile_batch(prices, taus) if taus else {}
    gap = prices[:, 0] - close_prev
    y = prices[:, -1] - close_prev
    obs = [
        DailyObservation(i + 1, float(y[i]), float(rv[i]), float(gap[i] ** 2), {t: float(rq[t][i]) for t in rq})
        for i in range(cfg.n)
    ]
    return obs, truth


@dataclass
class QuantileEstimate:
    q: float
    stderr: float


def monte_carlo_true_quantile(cfg: DgpConfig, tau: float, reps: int = 1_000_000, seed: int | None = None) -> QuantileEstimate:
    """tau-quantile of ``Z sqrt(1 + d)`` by simulation.

    The standard error comes from 20 independent batches.
    """
    if reps < 100_000:
        raise ValueError("use at least 1e5 replications")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    d = _draw_d(rng, cfg, reps)
    eps = rng.standard_normal(reps) * np.sqrt(1.0 + d)
    q = empirical_quantile(eps, tau)
    batches = np.array_split(eps, 20)
    bq = np.array([empirical_quantile(b, tau) for b in batches])
    return QuantileEstimate(q, float(bq.std(ddof=1) / math.sqrt(len(batches))))


def true_coefficients(params: GarchParams, q_tau: float, tau: float) -> dict:
    """Population quantile-regression coefficients of the RG and RR designs."""
    z = norm.ppf(tau)
    rg = np.array([params.omega, params.gamma, params.alpha, params.beta]) * q_tau
    rr = rg.copy()
    rr[2] = params.alpha * q_tau / z
    return {"rg": rg, "rr": rr}


PARAM_NAMES = ("omega", "gamma", "alpha", "beta")


@dataclass
class MAEResult:
    """Absolute errors per replication for every (n, m, tau, model, param)."""

    errors: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    def add(self, key, value):
        self.errors.setdefault(key, []).append(float(value))

    def mae(self, n, m, tau, model, param) -> float:
        return float(np.mean(self.errors[(n, m, tau, model, param)]))

    def median(self, n, m, tau, model, param) -> float:
        return float(np.median(self.errors[(n, m, tau, model, param)]))

    def rows(self):
        out = []
        for key in sorted(self.errors, key=lambda k: (k[0], k[1], -1.0 if k[2] is None else k[2], k[3], k[4])):
            n, m, tau, model, param = key
            errs = self.errors[key]
            out.append([n, m, f"{tau:.2f}" if tau is not None else "", model, param, repr(float(np.mean(errs))), len(errs)])
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(MAE_COLUMNS)
            w.writerows(self.rows())


def _replicate(args):
    """One replication of one (n, m) cell; returns ``[(key, abs error)]`` and failures."""
    cfg, taus, models, q_true = args
    out, failed = [], []
    obs, truth = simulate_observations(cfg, taus)
    p0 = cfg.params
    try:
        theta, _, _ = fit_qmle(obs, seed=cfg.seed)
    except RGQuantError as exc:
        return out, [("qmle", None, str(exc))]
    if "qmle" in models:
        for name, est, tr in zip(PARAM_NAMES, theta.as_array(), p0.as_array()):
            out.append(((cfg.n, cfg.m, None, "qmle", name), abs(est - tr)))
    for tau in taus:
        q_tau = q_true[tau]
        target = truth.h[-1] * q_tau
        coefs = true_coefficients(p0, q_tau, tau)
        for model in models:
            if model == "qmle":
                continue
            try:
                if model in ("rg", "rr"):
                    c = fit_rg(obs, theta, tau) if model == "rg" else fit_rr(obs, theta, tau)
                    for name, est, tr in zip(PARAM_NAMES, c.as_array(), coefs[model]):
                        out.append(((cfg.n, cfg.m, tau, model, name), abs(est - tr)))
                    fc = TwoStepForecaster(model, theta, c).forecast(obs)
                elif model == "qgarch":
                    fc = fit_qgarch(obs, tau, seed=cfg.seed).forecast(obs)
                elif model == "rcaviar":
                    fc = fit_rcaviar(obs, tau, seed=cfg.seed).forecast(obs)
                else:
                    raise ValueError(f"unknown model {model!r}")
            except (RGQuantError, ArithmeticError) as exc:
                failed.append((model, tau, str(exc)))
                continue
            out.append(((cfg.n, cfg.m, tau, model, "forecast"), abs(fc - target)))
    return out, failed


def mae_experiment(
    grid,
    reps: int,
    models=("qmle", "rg", "rr", "qgarch", "rcaviar"),
    base: DgpConfig | None = None,
    seed: int = 0,
    threads: int = 1,
    quantile_reps: int = 1_000_000,
) -> MAEResult:
    """Mean absolute errors of first-step, second-step and forecast estimates.

    Parameters
    ----------
    grid : dict
        ``{"n": [...], "m": [...], "tau": [...]}``.
    reps : int
        Replications per (n, m) cell (at least 10).
    models : sequence of str
        Any of ``qmle``, ``rg``, ``rr``, ``qgarch``, ``rcaviar``.
    seed : int
        Replication ``r`` of cell ``c`` uses seed ``seed + 100003 * c + r``.
    threads : int
        Worker processes for replications.
    """
    if reps < 10:
        raise ValueError("use at least 10 replications")
    base = base or DgpConfig()
    taus = [float(t) for t in grid.get("tau", [])]
    q_true = {t: monte_carlo_true_quantile(base, t, quantile_reps, seed=seed).q for t in taus}
    result = MAEResult()
    tasks = []
    cell = 0
    for n in grid["n"]:
        for m in grid["m"]:
            for r in range(reps):
                s = seed + 100003 * cell + r
                result.seeds[(n, m, r)] = s
                tasks.append(base.with_(n=int(n), m=int(m), seed=s))
            cell += 1
    args = [(cfg, taus, tuple(models), q_true) for cfg in tasks]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            outputs = list(ex.map(_replicate, args, chunksize=1))
    else:
        outputs = [_replicate(a) for a in args]
    for cfg, (errs, failed) in zip(tasks, outputs):
        for key, e in errs:
            result.add(key, e)
        for model, tau, msg in failed:
            result.failures.setdefault((cfg.n, cfg.m, tau, model), []).append(msg)
    return result


def write_truth_csv(path, truth: GroundTruth) -> None:
    """Per-day latent quantities; the final row carries only ``h_{n+1}``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "h", "iv", "ov", "d", "y"])
        n = truth.iv.size
        for i in range(n):
            w.writerow([i + 1, repr(float(truth.h[i])), repr(float(truth.iv[i])), repr(float(truth.ov[i])),
                        repr(float(truth.d[i])), repr(float(truth.y[i]))])
        w.writerow([n + 1, repr(float(truth.h[n])), "", "", "", ""])
