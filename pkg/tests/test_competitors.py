import math

import numpy as np
import pytest
from scipy.stats import norm

from rgquant.competitors import (
    CaviarParams,
    QGarchForecaster,
    SampleQuantileForecaster,
    caviar_objective,
    caviar_path,
    fit_qgarch,
    fit_rcaviar,
    sample_quantile_forecast,
)
from rgquant.errors import ConfigurationError, InsufficientDataError
from rgquant.market_data import DailyObservation
from rgquant.realized import empirical_quantile


def test_qgarch_iid_gaussian():
    # an i.i.d. N(0, s^2) series: the one-day forecast is close to s * z_tau
    sigma, tau = 1.5, 0.05
    fc = []
    for seed in range(8):
        y = np.random.default_rng(seed).normal(0, sigma, size=1500)
        f = fit_qgarch(y, tau, seed=seed)
        assert isinstance(f, QGarchForecaster)
        fc.append(f.forecast(y))
    assert np.median(fc) == pytest.approx(sigma * norm.ppf(tau), rel=0.1)


def test_qgarch_zero_returns():
    with pytest.raises(ConfigurationError):
        fit_qgarch(np.zeros(300), 0.05)


def test_qgarch_short():
    with pytest.raises(InsufficientDataError):
        fit_qgarch(np.ones(10), 0.05)


def test_qgarch_accepts_observations(sim_small):
    obs, _ = sim_small
    a = fit_qgarch(obs, 0.05, seed=2).forecast(obs)
    y = np.array([o.y for o in obs])
    assert a == fit_qgarch(y, 0.05, seed=2).forecast(y)


def test_caviar_params():
    with pytest.raises(ValueError):
        CaviarParams(0.0, 1.0, 0.0, 0.0)


def test_caviar_path_hand_value():
    p = CaviarParams(-0.1, 0.5, -0.2, -0.3)
    y = np.array([1.0, -2.0, 0.5])
    rv = np.array([4.0, 1.0, 9.0])
    q = caviar_path(p, y, rv, q1=-1.0)
    assert q[1] == pytest.approx(-0.1 + 0.5 * -1.0 - 0.2 * 2.0 - 0.3 * 1.0)
    assert q[2] == pytest.approx(-0.1 + 0.5 * q[1] - 0.2 * 1.0 - 0.3 * 2.0)


def _caviar_panel(seed, n=600, theta=(-0.2, 0.0, -0.8, -0.3), tau=0.05):
    rng = np.random.default_rng(seed)
    rv = rng.exponential(1.0, size=n)
    noise = rng.normal(size=n)
    noise -= norm.ppf(tau)  # tau-quantile of the noise is zero
    om, _, al, be = theta
    y = np.empty(n)
    q = np.empty(n)
    q[0] = om
    y[0] = q[0] + noise[0]
    for i in range(1, n):
        q[i] = om + al * math.sqrt(rv[i - 1]) + be * abs(y[i - 1])
        y[i] = q[i] + noise[i]
    return [DailyObservation(i + 1, float(y[i]), float(rv[i]), 0.0) for i in range(n)]


@pytest.mark.slow
def test_rcaviar_recovers_alpha():
    alphas = [fit_rcaviar(_caviar_panel(s), 0.05, seed=s).params.alpha for s in range(50)]
    med = float(np.median(alphas))
    assert med < 0
    assert abs(med - -0.8) <= 0.5 * 0.8


def test_rcaviar_dominates_zero_and_is_deterministic(sim_small):
    obs, _ = sim_small
    f = fit_rcaviar(obs, 0.05, seed=4)
    y = np.array([o.y for o in obs])
    rv = np.array([o.rv for o in obs])
    q1 = empirical_quantile(y[:50], 0.05)
    fitted = caviar_objective(f.params, y, rv, q1, 0.05)
    assert fitted == pytest.approx(f.objective, rel=1e-9)
    assert fitted <= caviar_objective(np.zeros(4), y, rv, q1, 0.05)
    g = fit_rcaviar(obs, 0.05, seed=4)
    assert g.params == f.params and g.forecast(obs) == f.forecast(obs)
    assert f.best_start >= 0 and len(f.start_objectives) == 11


def test_rcaviar_short():
    obs = [DailyObservation(i, 0.0, 1.0, 0.0) for i in range(20)]
    with pytest.raises(InsufficientDataError):
        fit_rcaviar(obs, 0.05)


def test_sample_quantile_values():
    w = np.arange(-3, 17, dtype=float)
    assert sample_quantile_forecast(w, 0.05) == -3.0
    assert sample_quantile_forecast(np.full(25, 0.7), 0.05) == 0.7
    sym = np.arange(-10, 11, dtype=float)
    assert sample_quantile_forecast(sym, 0.5) == 0.0
    with pytest.raises(InsufficientDataError):
        sample_quantile_forecast(np.ones(19), 0.05)
    assert SampleQuantileForecaster(0.05).forecast(w) == -3.0
