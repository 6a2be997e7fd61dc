import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from rgquant.errors import InsufficientDataError, NumericError
from rgquant.market_data import IntradayDay
from rgquant.realized import (
    RealizedQuantileSpec,
    empirical_quantile,
    quantile_rank,
    realized_quantile,
    realized_quantile_batch,
    realized_variance,
    realized_variance_batch,
)

prices = st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=40).map(np.array)


def test_rv_hand_value():
    assert realized_variance(IntradayDay(1, [0.0, 0.01, -0.01], 0.0)) == pytest.approx(5e-4)


def test_rv_constant():
    assert realized_variance(np.full(10, 4.6)) == 0.0


@given(prices)
def test_rv_quadratic_homogeneity(p):
    assert realized_variance(2 * p) == pytest.approx(4 * realized_variance(p), rel=1e-12, abs=1e-12)


def test_rv_nonfinite():
    with pytest.raises(NumericError):
        realized_variance([0.0, math.inf, 1.0])


def test_rq_constant_increments():
    m, c = 16, 0.003
    p = c * np.arange(m + 1)
    assert realized_quantile(p, 0.05) == pytest.approx(c * 4.0)


def test_rq_median_symmetric():
    dx = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    p = np.concatenate([[0.0], np.cumsum(dx)])
    assert realized_quantile(p, 0.5) == 0.0


def test_rq_needs_two_increments():
    with pytest.raises(InsufficientDataError):
        realized_quantile([0.0, 1.0], 0.05)


def test_rq_scale_exponent():
    p = np.concatenate([[0.0], np.cumsum([-1.0, 0.5, 0.2, 0.3])])
    spec = RealizedQuantileSpec(0.25, scale_exponent=0.3)
    assert realized_quantile(p, spec) == pytest.approx(-1.0 * 4**0.3)


@pytest.mark.parametrize("tau,h", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)])
def test_spec_validation(tau, h):
    with pytest.raises(ValueError):
        RealizedQuantileSpec(tau, h)


def test_quantile_rank_float_noise():
    assert quantile_rank(0.15, 20) == 3
    assert quantile_rank(0.05, 20) == 1
    assert quantile_rank(0.001, 20) == 1


def test_empirical_quantile_minimizes_check_loss(rng):
    x = rng.normal(size=37)
    for tau in (0.05, 0.3, 0.5, 0.9):
        b = empirical_quantile(x, tau)
        loss = lambda c: np.sum((x - c) * (tau - (x < c)))
        grid = np.concatenate([x, x + 1e-6, x - 1e-6])
        assert loss(b) <= min(loss(c) for c in grid) + 1e-12


@settings(max_examples=50)
@given(st.integers(1, 8), st.integers(3, 30), st.integers(0, 2**31))
def test_batch_matches_scalar(days, m, seed):
    rng = np.random.default_rng(seed)
    mat = np.cumsum(rng.normal(size=(days, m + 1)), axis=1)
    taus = (0.05, 0.15, 0.5)
    rq = realized_quantile_batch(mat, taus)
    rv = realized_variance_batch(mat)
    for i in range(days):
        assert rv[i] == pytest.approx(realized_variance(mat[i]))
        for t in taus:
            assert rq[t][i] == realized_quantile(mat[i], t)
        assert rq[0.05][i] <= rq[0.15][i] <= rq[0.5][i]


def test_gaussian_scaling_small_sample():
    # quick version of the acceptance check: 100 reps, looser tolerance
    rng = np.random.default_rng(3)
    lam, m = 6.5 / 24, 1000
    mat = np.cumsum(rng.normal(0, math.sqrt(lam / m), size=(100, m + 1)), axis=1)
    mean = realized_quantile_batch(mat, [0.05])[0.05].mean()
    assert mean == pytest.approx(norm.ppf(0.05) * math.sqrt(lam), rel=0.05)
