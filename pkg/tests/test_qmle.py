import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgquant.errors import InsufficientDataError
from rgquant.market_data import DailyObservation
from rgquant.qmle import (
    ConvergenceReport,
    GarchParams,
    ParamBox,
    filter_h,
    fit_qmle,
    forecast_h,
    qmle_objective,
    recursion_filter,
)
from rgquant.simulate import DgpConfig, simulate_observations

THETA = GarchParams(1.0, 0.1, 0.5, 0.2)


def make_obs(rv, ov, y=None):
    y = np.zeros(len(rv)) if y is None else y
    return [DailyObservation(i + 1, float(a), float(b), float(c)) for i, (a, b, c) in enumerate(zip(y, rv, ov))]


def test_params_validation():
    for bad in [(0, 0.1, 0.5, 0.2), (1, 0.5, 0.3, 0.2), (1, -0.1, 0.5, 0.2), (1, 0.1, math.nan, 0.2)]:
        with pytest.raises(ValueError):
            GarchParams(*bad)
    assert GarchParams.from_array(THETA.as_array()) == THETA


def test_box_validation():
    with pytest.raises(ValueError):
        ParamBox((1, 1, 1, 1), (2, 2, 2, 2))
    with pytest.raises(ValueError):
        ParamBox((1e-6,) * 4, (1e-7, 1, 1, 1))
    with pytest.raises(ValueError):
        ParamBox((1e-6, 0.4, 0.4, 0.3), (10, 0.9, 0.9, 0.9))
    assert ParamBox().contains(THETA.as_array())
    assert not ParamBox().contains([1, 0.5, 0.4, 0.3])


def test_filter_hand_value():
    obs = make_obs([1.0, 0.25], [1.0, 0.01])
    state = filter_h(THETA, obs, h1=1.0)
    assert state.h[0] == 1.0
    # day 2 uses day 1's measures, so start from the second step explicitly
    h = recursion_filter(1.0, 0.1, THETA.alpha * np.sqrt([0.25, 0]) + THETA.beta * np.sqrt([0.01, 0]), 1.0)
    assert h[1] == pytest.approx(1.37)


def test_forecast_hand_value():
    last = DailyObservation(5, 0.0, 0.25, 0.01)
    assert forecast_h(THETA, 1.0, last) == pytest.approx(1.37)
    zero = DailyObservation(5, 0.0, 0.0, 0.0)
    assert forecast_h(THETA, 2.0, zero) == pytest.approx(1.0 + 0.1 * 2.0)


def test_fixed_point():
    obs = make_obs(np.zeros(50), np.zeros(50))
    h = filter_h(THETA, obs, h1=1.0 / 0.9).h
    np.testing.assert_allclose(h, 1.0 / 0.9, rtol=1e-14)


@settings(max_examples=40)
@given(st.floats(0.01, 0.98), st.floats(0.1, 5), st.floats(0.1, 5), st.integers(0, 2**31))
def test_contraction_in_h1(gamma, a, b, seed):
    rng = np.random.default_rng(seed)
    rv, ov = rng.exponential(size=30), rng.exponential(size=30)
    alpha = beta = (1 - gamma) / 3
    p = GarchParams(0.5, gamma, alpha, beta)
    obs = make_obs(rv, ov)
    d = np.abs(filter_h(p, obs, a).h - filter_h(p, obs, b).h)
    bound = gamma ** np.arange(30) * abs(a - b)
    assert np.all(d <= bound * (1 + 1e-9) + 1e-12)


def test_forecast_matches_extended_filter(rng):
    rv, ov = rng.exponential(size=20), rng.exponential(size=20) * 0.1
    obs = make_obs(rv, ov)
    state = filter_h(THETA, obs, 1.3)
    extended = filter_h(THETA, obs + [DailyObservation(99, 0.0, 1.0, 1.0)], 1.3)
    assert forecast_h(THETA, state, obs[-1]) == pytest.approx(extended.last, rel=1e-13)


def test_filter_rejects_bad_h1():
    with pytest.raises(ValueError):
        filter_h(THETA, make_obs([1.0], [0.0]), h1=0.0)


def test_objective_hand_value():
    assert qmle_objective(THETA, make_obs([0.75], [0.25]), h1=1.0) == pytest.approx(-1.0)


def test_objective_constant_and_mean():
    v = 2.5
    omega = math.sqrt(v) * (1 - 0.1)
    p = GarchParams(omega, 0.1, 1e-9, 1e-9)
    obs = make_obs(np.full(10, v), np.zeros(10))
    assert qmle_objective(p, obs, h1=math.sqrt(v)) == pytest.approx(-(math.log(v) + 1), rel=1e-7)
    # the per-term maximizer of -(log s + v / s) over s is s = v
    s = np.linspace(0.5, 6, 1000)
    assert s[np.argmax(-(np.log(s) + v / s))] == pytest.approx(v, abs=0.01)


def test_objective_is_a_mean():
    # constant measures and h1 at the recursion's fixed point keep h constant,
    # so repeating the sample leaves the average unchanged
    rv, ov = 1.3, 0.2
    h_star = (THETA.omega + THETA.alpha * math.sqrt(rv) + THETA.beta * math.sqrt(ov)) / (1 - THETA.gamma)
    obs = make_obs(np.full(25, rv), np.full(25, ov))
    a = qmle_objective(THETA, obs, h_star)
    b = qmle_objective(THETA, obs + obs, h_star)
    assert a == pytest.approx(b, rel=1e-12)
    assert a == pytest.approx(-(math.log(h_star**2) + (rv + ov) / h_star**2), rel=1e-12)


def test_fit_needs_data():
    with pytest.raises(InsufficientDataError):
        fit_qmle(make_obs(np.ones(10), np.ones(10)))


def test_fit_dominates_truth_and_is_deterministic():
    for seed in range(3):
        obs, _ = simulate_observations(DgpConfig(n=400, m=100, seed=100 + seed))
        p, obj, rep = fit_qmle(obs, seed=seed)
        assert obj >= qmle_objective(THETA, obs) - 1e-12
        assert obj == pytest.approx(qmle_objective(p, obs), rel=1e-12)
        assert ParamBox().contains(p.as_array(), atol=1e-12)
        p2, obj2, _ = fit_qmle(obs, seed=seed)
        assert p2 == p and obj2 == obj
        assert isinstance(rep, ConvergenceReport) and rep.best_start < len(rep.final_objectives)
        assert any(line.startswith("objective=") for line in rep.as_lines())


def test_fit_constant_proxy():
    c2 = 0.8
    obs = make_obs(np.full(200, 0.7 * c2), np.full(200, 0.3 * c2))
    p, _, _ = fit_qmle(obs, seed=1)
    h = filter_h(p, obs).h
    assert np.mean(h**2) == pytest.approx(c2, rel=0.05)


def test_fit_respects_tight_box():
    obs, _ = simulate_observations(DgpConfig(n=300, m=50, seed=5))
    box = ParamBox((0.5, 0.05, 0.3, 0.1), (0.6, 0.06, 0.31, 0.11))
    p, _, _ = fit_qmle(obs, box=box, seed=0)
    assert box.contains(p.as_array(), atol=1e-12)


def test_extra_start_accepted():
    obs, _ = simulate_observations(DgpConfig(n=300, m=50, seed=6))
    _, obj, rep = fit_qmle(obs, seed=0, extra_starts=[THETA])
    assert obj >= qmle_objective(THETA, obs)
    assert len(rep.final_objectives) == 9
