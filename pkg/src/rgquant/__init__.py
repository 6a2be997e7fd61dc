"""Two-step realized-measure quantile models for daily Value-at-Risk."""

__version__ = "0.1.0"

from rgquant.errors import (
    ConfigurationError,
    DataError,
    InsufficientDataError,
    NumericError,
    OptimizationError,
    OrderingError,
    ParseError,
    RGQuantError,
    SingularDesignError,
)
from rgquant.market_data import (
    DailyObservation,
    IntradayDay,
    SessionCalendar,
    build_daily_observations,
    load_intraday_csv,
    observation_arrays,
)
from rgquant.realized import RealizedQuantileSpec, realized_quantile, realized_variance
from rgquant.qmle import GarchParams, ParamBox, filter_h, fit_qmle, forecast_h
from rgquant.qreg import QuantileCoeffs, TwoStepForecaster, fit_rg, fit_rr, fit_two_step, forecast_quantile, solve_qr
from rgquant.competitors import fit_qgarch, fit_rcaviar, sample_quantile_forecast
from rgquant.backtest import evaluate, lrcc_test, lruc_test, dq_test, rolling_backtest
from rgquant.simulate import DgpConfig, simulate_observations, simulate_panel

__all__ = [
    "__version__",
    "ConfigurationError",
    "DataError",
    "InsufficientDataError",
    "NumericError",
    "OptimizationError",
    "OrderingError",
    "ParseError",
    "RGQuantError",
    "SingularDesignError",
    "DailyObservation",
    "IntradayDay",
    "SessionCalendar",
    "build_daily_observations",
    "load_intraday_csv",
    "observation_arrays",
    "RealizedQuantileSpec",
    "realized_quantile",
    "realized_variance",
    "GarchParams",
    "ParamBox",
    "filter_h",
    "fit_qmle",
    "forecast_h",
    "QuantileCoeffs",
    "TwoStepForecaster",
    "fit_rg",
    "fit_rr",
    "fit_two_step",
    "forecast_quantile",
    "solve_qr",
    "fit_qgarch",
    "fit_rcaviar",
    "sample_quantile_forecast",
    "evaluate",
    "lrcc_test",
    "lruc_test",
    "dq_test",
    "rolling_backtest",
    "DgpConfig",
    "simulate_observations",
    "simulate_panel",
]
