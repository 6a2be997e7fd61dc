"""
Command-line front end.

    rgquant simulate --config run.ini
    rgquant estimate --config run.ini
    rgquant forecast --config run.ini
    rgquant backtest --config run.ini [--refit-every K]
    rgquant report   --config run.ini

Exit codes: 0 success, 1 validation error, 2 estimation failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from rgquant import __version__
from rgquant.backtest import (
    BacktestReport,
    REPORT_COLUMNS,
    relative_losses,
    rolling_backtest,
    write_forecast_csv,
    write_report_csv,
)
from rgquant.competitors import SampleQuantileForecaster, fit_qgarch, fit_rcaviar, sample_quantile_forecast
from rgquant.config import RunConfig, load_config
from rgquant.errors import ConfigurationError, DataError, RGQuantError
from rgquant.market_data import (
    build_daily_observations,
    load_intraday_csv,
    observation_arrays,
    read_daily_csv,
    write_daily_csv,
    write_intraday_csv,
)
from rgquant.qmle import fit_qmle
from rgquant.qreg import TwoStepForecaster, fit_rg, fit_rr
from rgquant.simulate import simulate_panel, write_truth_csv

log = logging.getLogger("rgquant")

EXIT_OK, EXIT_VALIDATION, EXIT_ESTIMATION, EXIT_IO = 0, 1, 2, 3
COEF_COLUMNS = ["model", "tau", "omega", "gamma", "alpha", "beta", "status"]


def manifest_lines(command: str, cfg: RunConfig) -> list[str]:
    return [
        f"command={command}",
        f"version={__version__}",
        f"config={cfg.path.name}",
        f"config_sha256={cfg.digest}",
        f"seed={cfg.seed}",
        f"threads={cfg.threads}",
        f"taus={','.join(f'{t:.2f}' for t in cfg.taus)}",
        f"models={','.join(cfg.models)}",
    ]


def _emit_manifest(command: str, cfg: RunConfig, target: Path, extra=()) -> None:
    lines = manifest_lines(command, cfg) + list(extra)
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    target.with_name(target.name + ".manifest").write_text(text, encoding="utf-8", newline="\n")


def _out(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _daily(cfg: RunConfig):
    daily = cfg.path_of("data", "daily")
    intraday = cfg.path_of("data", "intraday")
    if daily is not None and daily.exists():
        obs = read_daily_csv(daily)
        # a cached file built for other tau levels is rebuilt when possible
        have = set(round(t, 9) for t in obs[0].rq) if obs else set()
        if intraday is None or not intraday.exists() or all(round(t, 9) in have for t in cfg.taus):
            return obs
    if intraday is not None:
        days = load_intraday_csv(intraday)
        obs = build_daily_observations(days, cfg.taus)
        if daily is not None:
            write_daily_csv(_out(daily), obs)
        return obs
    if daily is None:
        raise ConfigurationError("set [data] daily or [data] intraday")
    raise ConfigurationError(f"daily file {daily} does not exist and no [data] intraday is given")


def _check_rq(obs, cfg: RunConfig) -> None:
    if "rr" in cfg.models:
        for tau in cfg.taus:
            observation_arrays(obs[:2], tau)


def cmd_simulate(cfg: RunConfig) -> int:
    dgp = cfg.dgp()
    intraday = cfg.path_of("simulate", "intraday", "intraday.csv")
    truth_path = cfg.path_of("simulate", "truth", "truth.csv")
    daily = cfg.path_of("simulate", "daily")
    days, truth = simulate_panel(dgp)
    write_intraday_csv(_out(intraday), days)
    write_truth_csv(_out(truth_path), truth)
    if daily is not None:
        write_daily_csv(_out(daily), build_daily_observations(days, cfg.taus))
    _emit_manifest("simulate", cfg, intraday, [f"dgp_digest={dgp.digest()}", f"days={dgp.n}", f"m={dgp.m}"])
    return EXIT_OK


def _coef_row(model: str, tau: float, values, status: str = "ok") -> list:
    vals = list(values) + [0.0] * (4 - len(values))
    return [model, f"{tau:.2f}"] + [repr(float(v)) for v in vals] + [status]


def _estimate_one(args):
    model, tau, obs, theta, seed = args
    if model == "rg":
        return fit_rg(obs, theta, tau).as_array()
    if model == "rr":
        return fit_rr(obs, theta, tau).as_array()
    if model == "qgarch":
        return fit_qgarch(obs, tau, seed=seed).coeffs.as_array()
    if model == "rcaviar":
        return fit_rcaviar(obs, tau, seed=seed).params.as_array()
    y = observation_arrays(obs)[0]
    return [sample_quantile_forecast(y, tau), 0.0, 0.0, 0.0]


def _tasks(cfg: RunConfig):
    return [(model, tau, cfg.seed + k) for k, (model, tau) in enumerate((m, t) for m in cfg.models for t in cfg.taus)]


def cmd_estimate(cfg: RunConfig) -> int:
    obs = _daily(cfg)
    _check_rq(obs, cfg)
    out = _out(cfg.path_of("estimate", "output", "coefficients.csv"))
    report_path = cfg.path_of("estimate", "convergence", str(out.with_suffix(".convergence.txt").name))
    theta = None
    conv_lines = []
    if {"rg", "rr"} & set(cfg.models):
        theta, obj, report = fit_qmle(obs, cfg.box(), seed=cfg.seed)
        conv_lines = [f"omega={theta.omega!r}", f"gamma={theta.gamma!r}", f"alpha={theta.alpha!r}", f"beta={theta.beta!r}"]
        conv_lines += report.as_lines()
    rows, failed = [], 0
    for model, tau, seed in _tasks(cfg):
        try:
            vals = _estimate_one((model, tau, obs, theta, seed))
            rows.append(_coef_row(model, tau, vals))
        except (RGQuantError, ArithmeticError) as exc:
            failed += 1
            rows.append(_coef_row(model, tau, [math.nan] * 4, f"failed: {exc}".replace(",", ";")))
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COEF_COLUMNS)
        w.writerows(rows)
    Path(report_path).write_text("\n".join(conv_lines) + "\n", encoding="utf-8", newline="\n")
    sys.stdout.write("\n".join(conv_lines) + "\n")
    _emit_manifest("estimate", cfg, out, [f"rows={len(rows)}", f"failed={failed}"])
    return EXIT_ESTIMATION if failed else EXIT_OK


def _forecaster(model, tau, obs, seed, box):
    if model in ("rg", "rr"):
        theta, _, _ = fit_qmle(obs, box, seed=seed)
        c = fit_rg(obs, theta, tau) if model == "rg" else fit_rr(obs, theta, tau)
        return TwoStepForecaster(model, theta, c)
    if model == "qgarch":
        return fit_qgarch(obs, tau, seed=seed)
    if model == "rcaviar":
        return fit_rcaviar(obs, tau, seed=seed)
    return SampleQuantileForecaster(tau)


def cmd_forecast(cfg: RunConfig) -> int:
    """Fit on the whole sample and predict the next day's quantile."""
    obs = _daily(cfg)
    _check_rq(obs, cfg)
    out = _out(cfg.path_of("forecast", "output", "forecast.csv"))
    rows, failed = [], 0
    for model, tau, seed in _tasks(cfg):
        try:
            q = _forecaster(model, tau, obs, seed, cfg.box()).forecast(obs)
            rows.append([model, f"{tau:.2f}", repr(float(q)), "ok"])
        except (RGQuantError, ArithmeticError) as exc:
            failed += 1
            rows.append([model, f"{tau:.2f}", "nan", f"failed: {exc}".replace(",", ";")])
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "tau", "q_hat", "status"])
        w.writerows(rows)
    _emit_manifest("forecast", cfg, out, [f"next_day={obs[-1].day_index + 1}"])
    return EXIT_ESTIMATION if failed else EXIT_OK


def _backtest_one(args):
    obs, model, tau, window, refit_every, seed = args
    return rolling_backtest(obs, model, tau, window, refit_every=refit_every, seed=seed)


def cmd_backtest(cfg: RunConfig, refit_every: int | None = None) -> int:
    sec = cfg.section("backtest")
    try:
        window = int(cfg.require("backtest", "window"))
        refit = int(sec.get("refit_every", 1)) if refit_every is None else int(refit_every)
    except ValueError as exc:
        raise ConfigurationError(f"invalid [backtest] section: {exc}") from exc
    relative = sec.get("relative_loss", "true").strip().lower() in ("1", "true", "yes", "on")
    if relative and "rg" not in cfg.models:
        raise ConfigurationError("relative loss needs the rg model in [run] models")
    obs = _daily(cfg)
    _check_rq(obs, cfg)
    usable = len(obs) - (1 if obs and obs[0].flagged else 0)
    if window < 1 or window >= usable:
        raise ConfigurationError(f"window {window} must be smaller than the panel length {usable}")
    if refit < 1:
        raise ConfigurationError("refit_every must be >= 1")
    out_dir = cfg.path_of("backtest", "output_dir", ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(obs, model, tau, window, refit, seed) for model, tau, seed in _tasks(cfg)]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as ex:
            results = list(ex.map(_backtest_one, tasks))
    else:
        results = [_backtest_one(t) for t in tasks]
    reports: list[BacktestReport] = []
    skipped = 0
    for (_, model, tau, *_), res in zip(tasks, results):
        write_forecast_csv(out_dir / f"forecast_{model}_{tau:.2f}.csv", res.days, res.y, res.q)
        reports.append(res.report)
        skipped += res.report.skipped
    if relative:
        relative_losses(reports, "rg")
    report_path = out_dir / sec.get("report", "report.csv")
    write_report_csv(report_path, reports)
    for r in reports:
        sys.stdout.write("\n".join(r.as_lines()) + "\n\n")
    _emit_manifest("backtest", cfg, report_path, [f"window={window}", f"refit_every={refit}", f"skipped={skipped}"])
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Print the report CSV as key-value blocks plus per-tau loss ranks."""
    out_dir = cfg.path_of("backtest", "output_dir", ".")
    path = out_dir / cfg.section("backtest").get("report", "report.csv")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != REPORT_COLUMNS:
            raise DataError(f"unexpected report header {header!r}", line=1)
        rows = [dict(zip(header, r)) for r in reader if r]
    by_tau: dict[str, list] = {}
    for r in rows:
        sys.stdout.write("\n".join(f"{k}={r[k]}" for k in REPORT_COLUMNS) + "\n\n")
        by_tau.setdefault(r["tau"], []).append(r)
    for tau, group in sorted(by_tau.items()):
        ranked = sorted(group, key=lambda r: float(r["avg_loss"]))
        sys.stdout.write(f"tau={tau} rank=" + ",".join(r["model"] for r in ranked) + "\n")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "forecast": cmd_forecast,
    "backtest": cmd_backtest,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgquant", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--threads", type=int, default=None, help="worker processes")
        p.add_argument("--refit-every", type=int, default=None, help="backtest refit interval in days")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads)
        if args.command == "backtest":
            return cmd_backtest(cfg, args.refit_every)
        return COMMANDS[args.command](cfg)
    except (ConfigurationError, DataError, ValueError) as exc:
        log.error("validation error: %s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (RGQuantError, ArithmeticError) as exc:
        log.error("estimation failure: %s", exc)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
