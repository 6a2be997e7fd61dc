import csv
import logging

import pytest

from rgquant.cli import main
from rgquant.config import load_config
from rgquant.errors import ConfigurationError
from rgquant.market_data import build_daily_observations, load_intraday_csv, write_daily_csv

BASE = """[run]
seed = 3
taus = {taus}
models = {models}

[dgp]
n = {n}
m = {m}
w = 0.75
omega = 1
gamma = 0.1
alpha = 0.5
beta = 0.2

[simulate]
intraday = intraday.csv
truth = truth.csv

[data]
intraday = intraday.csv
daily = daily.csv

[backtest]
window = {window}
refit_every = 20
output_dir = out
"""


def write_cfg(tmp_path, name="run.ini", taus="0.05", models="rg, rr", n=10, m=10, window=5, extra=""):
    p = tmp_path / name
    p.write_text(BASE.format(taus=taus, models=models, n=n, m=m, window=window) + extra, encoding="utf-8")
    return p


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_smoke_and_determinism(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["simulate", "--config", str(cfg)]) == 0
    body = [ln for ln in (tmp_path / "intraday.csv").read_text().splitlines() if ln and not ln.startswith(("#", "day"))]
    assert len(body) == 10 * 11
    first = (tmp_path / "intraday.csv").read_bytes(), (tmp_path / "truth.csv").read_bytes()
    out = capsys.readouterr().out
    assert "config_sha256=" in out and "seed=3" in out and "version=" in out
    assert (tmp_path / "intraday.csv.manifest").exists()
    assert main(["simulate", "--config", str(cfg)]) == 0
    assert first == ((tmp_path / "intraday.csv").read_bytes(), (tmp_path / "truth.csv").read_bytes())
    assert main(["simulate", "--config", str(cfg), "--seed", "4"]) == 0
    assert first[0] != (tmp_path / "intraday.csv").read_bytes()


def test_missing_w_names_field(tmp_path, caplog):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(write_cfg(tmp_path).read_text().replace("w = 0.75\n", ""))
    with caplog.at_level(logging.ERROR):
        assert main(["simulate", "--config", str(cfg)]) == 1
    assert "[dgp] w" in caplog.text


def test_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(write_cfg(tmp_path, taus="0.05, 0.05"))
    with pytest.raises(ConfigurationError):
        load_config(write_cfg(tmp_path, taus="1.5"))
    with pytest.raises(ConfigurationError):
        load_config(write_cfg(tmp_path, models="rg, garch"))
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.ini")
    cfg = load_config(write_cfg(tmp_path, extra="\n[box]\ngamma_upper = 0.5\n"), seed=9, threads=2)
    assert cfg.seed == 9 and cfg.threads == 2 and cfg.box().upper[1] == 0.5
    assert main(["estimate", "--config", str(tmp_path / "missing.ini")]) == 1


def test_unwritable_output_is_io_error(tmp_path):
    cfg = write_cfg(tmp_path)
    (tmp_path / "plain_file").write_text("")
    cfg.write_text(cfg.read_text().replace("intraday = intraday.csv\ntruth", "intraday = plain_file/x.csv\ntruth"))
    assert main(["simulate", "--config", str(cfg)]) == 3


@pytest.fixture(scope="module")
def panel_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("panel")
    cfg = write_cfg(d, taus="0.01, 0.03, 0.05, 0.10, 0.15", models="rg, rr, qgarch, rcaviar, sq", n=140, m=20, window=120)
    assert main(["simulate", "--config", str(cfg)]) == 0
    obs = build_daily_observations(load_intraday_csv(d / "intraday.csv"), (0.01, 0.03, 0.05, 0.10, 0.15))
    write_daily_csv(d / "daily.csv", obs)
    return d, cfg


def test_estimate_rows_and_determinism(panel_dir, tmp_path):
    d, _ = panel_dir
    cfg = write_cfg(d, name="est.ini", taus="0.05, 0.10", models="rg, rr", n=140, m=20,
                    extra="\n[estimate]\noutput = est.csv\n")
    cfg.write_text(cfg.read_text().replace("daily = daily.csv", "daily = daily_est.csv"))
    assert main(["estimate", "--config", str(cfg)]) == 0
    rows = read_rows(d / "est.csv")
    assert [(r["model"], r["tau"]) for r in rows] == [("rg", "0.05"), ("rg", "0.10"), ("rr", "0.05"), ("rr", "0.10")]
    assert all(r["status"] == "ok" for r in rows)
    first = (d / "est.csv").read_bytes()
    assert main(["estimate", "--config", str(cfg)]) == 0
    assert (d / "est.csv").read_bytes() == first
    assert "best_start=" in (d / "est.convergence.txt").read_text()


def test_estimate_rr_without_rq(tmp_path):
    (tmp_path / "daily.csv").write_text("day,y,rv,ov\n" + "".join(f"{i},0.1,1.0,0.1\n" for i in range(1, 80)))
    cfg = write_cfg(tmp_path)
    assert main(["estimate", "--config", str(cfg)]) == 1


def test_estimate_failure_keeps_partial_results(panel_dir):
    d, _ = panel_dir
    lines = (d / "daily.csv").read_text().splitlines()
    (d / "short.csv").write_text("\n".join(lines[:61]) + "\n")
    cfg = write_cfg(d, name="short.ini", taus="0.05", models="rg, qgarch",
                    extra="\n[estimate]\noutput = short_coef.csv\n")
    cfg.write_text(cfg.read_text().replace("daily = daily.csv", "daily = short.csv"))
    assert main(["estimate", "--config", str(cfg)]) == 2
    rows = read_rows(d / "short_coef.csv")
    assert rows[0]["status"] == "ok" and rows[1]["status"].startswith("failed")


def test_forecast(panel_dir):
    d, _ = panel_dir
    cfg = write_cfg(d, name="fc.ini", taus="0.05", models="rg, sq", n=140, m=20)
    assert main(["forecast", "--config", str(cfg)]) == 0
    rows = read_rows(d / "forecast.csv")
    assert len(rows) == 2 and all(float(r["q_hat"]) < 0 for r in rows)


@pytest.mark.slow
def test_backtest_full_grid_and_report(panel_dir, capsys):
    d, cfg = panel_dir
    assert main(["backtest", "--config", str(cfg)]) == 0
    rows = read_rows(d / "out" / "report.csv")
    assert len(rows) == 25
    assert all(float(r["rel_loss"]) == 1.0 for r in rows if r["model"] == "rg")
    fc = read_rows(d / "out" / "forecast_rg_0.05.csv")
    assert len(fc) == 140 - 120
    capsys.readouterr()
    assert main(["report", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert out.count("model=") == 25 and "tau=0.05 rank=" in out


def test_backtest_validation(panel_dir):
    d, _ = panel_dir
    too_long = write_cfg(d, name="w.ini", models="rg, sq", window=140)
    assert main(["backtest", "--config", str(too_long)]) == 1
    no_rg = write_cfg(d, name="norg.ini", models="sq", window=120)
    assert main(["backtest", "--config", str(no_rg)]) == 1


def test_backtest_refit_flag(panel_dir):
    d, _ = panel_dir
    cfg = write_cfg(d, name="sq.ini", models="rg, sq", window=130, extra="")
    cfg.write_text(cfg.read_text().replace("output_dir = out", "output_dir = out_sq"))
    assert main(["backtest", "--config", str(cfg), "--refit-every", "5"]) == 0
    manifest = (d / "out_sq" / "report.csv.manifest").read_text()
    assert "refit_every=5" in manifest and "window=130" in manifest
