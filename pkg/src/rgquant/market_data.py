"""
Intraday panel ingestion and construction of the daily observation series.

Input CSV layout::

    # close_prev=4.6012          (optional)
    day,tick,logprice
    1,0,4.6100
    1,1,4.6093
    ...

Daily CSV layout: ``day,y,rv,ov,rq_<tau>...`` with tau rendered to two
decimals.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rgquant.errors import ConfigurationError, DataError, InsufficientDataError, OrderingError, ParseError
from rgquant.realized import (
    realized_quantile,
    realized_quantile_batch,
    realized_variance,
    realized_variance_batch,
)

__all__ = [
    "SessionCalendar",
    "IntradayDay",
    "DailyObservation",
    "load_intraday_csv",
    "write_intraday_csv",
    "build_daily_observations",
    "write_daily_csv",
    "read_daily_csv",
    "observation_arrays",
    "tau_label",
]

DEFAULT_LAMBDA = 6.5 / 24


@dataclass(frozen=True)
class SessionCalendar:
    """Open-to-close session length as a fraction of a 24h day."""

    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"session fraction must lie in (0, 1), got {self.lam}")


@dataclass
class IntradayDay:
    """Log prices of one open-to-close session.

    ``close_prev`` is the previous session's closing log price. When it is not
    known it is set to the session open and ``gap_missing`` is True.
    """

    day_index: int
    log_prices: np.ndarray
    close_prev: float
    gap_missing: bool = False

    def __post_init__(self):
        self.log_prices = np.asarray(self.log_prices, dtype=float)
        if self.log_prices.ndim != 1 or self.log_prices.size < 2:
            raise InsufficientDataError("a session needs at least 2 ticks", day=self.day_index)
        if not np.all(np.isfinite(self.log_prices)):
            raise DataError("non-finite log price", day=self.day_index)
        if not math.isfinite(self.close_prev):
            raise DataError("non-finite previous close", day=self.day_index)

    @property
    def m(self) -> int:
        return self.log_prices.size - 1

    @property
    def open(self) -> float:
        return float(self.log_prices[0])

    @property
    def close(self) -> float:
        return float(self.log_prices[-1])


@dataclass
class DailyObservation:
    day_index: int
    y: float
    rv: float
    ov: float
    rq: dict[float, float] = field(default_factory=dict)
    flagged: bool = False


def tau_label(tau: float) -> str:
    return f"rq_{tau:.2f}"


def load_intraday_csv(path, calendar: SessionCalendar | None = None) -> list[IntradayDay]:
    """Read an intraday panel written as ``day,tick,logprice`` rows.

    ``calendar`` is accepted for interface symmetry; the tick grid is taken to
    span the open-to-close session whatever its length.
    """
    close_prev = None
    rows: dict[int, list[float]] = {}
    order: list[int] = []
    last_tick: int | None = None
    header_seen = False
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("close_prev="):
                    try:
                        close_prev = float(body.split("=", 1)[1])
                    except ValueError as exc:
                        raise ParseError(f"bad close_prev value {body!r}", line=lineno) from exc
                continue
            if not header_seen:
                if [c.strip() for c in line.split(",")] != ["day", "tick", "logprice"]:
                    raise ParseError(f"expected header 'day,tick,logprice', got {line!r}", line=lineno)
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"expected 3 fields, got {len(parts)}", line=lineno)
            try:
                day = int(parts[0])
                tick = int(parts[1])
                price = float(parts[2])
            except ValueError as exc:
                raise ParseError(f"cannot parse row {line!r}", line=lineno) from exc
            if not math.isfinite(price):
                raise ParseError("non-finite log price", line=lineno)
            if not order or day != order[-1]:
                if order and day != order[-1] + 1:
                    raise OrderingError(f"day {day} follows day {order[-1]}", line=lineno)
                order.append(day)
                rows[day] = []
                last_tick = None
            if last_tick is not None and tick <= last_tick:
                raise OrderingError(f"tick {tick} after tick {last_tick}", line=lineno)
            last_tick = tick
            rows[day].append(price)
    if not header_seen:
        raise ParseError("missing header", line=1)

    days = []
    prev_close = close_prev
    for day in order:
        prices = rows[day]
        if len(prices) < 2:
            raise InsufficientDataError(f"only {len(prices)} tick(s)", day=day)
        missing = prev_close is None
        cp = prices[0] if missing else prev_close
        days.append(IntradayDay(day, np.array(prices), float(cp), gap_missing=missing))
        prev_close = prices[-1]
    return days


def write_intraday_csv(path, days) -> None:
    """Inverse of :func:`load_intraday_csv` (floats written with ``repr``)."""
    buf = io.StringIO()
    if days and not days[0].gap_missing:
        buf.write(f"# close_prev={float(days[0].close_prev)!r}\n")
    buf.write("day,tick,logprice\n")
    for d in days:
        for j, p in enumerate(d.log_prices.tolist()):
            buf.write(f"{d.day_index},{j},{p!r}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def build_daily_observations(days, taus=()) -> list[DailyObservation]:
    """Derive returns, RV, OV and realized quantiles for every day.

    Returns and overnight gaps are measured against ``close_prev`` of each
    day, which the loader chains to the preceding close.
    """
    days = list(days)
    if len(days) < 2:
        raise InsufficientDataError("at least 2 days are required")
    taus = sorted(float(t) for t in taus)
    for t in taus:
        if not 0.0 < t < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {t}")
    for a, b in zip(days, days[1:]):
        if b.day_index != a.day_index + 1:
            raise OrderingError(f"day {b.day_index} follows day {a.day_index}")

    m_set = {d.m for d in days}
    if len(m_set) == 1:
        mat = np.vstack([d.log_prices for d in days])
        try:
            rv = realized_variance_batch(mat)
            rq = realized_quantile_batch(mat, taus) if taus else {}
        except (DataError, ArithmeticError):
            rv, rq = None, None
    else:
        rv, rq = None, None

    out = []
    for k, d in enumerate(days):
        try:
            if rv is None:
                rv_k = realized_variance(d)
                rq_k = {t: realized_quantile(d, t) for t in taus}
            else:
                rv_k = float(rv[k])
                rq_k = {t: float(rq[t][k]) for t in taus}
        except DataError as exc:
            raise type(exc)(str(exc), day=d.day_index) from exc
        except ArithmeticError as exc:
            raise DataError(str(exc), day=d.day_index) from exc
        gap = d.open - d.close_prev
        out.append(
            DailyObservation(
                day_index=d.day_index,
                y=d.close - d.close_prev,
                rv=rv_k,
                ov=gap * gap,
                rq=rq_k,
                flagged=d.gap_missing,
            )
        )
    return out


def observation_arrays(obs, tau: float | None = None):
    """Stack observations into arrays ``(y, rv, ov, rq)``.

    A leading day without a known previous close is dropped. ``rq`` is None
    unless ``tau`` is given.
    """
    obs = list(obs)
    if obs and obs[0].flagged:
        obs = obs[1:]
    y = np.array([o.y for o in obs], dtype=float)
    rv = np.array([o.rv for o in obs], dtype=float)
    ov = np.array([o.ov for o in obs], dtype=float)
    rq = None
    if tau is not None:
        key = _find_tau(obs[0].rq, tau) if obs else None
        if key is None:
            raise ConfigurationError(f"no realized quantile for tau={tau}")
        rq = np.array([o.rq[key] for o in obs], dtype=float)
    return y, rv, ov, rq


def _find_tau(rq: dict, tau: float):
    for key in rq:
        if abs(key - tau) < 1e-9:
            return key
    return None


def write_daily_csv(path, obs) -> None:
    """Write the daily series; a flagged first day (unknown gap) is skipped."""
    obs = [o for i, o in enumerate(obs) if not (i == 0 and o.flagged)]
    taus = sorted(obs[0].rq) if obs else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "y", "rv", "ov"] + [tau_label(t) for t in taus])
        for o in obs:
            w.writerow([o.day_index, repr(o.y), repr(o.rv), repr(o.ov)] + [repr(o.rq[t]) for t in taus])


def read_daily_csv(path) -> list[DailyObservation]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty daily file", line=1) from None
        if header[:4] != ["day", "y", "rv", "ov"]:
            raise ParseError(f"unexpected daily header {header!r}", line=1)
        try:
            taus = [float(h[3:]) for h in header[4:]]
        except ValueError as exc:
            raise ParseError(f"bad realized quantile column in {header!r}", line=1) from exc
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            try:
                vals = [float(v) for v in row[1:]]
                day = int(row[0])
            except ValueError as exc:
                raise ParseError(f"cannot parse row {row!r}", line=lineno) from exc
            out.append(DailyObservation(day, vals[0], vals[1], vals[2], dict(zip(taus, vals[3:]))))
    return out
