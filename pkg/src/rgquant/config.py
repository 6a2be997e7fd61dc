"""INI run configuration for the command-line front end."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from rgquant.errors import ConfigurationError
from rgquant.market_data import DEFAULT_LAMBDA
from rgquant.qmle import GarchParams, ParamBox
from rgquant.simulate import DgpConfig

__all__ = ["RunConfig", "load_config", "MODEL_NAMES"]

MODEL_NAMES = ("rg", "rr", "qgarch", "rcaviar", "sq")
DGP_REQUIRED = ("n", "m", "w", "omega", "gamma", "alpha", "beta")


@dataclass
class RunConfig:
    path: Path
    digest: str
    seed: int = 0
    threads: int = 1
    taus: tuple = (0.05,)
    models: tuple = ("rg",)
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def require(self, section: str, key: str) -> str:
        try:
            return self.sections[section][key]
        except KeyError:
            raise ConfigurationError(f"missing [{section}] {key}") from None

    def path_of(self, section: str, key: str, default: str | None = None) -> Path | None:
        raw = self.section(section).get(key, default)
        if raw is None:
            return None
        p = Path(raw)
        return p if p.is_absolute() else self.path.parent / p

    def dgp(self) -> DgpConfig:
        sec = self.section("dgp")
        for key in DGP_REQUIRED:
            if key not in sec:
                raise ConfigurationError(f"missing [dgp] {key}")
        try:
            params = GarchParams(*(float(sec[k]) for k in ("omega", "gamma", "alpha", "beta")))
            return DgpConfig(
                params=params,
                w=float(sec["w"]),
                lam=float(sec.get("lambda", DEFAULT_LAMBDA)),
                n=int(sec["n"]),
                m=int(sec["m"]),
                seed=self.seed,
                d_df=float(sec.get("d_df", 0.05)),
                d_nc=float(sec.get("d_nc", 0.05)),
                burn_in=int(sec.get("burn_in", 200)),
            )
        except ValueError as exc:
            raise ConfigurationError(f"invalid [dgp] section: {exc}") from exc

    def box(self) -> ParamBox:
        sec = self.section("box")
        if not sec:
            return ParamBox()
        default = ParamBox()
        names = ("omega", "gamma", "alpha", "beta")
        try:
            lower = tuple(float(sec.get(f"{k}_lower", lo)) for k, lo in zip(names, default.lower))
            upper = tuple(float(sec.get(f"{k}_upper", hi)) for k, hi in zip(names, default.upper))
            return ParamBox(lower, upper)
        except ValueError as exc:
            raise ConfigurationError(f"invalid [box] section: {exc}") from exc


def _parse_list(raw: str) -> list[str]:
    return [s.strip() for s in raw.replace(";", ",").split(",") if s.strip()]


def load_config(path, seed: int | None = None, threads: int | None = None) -> RunConfig:
    """Parse and validate an INI config; command-line overrides win."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(raw.decode("utf-8"), source=str(path))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc
    sections = {name: dict(parser[name]) for name in parser.sections()}
    run = sections.get("run", {})
    try:
        cfg_seed = int(run.get("seed", 0)) if seed is None else int(seed)
        cfg_threads = int(run.get("threads", 1)) if threads is None else int(threads)
        taus = tuple(float(t) for t in _parse_list(run.get("taus", "0.05")))
    except ValueError as exc:
        raise ConfigurationError(f"invalid [run] section: {exc}") from exc
    if not taus or any(not 0.0 < t < 1.0 for t in taus):
        raise ConfigurationError(f"tau values must lie in (0, 1): {taus}")
    if len({round(t, 9) for t in taus}) != len(taus):
        raise ConfigurationError(f"tau values must be distinct: {taus}")
    models = tuple(m.lower() for m in _parse_list(run.get("models", "rg")))
    unknown = [m for m in models if m not in MODEL_NAMES]
    if unknown:
        raise ConfigurationError(f"unknown model(s) {unknown}; choose from {MODEL_NAMES}")
    if cfg_threads < 1:
        raise ConfigurationError("threads must be >= 1")
    digest = hashlib.sha256(raw).hexdigest()
    return RunConfig(path, digest, cfg_seed, cfg_threads, taus, models, sections)
