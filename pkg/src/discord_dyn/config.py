"""Run configuration: a flat ``key = value`` text format.

One key per line, ``#`` starts a comment.  Recognized keys::

    reservoir_kind   independent | common
    s                spectral exponent (> 0)
    omega_c          cutoff frequency (> 0)
    regime           zero | high
    kT               temperature in units of omega_a (required for high)
    alpha_sq         coupling, default 0.01
    initial_state    bell_psi_plus | eg | ee | 16 comma-separated complex entries (row-major)
    t_end            final time omega_a t (> 0)
    n_steps          RK4 steps (>= 10)
    discord_grid     polar grid size of the measurement search (>= 16)
    measured_qubit   1 | 2, default 2
    prefactor_switch none | gamma_only | gamma_and_j0
    output_dir       directory for the run's files
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Union

import numpy as np

from .liouville import ReservoirKind
from .propagator import INITIAL_STATES, PREFACTOR_MODES, density_matrix
from .spectral import HighT, SpectralParams, TemperatureRegime, ZeroT

__all__ = ["ConfigError", "RunConfig", "parse_config", "emit_config", "load_config", "config_with"]


class ConfigError(ValueError):
    """Bad key, bad value or out-of-range parameter."""


InitialState = Union[str, tuple]


@dataclass(frozen=True)
class RunConfig:
    reservoir_kind: ReservoirKind
    s: float
    omega_c: float
    regime: TemperatureRegime
    alpha_sq: float = 0.01
    initial_state: InitialState = "bell_psi_plus"
    t_end: float = 50.0
    n_steps: int = 4000
    discord_grid: int = 64
    measured_qubit: int = 2
    prefactor_switch: str = "gamma_and_j0"
    output_dir: str = "run"

    def __post_init__(self):
        try:
            object.__setattr__(self, "reservoir_kind", ReservoirKind(self.reservoir_kind))
        except ValueError:
            raise ConfigError(f"reservoir_kind must be independent or common, got {self.reservoir_kind!r}") from None
        for name in ("s", "omega_c", "alpha_sq", "t_end"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if not isinstance(self.regime, (ZeroT, HighT)):
            raise ConfigError(f"regime must be ZeroT or HighT, got {self.regime!r}")
        if self.n_steps < 10:
            raise ConfigError("n_steps must be at least 10")
        if self.discord_grid < 16:
            raise ConfigError("discord_grid must be at least 16")
        if self.measured_qubit not in (1, 2):
            raise ConfigError("measured_qubit must be 1 or 2")
        if self.prefactor_switch not in PREFACTOR_MODES:
            raise ConfigError(f"prefactor_switch must be one of {PREFACTOR_MODES}")
        if isinstance(self.initial_state, str):
            if self.initial_state not in INITIAL_STATES:
                raise ConfigError(f"unknown initial state {self.initial_state!r}")
        else:
            entries = tuple(complex(x) for x in self.initial_state)
            if len(entries) != 16:
                raise ConfigError("explicit initial_state needs 16 entries")
            try:
                density_matrix(np.array(entries).reshape(4, 4))
            except ValueError as exc:
                raise ConfigError(f"initial_state: {exc}") from None
            object.__setattr__(self, "initial_state", entries)

    @property
    def spectral_params(self) -> SpectralParams:
        return SpectralParams(self.alpha_sq, self.omega_c, self.s)

    def rho0(self) -> np.ndarray:
        if isinstance(self.initial_state, str):
            return INITIAL_STATES[self.initial_state].copy()
        return np.array(self.initial_state, dtype=complex).reshape(4, 4)

    def as_dict(self) -> dict:
        """Plain key -> string mapping, the same values :func:`emit_config` writes."""
        return dict(_emit_pairs(self))


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _emit_pairs(cfg: RunConfig):
    yield "reservoir_kind", cfg.reservoir_kind.value
    yield "s", _fmt_float(cfg.s)
    yield "omega_c", _fmt_float(cfg.omega_c)
    if isinstance(cfg.regime, HighT):
        yield "regime", "high"
        yield "kT", _fmt_float(cfg.regime.kT)
    else:
        yield "regime", "zero"
    yield "alpha_sq", _fmt_float(cfg.alpha_sq)
    if isinstance(cfg.initial_state, str):
        yield "initial_state", cfg.initial_state
    else:
        yield "initial_state", ",".join(repr(complex(z)) for z in cfg.initial_state)
    yield "t_end", _fmt_float(cfg.t_end)
    yield "n_steps", str(cfg.n_steps)
    yield "discord_grid", str(cfg.discord_grid)
    yield "measured_qubit", str(cfg.measured_qubit)
    yield "prefactor_switch", cfg.prefactor_switch
    yield "output_dir", str(cfg.output_dir)


def emit_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in _emit_pairs(cfg))


_FIELD_NAMES = {f.name for f in fields(RunConfig)}
_KNOWN = (_FIELD_NAMES - {"regime"}) | {"regime", "kT"}


def _parse_complex(text: str) -> complex:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    return complex(text.replace(" ", ""))


def _split_entries(value: str):
    # commas inside "(a+bj)" never occur, so a plain split is enough
    return [_parse_complex(p) for p in value.split(",") if p.strip()]


def config_from_mapping(raw: dict) -> RunConfig:
    unknown = set(raw) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"reservoir_kind", "s", "omega_c", "regime"} - set(raw)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    kw = {}
    try:
        for key in ("s", "omega_c", "alpha_sq", "t_end"):
            if key in raw:
                kw[key] = float(raw[key])
        for key in ("n_steps", "discord_grid", "measured_qubit"):
            if key in raw:
                kw[key] = int(raw[key])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    regime = str(raw["regime"]).strip().lower()
    if regime == "zero":
        if "kT" in raw:
            raise ConfigError("kT given for the zero-temperature regime")
        kw["regime"] = ZeroT()
    elif regime == "high":
        if "kT" not in raw:
            raise ConfigError("regime = high needs kT")
        try:
            kw["regime"] = HighT(float(raw["kT"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        raise ConfigError(f"regime must be zero or high, got {regime!r}")
    kw["reservoir_kind"] = str(raw["reservoir_kind"]).strip().lower()
    if "initial_state" in raw:
        value = str(raw["initial_state"]).strip()
        if "," in value:
            try:
                kw["initial_state"] = tuple(_split_entries(value))
            except ValueError as exc:
                raise ConfigError(f"initial_state: {exc}") from None
        else:
            kw["initial_state"] = value
    for key in ("prefactor_switch", "output_dir"):
        if key in raw:
            kw[key] = str(raw[key]).strip()
    return RunConfig(**kw)


def parse_config(text: str) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return config_from_mapping(raw)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def config_with(cfg: RunConfig, **updates) -> RunConfig:
    """Copy of ``cfg`` with string- or value-typed updates applied.

    ``regime`` and ``kT`` are handled together, as in the file format.
    """
    raw = cfg.as_dict()
    for key, value in updates.items():
        if key not in _KNOWN:
            raise ConfigError(f"unknown config key {key!r}")
        raw[key] = str(value) if not isinstance(value, str) else value
    if raw.get("regime") == "zero":
        raw.pop("kT", None)
    elif raw.get("regime") == "high" and "kT" not in raw:
        raise ConfigError("regime = high needs kT")
    return config_from_mapping(raw)
