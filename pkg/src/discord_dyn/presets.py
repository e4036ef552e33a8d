"""Named scenario presets for the three figure families.

Each family has six panels ``a``-``f``; each panel holds three series, one per
spectral exponent (sub-Ohmic 0.5, Ohmic 1, super-Ohmic 3).
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ConfigError, RunConfig
from .liouville import ReservoirKind
from .spectral import HighT, ZeroT

__all__ = [
    "SPECTRA",
    "FAMILIES",
    "SHORT_TIME",
    "LONG_TIME",
    "HIGH_KT",
    "Panel",
    "family_panels",
    "panel",
    "preset_configs",
]

SPECTRA = {"sub_ohmic": 0.5, "ohmic": 1.0, "super_ohmic": 3.0}
FAMILIES = ("fig1", "fig2", "fig3")
CUTOFFS = (10.0, 1.0, 0.3)
HIGH_KT = 100.0

# (t_end, n_steps)
SHORT_TIME = (50.0, 4000)
LONG_TIME = (2000.0, 40000)


@dataclass(frozen=True)
class Panel:
    name: str
    kind: ReservoirKind
    omega_c: float
    regime: object
    initial_state: str

    def describe(self) -> dict:
        return {
            "panel": self.name,
            "reservoir_kind": self.kind.value,
            "omega_c": self.omega_c,
            "regime": "high" if isinstance(self.regime, HighT) else "zero",
            "kT": self.regime.kT if isinstance(self.regime, HighT) else None,
            "initial_state": self.initial_state,
        }


def family_panels(family: str) -> list[Panel]:
    if family not in FAMILIES:
        raise ConfigError(f"unknown figure family {family!r}; expected one of {FAMILIES}")
    letters = "abcdef"
    panels = []
    if family in ("fig1", "fig2"):
        regime = HighT(HIGH_KT) if family == "fig1" else ZeroT()
        kinds = [ReservoirKind.INDEPENDENT] * 3 + [ReservoirKind.COMMON] * 3
        for i, (kind, wc) in enumerate(zip(kinds, CUTOFFS * 2)):
            panels.append(Panel(family + letters[i], kind, wc, regime, "bell_psi_plus"))
    else:
        states = ["eg"] * 3 + ["ee"] * 3
        for i, (state, wc) in enumerate(zip(states, CUTOFFS * 2)):
            panels.append(Panel(family + letters[i], ReservoirKind.COMMON, wc, ZeroT(), state))
    return panels


def panel(name: str) -> Panel:
    for p in family_panels(name[:-1]) if name[:-1] in FAMILIES else []:
        if p.name == name:
            return p
    raise ConfigError(f"unknown preset {name!r}")


def preset_configs(name: str, *, long_time: bool = False, output_dir: str = ".",
                   t_end: float | None = None, n_steps: int | None = None,
                   discord_grid: int = 64) -> dict[str, RunConfig]:
    """Run configurations of one panel, keyed by spectrum name."""
    p = panel(name)
    default_t, default_n = LONG_TIME if long_time else SHORT_TIME
    t_end = default_t if t_end is None else t_end
    n_steps = default_n if n_steps is None else n_steps
    suffix = "_long" if long_time else ""
    return {
        label: RunConfig(
            reservoir_kind=p.kind,
            s=s,
            omega_c=p.omega_c,
            regime=p.regime,
            initial_state=p.initial_state,
            t_end=t_end,
            n_steps=n_steps,
            discord_grid=discord_grid,
            output_dir=f"{output_dir}/{name}_{label}{suffix}",
        )
        for label, s in SPECTRA.items()
    }
