"""Ohmic-class reservoir spectra and thermal occupation factors.

Units are fixed by the qubit transition frequency, ``omega_a = 1``; every
frequency, energy and coupling below is a plain float in those units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "SpectralParams",
    "ZeroT",
    "HighT",
    "TemperatureRegime",
    "spectral_density",
    "thermal_factor",
    "OMEGA_A",
]

OMEGA_A = 1.0


@dataclass(frozen=True)
class SpectralParams:
    """Spectrum ``J(w) = coupling_sq * cutoff**(1-s) * w**s * exp(-w/cutoff)``."""

    coupling_sq: float
    cutoff: float
    exponent: float

    def __post_init__(self):
        for name in ("coupling_sq", "cutoff", "exponent"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @classmethod
    def sub_ohmic(cls, cutoff: float, coupling_sq: float = 0.01) -> "SpectralParams":
        return cls(coupling_sq, cutoff, 0.5)

    @classmethod
    def ohmic(cls, cutoff: float, coupling_sq: float = 0.01) -> "SpectralParams":
        return cls(coupling_sq, cutoff, 1.0)

    @classmethod
    def super_ohmic(cls, cutoff: float, coupling_sq: float = 0.01) -> "SpectralParams":
        return cls(coupling_sq, cutoff, 3.0)


@dataclass(frozen=True)
class ZeroT:
    """Zero-temperature limit, ``1 + 2N(w) = 1``."""

    def __str__(self):
        return "zero"


@dataclass(frozen=True)
class HighT:
    """High-temperature limit, ``1 + 2N(w) = 2 kT / w``."""

    kT: float

    def __post_init__(self):
        if not (math.isfinite(self.kT) and self.kT > 0):
            raise ValueError(f"kT must be positive, got {self.kT!r}")

    def __str__(self):
        return f"high:{self.kT!r}"


TemperatureRegime = Union[ZeroT, HighT]


def spectral_density(omega, params: SpectralParams):
    """Evaluate the spectral density; accepts scalars or arrays.

    Raises ``ValueError`` for negative frequencies.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for omega >= 0 only")
    wc, s = params.cutoff, params.exponent
    out = params.coupling_sq * wc ** (1.0 - s) * w**s * np.exp(-w / wc)
    if out.ndim == 0:
        return float(out)
    return out


def thermal_factor(omega, regime: TemperatureRegime):
    """Return ``1 + 2N(omega)`` in the requested limit."""
    w = np.asarray(omega, dtype=float)
    if isinstance(regime, ZeroT):
        out = np.ones_like(w)
    elif isinstance(regime, HighT):
        if np.any(w <= 0):
            raise ValueError("high-temperature factor diverges at omega <= 0")
        out = 2.0 * regime.kT / w
    else:
        raise TypeError(f"unknown temperature regime {regime!r}")
    if out.ndim == 0:
        return float(out)
    return out
