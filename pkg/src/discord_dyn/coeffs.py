"""Time-dependent master-equation coefficients.

Each coefficient is a frequency integral of the reservoir spectrum against an
oscillating kernel.  With ``x = omega - omega_a``::

    kappa1(t) = 1/2 int J(w) (1 + 2N(w)) sin(x t) / x       dw
    kappa2(t) = 1/2 int J(w) (1 + 2N(w)) (1 - cos(x t)) / x dw
    mu1, mu2  : same kernels, thermal factor replaced by 1

Two evaluation routes are provided.  :func:`coefficients_at` does the frequency
integral by adaptive quadrature for one time.  :func:`coefficient_series`
exchanges the order of integration: the frequency integral of the spectrum
against ``exp(i w tau)`` has a closed form (the bath correlation function), so
``kappa1 + i kappa2 = 1/2 int_0^t exp(-i tau) C(tau) dtau`` is accumulated by
composite Gauss-Legendre over a whole time grid at once.  The second route is
what the propagator uses; the first is the per-time reference.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .spectral import OMEGA_A, HighT, SpectralParams, TemperatureRegime, ZeroT, spectral_density

__all__ = [
    "CoefficientSet",
    "CoefficientIntegrals",
    "QuadratureError",
    "coefficients_at",
    "bath_correlation",
    "coefficient_series",
    "CoefficientCache",
    "accumulate_integrals",
    "j0_integral",
]

_TAYLOR_EPS = 1e-8


class QuadratureError(RuntimeError):
    """The adaptive integrator could not reach the requested tolerance."""


@dataclass(frozen=True)
class CoefficientSet:
    kappa1: float
    kappa2: float
    mu1: float
    mu2: float

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "mu1", "mu2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")

    @classmethod
    def zero(cls) -> "CoefficientSet":
        return cls(0.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.kappa1, self.kappa2, self.mu1, self.mu2])


@dataclass(frozen=True)
class CoefficientIntegrals:
    """Running time integrals; ``Gamma`` is ``4 * int kappa1``."""

    Gamma: float
    int_kappa2: float
    int_mu1: float
    int_mu2: float


# ---------------------------------------------------------------------------
# frequency-domain route


def _sin_kernel(x, t):
    # sin(x t) / x, removable at x = 0
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _TAYLOR_EPS
    xs = np.where(small, 1.0, x)
    return np.where(small, t - x * x * t**3 / 6.0, np.sin(xs * t) / xs)


def _cos_kernel(x, t):
    # (1 - cos(x t)) / x written as 2 sin^2(x t / 2) / x to avoid cancellation
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _TAYLOR_EPS
    xs = np.where(small, 1.0, x)
    return np.where(small, x * t * t / 2.0, 2.0 * np.sin(xs * t / 2.0) ** 2 / xs)


def _weight(params: SpectralParams, regime: TemperatureRegime, thermal: bool):
    wc, s, a2 = params.cutoff, params.exponent, params.coupling_sq
    if thermal and isinstance(regime, HighT):
        # J(w) * 2kT / w, written out so that w = 0 is handled for s >= 1
        pref = 2.0 * regime.kT * a2 * wc ** (1.0 - s)

        def f(w):
            return pref * w ** (s - 1.0) * math.exp(-w / wc)

        singular = s < 1.0
    else:

        def f(w):
            return spectral_density(w, params)

        singular = False
    return f, singular


def _quad(func, a, b, epsabs, epsrel, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=2000, full_output=1, **kw)
    value, err = out[0], out[1]
    if len(out) > 3 and err > 10.0 * max(epsabs, epsrel * abs(value)):
        raise QuadratureError(f"quadrature on [{a}, {b}] failed: {out[3]!s} (err={err:.3g})")
    return value


def _kernel_integral(f, singular, t, kernel, wmax, epsabs, epsrel):
    """Integrate ``f(w) * kernel(w - 1, t)`` over ``[0, wmax]``."""
    k = _sin_kernel if kernel == "sin" else _cos_kernel
    total = 0.0

    # [0, omega_a]: u**2 substitution tames the w**(s-1) endpoint
    if singular:
        total += _quad(lambda u: 2.0 * u * f(u * u) * float(k(u * u - OMEGA_A, t)),
                       0.0, 1.0, epsabs, epsrel)
    else:
        total += _quad(lambda w: f(w) * float(k(w - OMEGA_A, t)), 0.0, OMEGA_A, epsabs, epsrel)

    split = 2.0 * OMEGA_A
    total += _quad(lambda w: f(w) * float(k(w - OMEGA_A, t)), OMEGA_A, split, epsabs, epsrel)
    if wmax <= split:
        return total

    if t * wmax <= 200.0:
        total += _quad(lambda w: f(w) * float(k(w - OMEGA_A, t)), split, wmax, epsabs, epsrel)
        return total

    # oscillatory tail: expand the shifted kernel into sin(wt), cos(wt) weights
    def h(w):
        return f(w) / (w - OMEGA_A)

    ws = _quad(h, split, wmax, epsabs, epsrel, weight="sin", wvar=t)
    wc = _quad(h, split, wmax, epsabs, epsrel, weight="cos", wvar=t)
    ct, st = math.cos(OMEGA_A * t), math.sin(OMEGA_A * t)
    if kernel == "sin":
        total += ct * ws - st * wc
    else:
        plain = _quad(h, split, wmax, epsabs, epsrel)
        total += plain - (ct * wc + st * ws)
    return total


def coefficients_at(
    t: float,
    params: SpectralParams,
    regime: TemperatureRegime,
    epsabs: float = 1e-10,
    epsrel: float = 1e-8,
) -> CoefficientSet:
    """Evaluate the four coefficients at time ``t`` by adaptive frequency quadrature."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return CoefficientSet.zero()
    wmax = max(50.0 * params.cutoff, OMEGA_A + 200.0 / t)

    values = []
    for thermal in (True, False):
        if not thermal and isinstance(regime, ZeroT):
            # thermal factor is 1 at T = 0, so mu == kappa
            values.extend(values[:2])
            break
        f, singular = _weight(params, regime, thermal)
        for kernel in ("sin", "cos"):
            values.append(0.5 * _kernel_integral(f, singular, t, kernel, wmax, epsabs, epsrel))
    return CoefficientSet(*values)


# ---------------------------------------------------------------------------
# time-domain route


def bath_correlation(tau, params: SpectralParams, regime: TemperatureRegime, thermal: bool = True):
    """Closed-form ``int_0^inf J(w) F(w) exp(i w tau) dw``.

    ``F`` is the thermal factor when ``thermal`` is true, otherwise 1.
    """
    tau = np.asarray(tau, dtype=float)
    wc, s, a2 = params.cutoff, params.exponent, params.coupling_sq
    z = 1.0 - 1j * wc * tau
    if thermal and isinstance(regime, HighT):
        return 2.0 * regime.kT * a2 * wc * gamma_fn(s) * z ** (-s)
    return a2 * wc * wc * gamma_fn(s + 1.0) * z ** (-(s + 1.0))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _panel_integrals(edges, func, max_width):
    """Integrals of ``func`` over consecutive intervals of ``edges``."""
    widths = np.diff(edges)
    nsub = np.maximum(1, np.ceil(widths / max_width).astype(int))
    owner = np.repeat(np.arange(widths.size), nsub)
    # position of each sub-panel inside its interval
    first = np.cumsum(nsub) - nsub
    local = np.arange(owner.size) - np.repeat(first, nsub)
    h = widths[owner] / nsub[owner]
    a = edges[:-1][owner] + local * h
    mid = a + 0.5 * h
    nodes = mid[:, None] + 0.5 * h[:, None] * _GL_X[None, :]
    vals = func(nodes) @ _GL_W * (0.5 * h)
    out = np.zeros(widths.size, dtype=vals.dtype)
    np.add.at(out, owner, vals)
    return out


def coefficient_series(times, params: SpectralParams, regime: TemperatureRegime) -> np.ndarray:
    """Coefficients on a sorted time grid, shape ``(len(times), 4)``.

    Columns are ``kappa1, kappa2, mu1, mu2``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d array")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and sorted")
    edges = np.concatenate(([0.0], times))
    # correlation functions vary on the scale 1/cutoff, the phase on 1/omega_a
    max_width = 0.25 * min(1.0 / OMEGA_A, 1.0 / params.cutoff)

    def integrand(thermal):
        return lambda tau: 0.5 * np.exp(-1j * OMEGA_A * tau) * bath_correlation(tau, params, regime, thermal)

    out = np.empty((times.size, 4))
    th = np.cumsum(_panel_integrals(edges, integrand(True), max_width))
    out[:, 0], out[:, 1] = th.real, th.imag
    if isinstance(regime, ZeroT):
        out[:, 2], out[:, 3] = th.real, th.imag
    else:
        bare = np.cumsum(_panel_integrals(edges, integrand(False), max_width))
        out[:, 2], out[:, 3] = bare.real, bare.imag
    return out


class CoefficientCache:
    """Coefficient values memoized on the times of one trajectory grid.

    Precomputes every requested time in one vectorized pass.  Lookups of
    other times fall back to :func:`coefficients_at`.  A cache instance is
    meant to be owned by one worker; lookups are guarded so that sharing one
    is still safe.
    """

    def __init__(self, params: SpectralParams, regime: TemperatureRegime, times=None):
        self.params = params
        self.regime = regime
        self._lock = threading.Lock()
        self._table: dict[float, CoefficientSet] = {}
        if times is not None:
            self.precompute(times)

    def precompute(self, times) -> None:
        times = np.unique(np.asarray(times, dtype=float))
        series = coefficient_series(times, self.params, self.regime)
        with self._lock:
            for t, row in zip(times.tolist(), series):
                self._table[t] = CoefficientSet(*row.tolist())

    def __call__(self, t: float) -> CoefficientSet:
        with self._lock:
            hit = self._table.get(float(t))
        if hit is not None:
            return hit
        value = coefficients_at(float(t), self.params, self.regime)
        with self._lock:
            self._table[float(t)] = value
        return value

    def __len__(self):
        return len(self._table)


# ---------------------------------------------------------------------------
# running integrals


def _check_grid(t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("time grid must be a non-empty 1-d sequence")
    if t_grid[0] != 0.0:
        raise ValueError("time grid must start at 0")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t_grid


def accumulate_integrals(t_grid, params=None, regime=None, *, series=None) -> list[CoefficientIntegrals]:
    """Trapezoidal running integrals of the coefficients over ``t_grid``.

    ``series`` may supply precomputed coefficients (shape ``(n, 4)``), or a
    callable returning a :class:`CoefficientSet` for a time; otherwise they
    are computed from ``params`` and ``regime``.
    """
    t_grid = _check_grid(t_grid)
    if series is None:
        if params is None or regime is None:
            raise ValueError("need params and regime when no series is given")
        series = coefficient_series(t_grid, params, regime)
    elif callable(series):
        series = np.array([series(t).as_array() for t in t_grid])
    series = np.asarray(series, dtype=float)
    if series.shape != (t_grid.size, 4):
        raise ValueError(f"series has shape {series.shape}, expected ({t_grid.size}, 4)")
    if t_grid.size == 1:
        run = np.zeros((1, 4))
    else:
        run = integrate.cumulative_trapezoid(series, t_grid, axis=0, initial=0.0)
    return [CoefficientIntegrals(4.0 * r[0], r[1], r[2], r[3]) for r in run.tolist()]


def j0_integral(t_grid, series, formula: str = "literal") -> np.ndarray:
    """Phase parameter multiplying the frequency-shift superoperator.

    ``literal``: ``-2i int kappa2 (kappa2 + mu2) dt`` as printed for the
    factorized solution.  ``naive``: ``-i int kappa2 dt``, which is what the
    ``-i kappa2`` term of the generator integrates to.
    """
    t_grid = _check_grid(t_grid)
    series = np.asarray(series, dtype=float)
    k2, m2 = series[:, 1], series[:, 3]
    if formula == "literal":
        integrand = -2j * k2 * (k2 + m2)
    elif formula == "naive":
        integrand = -1j * k2
    else:
        raise ValueError(f"unknown j0 formula {formula!r}")
    if t_grid.size == 1:
        return np.zeros(1, dtype=complex)
    return integrate.cumulative_trapezoid(integrand, t_grid, initial=0.0)
