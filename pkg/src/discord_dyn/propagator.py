"""Time evolution of the two-qubit state.

``propagate_numerical`` integrates ``d vec(rho)/dt = L(t) vec(rho)`` with
classical RK4, evaluating the generator at ``t``, ``t + h/2`` and ``t + h``.
``solve_independent_analytic`` is the factorized solution of the
independent-reservoir equation,

    rho(t) = exp(-Gamma) exp(j0 J0) exp(k+ K+) exp(k0 K0) exp(k- K-) rho(0),

with ``k+, k0, k-`` from a Riccati system.  It serves as a cross-check of the
numerical path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coeffs import CoefficientCache
from .discord import discord_series
from .liouville import SUPEROPERATORS, ReservoirKind, SuperoperatorSet, vec
from .spectral import OMEGA_A, SpectralParams, TemperatureRegime, spectral_density, thermal_factor

__all__ = [
    "StepInstabilityError",
    "RiccatiBlowupError",
    "NegativityWarning",
    "Trajectory",
    "INITIAL_STATES",
    "initial_state",
    "density_matrix",
    "generator_basis",
    "propagate_numerical",
    "solve_independent_analytic",
    "markov_limit_check",
    "apply_factorized",
    "PREFACTOR_MODES",
]

TRACE_LIMIT = 1e-6
NEGATIVITY_LIMIT = 1e-8
PREFACTOR_MODES = ("none", "gamma_only", "gamma_and_j0")


class StepInstabilityError(RuntimeError):
    """Trace drifted beyond tolerance; the time grid is too coarse."""


class RiccatiBlowupError(RuntimeError):
    """The factorization parameter k+ left the weak-coupling regime."""


class NegativityWarning(UserWarning):
    pass


def _ket(*labels: str) -> np.ndarray:
    basis = {"e": np.array([1.0, 0.0]), "g": np.array([0.0, 1.0])}
    out = np.ones(1)
    for lab in labels:
        out = np.kron(out, basis[lab])
    return out.astype(complex)


def _projector(psi):
    return np.outer(psi, psi.conj())


INITIAL_STATES = {
    "bell_psi_plus": _projector((_ket("e", "g") + _ket("g", "e")) / np.sqrt(2.0)),
    "eg": _projector(_ket("e", "g")),
    "ee": _projector(_ket("e", "e")),
}


def density_matrix(entries, atol_herm: float = 1e-12, atol_trace: float = 1e-10) -> np.ndarray:
    """Validate and return a 4x4 density matrix."""
    rho = np.array(entries, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"density matrix must be 4x4, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > atol_herm:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol_trace:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -NEGATIVITY_LIMIT:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def initial_state(name: str) -> np.ndarray:
    try:
        return INITIAL_STATES[name].copy()
    except KeyError:
        raise ValueError(f"unknown initial state {name!r}; choose from {sorted(INITIAL_STATES)}") from None


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 4, 4)
    kind: Optional[ReservoirKind] = None
    discord: Optional[np.ndarray] = None
    trace_error: np.ndarray = field(init=False)
    min_eigenvalue: np.ndarray = field(init=False)
    hermiticity_defect: np.ndarray = field(init=False)
    purity: np.ndarray = field(init=False)

    def __post_init__(self):
        st = self.states
        herm = 0.5 * (st + np.swapaxes(st.conj(), 1, 2))
        self.trace_error = np.abs(np.trace(st, axis1=1, axis2=2) - 1.0)
        self.hermiticity_defect = np.abs(st - np.swapaxes(st.conj(), 1, 2)).max(axis=(1, 2))
        self.min_eigenvalue = np.linalg.eigvalsh(herm)[:, 0]
        self.purity = np.einsum("nij,nji->n", st, st).real

    def __len__(self):
        return len(self.times)

    def with_discord(self, grid: int = 64, measured: int = 2) -> "Trajectory":
        """Fill in the discord column (bits) for every state."""
        herm = 0.5 * (self.states + np.swapaxes(self.states.conj(), 1, 2))
        self.discord = discord_series(herm, grid=grid, measured=measured)["discord"]
        return self

    def element(self, i: int, j: int) -> np.ndarray:
        """Time series of ``rho_ij`` with 1-based indices."""
        return self.states[:, i - 1, j - 1]


def generator_basis(kind, ops: SuperoperatorSet = SUPEROPERATORS) -> np.ndarray:
    """Matrices ``G`` with ``L(t) = sum_c coef_c(t) G[c]`` for
    ``coef = (kappa1, kappa2, mu1, mu2)``; shape ``(4, 16, 16)``."""
    kind = ReservoirKind(kind)
    g_k1 = -4.0 * ops.Id + 2.0 * ops.Kminus + 2.0 * ops.Kplus
    g_k2 = -1j * ops.J0
    g_m1 = 2.0 * ops.Kminus - 2.0 * ops.Kplus - 4.0 * ops.K0
    g_m2 = np.zeros_like(ops.Id)
    if kind is ReservoirKind.COMMON:
        g_k1 = g_k1 - 2.0 * ops.J1 + 2.0 * ops.Jminus + 2.0 * ops.Jplus
        g_m1 = g_m1 + 2.0 * ops.Jminus - 2.0 * ops.Jplus
        g_m2 = -2j * ops.J2
    return np.stack([g_k1, g_k2, g_m1, g_m2])


def _stage_coefficients(coefficients, stage_times, params, regime) -> np.ndarray:
    if coefficients is None:
        if params is None or regime is None:
            raise ValueError("params and regime are required unless coefficients are supplied")
        cache = CoefficientCache(params, regime, stage_times)
        return np.array([cache(t).as_array() for t in stage_times.tolist()])
    if callable(coefficients):
        return np.array([coefficients(t).as_array() for t in stage_times.tolist()])
    table = np.asarray(coefficients, dtype=float)
    if table.shape != (stage_times.size, 4):
        raise ValueError(f"coefficient table must have shape ({stage_times.size}, 4)")
    return table


def propagate_numerical(
    rho0,
    kind,
    params: Optional[SpectralParams],
    regime: Optional[TemperatureRegime],
    t_end: float,
    n_steps: int,
    *,
    coefficients=None,
) -> Trajectory:
    """RK4 integration on the uniform grid ``linspace(0, t_end, n_steps + 1)``.

    ``coefficients`` overrides the reservoir: either a callable ``t ->
    CoefficientSet`` or a table of shape ``(2 n_steps + 1, 4)`` on the
    half-step grid.
    """
    if n_steps < 10:
        raise ValueError("n_steps must be at least 10")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    rho0 = density_matrix(rho0, atol_herm=1e-10)
    kind = ReservoirKind(kind)

    stage_times = np.linspace(0.0, t_end, 2 * n_steps + 1)
    coef = _stage_coefficients(coefficients, stage_times, params, regime)
    gens = generator_basis(kind).reshape(4, 256)
    h = t_end / n_steps

    out = np.empty((n_steps + 1, 16), dtype=complex)
    v = vec(rho0)
    out[0] = v
    diag = np.arange(4) * 5
    L_next = (coef[0] @ gens).reshape(16, 16)
    for n in range(n_steps):
        L0 = L_next
        Lh = (coef[2 * n + 1] @ gens).reshape(16, 16)
        L_next = (coef[2 * n + 2] @ gens).reshape(16, 16)
        k1 = L0 @ v
        k2 = Lh @ (v + 0.5 * h * k1)
        k3 = Lh @ (v + 0.5 * h * k2)
        k4 = L_next @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        err = abs(v[diag].sum() - 1.0)
        if not err <= TRACE_LIMIT:
            raise StepInstabilityError(
                f"trace error {err:.3g} at t={(n + 1) * h:.6g}; refine the time grid"
            )
        out[n + 1] = v

    states = out.reshape(-1, 4, 4).transpose(0, 2, 1)  # column-stacked -> matrices
    traj = Trajectory(np.linspace(0.0, t_end, n_steps + 1), np.ascontiguousarray(states), kind)
    worst = traj.min_eigenvalue.min()
    if worst < -NEGATIVITY_LIMIT:
        warnings.warn(f"state eigenvalue reached {worst:.3g}", NegativityWarning, stacklevel=2)
    return traj


# ---------------------------------------------------------------------------
# factorized solution, independent reservoirs

_Z = np.array([2.0, 0.0, 0.0, -2.0])  # eigenvalues of sz1 + sz2 per basis index


def _riccati_rhs(y, nu0, nup, num):
    kp, k0, _km = y
    return np.array([nup - num * kp * kp + nu0 * kp, nu0 - 2.0 * num * kp, num * np.exp(k0)])


def _nus(c):
    k1, _k2, m1, _m2 = c
    return -4.0 * m1, 2.0 * (k1 - m1), 2.0 * (k1 + m1)


def apply_factorized(rho0, kp, k0, km) -> np.ndarray:
    """``exp(k+ K+) exp(k0 K0) exp(k- K-) rho0`` written element by element."""
    r = np.asarray(rho0, dtype=complex)
    e, ei = np.exp(k0), np.exp(-k0)
    eh, ehi = np.exp(0.5 * k0), np.exp(-0.5 * k0)
    out = np.empty((4, 4), dtype=complex)
    pop = r[1, 1] + r[2, 2]
    out[0, 0] = (e + 2 * kp * km + ei * kp**2 * km**2) * r[0, 0] + (kp + ei * kp**2 * km) * pop + ei * kp**2 * r[3, 3]
    out[1, 1] = (km + ei * kp * km**2) * r[0, 0] + r[1, 1] + ei * kp * km * pop + ei * kp * r[3, 3]
    out[2, 2] = (km + ei * kp * km**2) * r[0, 0] + r[2, 2] + ei * kp * km * pop + ei * kp * r[3, 3]
    out[3, 3] = ei * km**2 * r[0, 0] + ei * km * pop + ei * r[3, 3]
    a = eh + ehi * kp * km
    # coherences between states differing in one excitation
    for (i, j), (p, q) in {(1, 0): (3, 2), (2, 0): (3, 1), (0, 1): (2, 3), (0, 2): (1, 3)}.items():
        out[i, j] = a * r[i, j] + ehi * kp * r[p, q]
    for (i, j), (p, q) in {(3, 1): (2, 0), (3, 2): (1, 0), (1, 3): (0, 2), (2, 3): (0, 1)}.items():
        out[i, j] = ehi * km * r[p, q] + ehi * r[i, j]
    for i, j in ((0, 3), (1, 2), (2, 1), (3, 0)):
        out[i, j] = r[i, j]
    return out


def solve_independent_analytic(
    rho0,
    params: Optional[SpectralParams],
    regime: Optional[TemperatureRegime],
    t_grid,
    prefactor: str = "gamma_and_j0",
    j0_formula: str = "naive",
    *,
    coefficients=None,
) -> Trajectory:
    """Factorized solution on ``t_grid`` (strictly increasing, from 0).

    ``prefactor`` selects which of ``exp(-Gamma)`` and ``exp(j0 J0)`` are
    applied on top of the element formulas.  ``j0_formula`` is ``literal``
    (``-2i int kappa2 (kappa2 + mu2)``) or ``naive`` (``-i int kappa2``).
    Running integrals use Simpson's rule on the same half-step values the
    Riccati RK4 consumes.
    """
    if prefactor not in PREFACTOR_MODES:
        raise ValueError(f"prefactor must be one of {PREFACTOR_MODES}")
    if j0_formula not in ("literal", "naive"):
        raise ValueError("j0_formula must be 'literal' or 'naive'")
    rho0 = density_matrix(rho0, atol_herm=1e-10)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing from 0")

    stage_times = np.empty(2 * t_grid.size - 1)
    stage_times[0::2] = t_grid
    stage_times[1::2] = 0.5 * (t_grid[:-1] + t_grid[1:])
    coef = _stage_coefficients(coefficients, stage_times, params, regime)

    y = np.zeros(3)
    gamma_int = 0.0
    j0 = 0j
    states = np.empty((t_grid.size, 4, 4), dtype=complex)
    states[0] = rho0

    def j0_rate(c):
        return -1j * c[1] if j0_formula == "naive" else -2j * c[1] * (c[1] + c[3])

    for n in range(t_grid.size - 1):
        h = t_grid[n + 1] - t_grid[n]
        c0, ch, c1 = coef[2 * n], coef[2 * n + 1], coef[2 * n + 2]
        f1 = _riccati_rhs(y, *_nus(c0))
        f2 = _riccati_rhs(y + 0.5 * h * f1, *_nus(ch))
        f3 = _riccati_rhs(y + 0.5 * h * f2, *_nus(ch))
        f4 = _riccati_rhs(y + h * f3, *_nus(c1))
        y = y + (h / 6.0) * (f1 + 2 * f2 + 2 * f3 + f4)
        if not abs(y[0]) <= 1e6:
            raise RiccatiBlowupError(f"|k+| = {abs(y[0]):.3g} at t={t_grid[n + 1]:.6g}")
        gamma_int += 4.0 * (h / 6.0) * (c0[0] + 4 * ch[0] + c1[0])
        j0 += (h / 6.0) * (j0_rate(c0) + 4 * j0_rate(ch) + j0_rate(c1))

        with np.errstate(over="ignore", invalid="ignore"):
            rho = apply_factorized(rho0, *y)
            if prefactor == "gamma_and_j0":
                rho = rho * np.exp(j0 * (_Z[:, None] - _Z[None, :]))
            if prefactor != "none":
                rho = rho * np.exp(-gamma_int)
        if not np.all(np.isfinite(rho)):
            raise RiccatiBlowupError(f"factorized elements overflowed at t={t_grid[n + 1]:.6g}")
        states[n + 1] = rho

    return Trajectory(t_grid.copy(), states, ReservoirKind.INDEPENDENT)


def markov_limit_check(params: SpectralParams, regime: TemperatureRegime) -> float:
    """Long-time decay-rate scale ``2 * (pi/2) J(omega_a) (1 + 2N(omega_a))``,
    i.e. twice the asymptotic ``kappa1`` plateau."""
    return float(np.pi * spectral_density(OMEGA_A, params) * thermal_factor(OMEGA_A, regime))
