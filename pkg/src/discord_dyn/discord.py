"""Entropies, mutual information and quantum discord of two-qubit states.

Classical correlation is maximized over rank-one projective measurements on
one qubit.  A measurement along Bloch direction ``n`` on qubit B leaves qubit A
in the (unnormalized) state ``(m0 I + m . sigma) / 4`` with
``m0 = 1 +/- b.n`` and ``m = a +/- C n``, where ``a``, ``b`` are the local Bloch
vectors and ``C`` the correlation matrix ``C_jk = Tr[rho sigma_j x sigma_k]``.
Everything below works on those real quantities, vectorized over many states
and many directions at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import xlogy

__all__ = [
    "MeasurementBasis",
    "DiscordResult",
    "EntropyError",
    "von_neumann_entropy",
    "partial_trace",
    "mutual_information",
    "classical_correlation",
    "quantum_discord",
    "discord_series",
    "correlation_tensor",
]

_EIG_CUT = 1e-12
_NEG_TOL = 1e-6
_PROB_CUT = 1e-12
_CLIP_TOL = 1e-9
_LN2 = math.log(2.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
# sigma_mu x sigma_nu, indexed [mu, nu]
_PAULI2 = np.einsum("aij,bkl->abikjl", _PAULI, _PAULI).reshape(4, 4, 4, 4)


class EntropyError(ValueError):
    """State too far from positive semidefinite to score."""


@dataclass(frozen=True)
class MeasurementBasis:
    """Projector pair ``{|v><v|, I - |v><v|}`` with
    ``|v> = cos(theta/2)|e> + exp(i phi) sin(theta/2)|g>``."""

    theta: float
    phi: float

    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.theta / 2), np.exp(1j * self.phi) * math.sin(self.theta / 2)])

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vector()
        p = np.outer(v, v.conj())
        return p, np.eye(2) - p

    def bloch(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


@dataclass(frozen=True)
class DiscordResult:
    mutual_information: float
    classical_correlation: float
    discord: float
    argmax_basis: MeasurementBasis


def _entropy_from_eigs(eigs) -> np.ndarray:
    eigs = np.asarray(eigs, dtype=float)
    if np.any(eigs < -_NEG_TOL):
        raise EntropyError(f"eigenvalue {eigs.min():.3g} below -{_NEG_TOL:g}")
    safe = np.where(eigs > _EIG_CUT, eigs, 1.0)
    return -np.sum(np.where(eigs > _EIG_CUT, eigs * np.log2(safe), 0.0), axis=-1)


def _check_state(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] not in ((2, 2), (4, 4)):
        raise ValueError(f"expected 2x2 or 4x4 density matrices, got shape {rho.shape}")
    herm = np.abs(rho - np.swapaxes(rho.conj(), -1, -2)).max(initial=0.0)
    if herm > _NEG_TOL:
        raise ValueError(f"state is not Hermitian (defect {herm:.3g})")
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.any(np.abs(tr - 1.0) > _NEG_TOL):
        raise ValueError("state does not have unit trace")
    return rho


def von_neumann_entropy(rho) -> float:
    """Entropy in bits; accepts a single matrix or a stack of them."""
    rho = _check_state(rho)
    out = _entropy_from_eigs(np.linalg.eigvalsh(rho))
    return float(out) if out.ndim == 0 else out


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduced state of qubit ``keep`` (1 or 2) from a two-qubit state."""
    r = np.asarray(rho).reshape(rho.shape[:-2] + (2, 2, 2, 2))
    if keep == 1:
        return np.einsum("...ijkj->...ik", r)
    if keep == 2:
        return np.einsum("...ijil->...jl", r)
    raise ValueError("keep must be 1 or 2")


def mutual_information(rho) -> float:
    rho = _check_state(rho)
    s_a = von_neumann_entropy(partial_trace(rho, 1))
    s_b = von_neumann_entropy(partial_trace(rho, 2))
    out = s_a + s_b - von_neumann_entropy(rho)
    return float(out) if np.ndim(out) == 0 else out


def correlation_tensor(rho) -> np.ndarray:
    """Real coefficients ``R[mu, nu] = Tr[rho sigma_mu x sigma_nu]``."""
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("...ji,abij->...ab", rho, _PAULI2).real


def _binary_entropy(x):
    # entropy of eigenvalues (1 +/- x) / 2, x in [0, 1]
    x = np.clip(x, 0.0, 1.0)
    return 1.0 - (xlogy(1.0 + x, 1.0 + x) + xlogy(1.0 - x, 1.0 - x)) / (2.0 * _LN2)


def _directions(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _branch_entropy(m0, msq):
    # p * S(rho_k) for one outcome with unnormalized Bloch data (m0, |m|^2)
    p = 0.5 * m0
    live = p > _PROB_CUT
    ratio = np.sqrt(np.maximum(msq, 0.0)) / np.where(live, m0, 1.0)
    return np.where(live, p * _binary_entropy(ratio), 0.0)


def _conditional_entropy(a, b, C, n):
    """Average entropy of A after measuring B along ``n``.

    ``a``, ``b``: (N, 3); ``C``: (N, 3, 3); ``n``: (N, M, 3) or (M, 3).
    Returns (N, M).
    """
    if n.ndim == 2:
        # |a +/- C n|^2 = |a|^2 +/- 2 (C^T a).n + n.(C^T C) n, as matmuls
        ca = np.einsum("njk,nj->nk", C, a)
        q = np.einsum("nji,njk->nik", C, C)
        bn = b @ n.T
        an2 = (2.0 * ca) @ n.T
        quad_feats = np.stack(
            [n[:, 0] ** 2, n[:, 1] ** 2, n[:, 2] ** 2,
             2 * n[:, 0] * n[:, 1], 2 * n[:, 0] * n[:, 2], 2 * n[:, 1] * n[:, 2]]
        )
        qv = np.stack([q[:, 0, 0], q[:, 1, 1], q[:, 2, 2], q[:, 0, 1], q[:, 0, 2], q[:, 1, 2]], axis=1)
        nqn = qv @ quad_feats
        asq = np.einsum("nj,nj->n", a, a)[:, None]
        return (_branch_entropy(1.0 + bn, asq + an2 + nqn)
                + _branch_entropy(1.0 - bn, asq - an2 + nqn))
    cn = np.einsum("njk,nmk->nmj", C, n)
    bn = np.einsum("nk,nmk->nm", b, n)
    total = np.zeros(bn.shape)
    for sign in (1.0, -1.0):
        m = a[:, None, :] + sign * cn
        total += _branch_entropy(1.0 + sign * bn, np.einsum("nmj,nmj->nm", m, m))
    return total


def _split(R, measured: int):
    if measured == 1:
        R = np.swapaxes(R, -1, -2)
    elif measured != 2:
        raise ValueError("measured qubit must be 1 or 2")
    a = R[:, 1:, 0]
    b = R[:, 0, 1:]
    C = R[:, 1:, 1:]
    return a, b, C


def _golden_min(fun, lo, hi, iters):
    """Vectorized golden-section minimization of ``fun`` over ``[lo, hi]``."""
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc < fd
        lo = np.where(left, lo, c)
        hi = np.where(left, d, hi)
        c, d, fc, fd = (
            np.where(left, hi - _GOLDEN * (hi - lo), d),
            np.where(left, c, lo + _GOLDEN * (hi - lo)),
            np.where(left, np.nan, fd),
            np.where(left, fc, np.nan),
        )
        # one fresh evaluation per iteration
        fresh = np.where(left, c, d)
        fv = fun(fresh)
        fc = np.where(left, fv, fc)
        fd = np.where(left, fd, fv)
    better = fc < fd
    return np.where(better, c, d), np.where(better, fc, fd)


@lru_cache(maxsize=8)
def _grid_directions(grid: int):
    """Grid of ``grid`` polar by ``2 grid`` azimuthal angles.

    Rows with theta > pi/2 are antipodes of kept rows (same projector pair),
    so only theta <= pi/2 is returned.
    """
    thetas = np.pi * np.arange(grid // 2 + 1) / grid
    phis = np.pi * np.arange(2 * grid) / grid
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    dirs = _directions(tt, pp)
    for arr in (tt, pp, dirs):
        arr.setflags(write=False)
    return tt, pp, dirs


def _optimize(a, b, C, grid: int, refine: bool, chunk: int = 64, iters: int = 30, rounds: int = 2):
    """Minimal conditional entropy and its (theta, phi) per state."""
    if grid < 16:
        raise ValueError("grid must be at least 16")
    tt, pp, dirs = _grid_directions(grid)
    best = np.empty(a.shape[0], dtype=int)
    fbest = np.empty(a.shape[0])
    for i in range(0, a.shape[0], chunk):
        sl = slice(i, i + chunk)
        cond = _conditional_entropy(a[sl], b[sl], C[sl], dirs)
        best[sl] = np.argmin(cond, axis=1)
        fbest[sl] = cond[np.arange(cond.shape[0]), best[sl]]
    theta, phi = tt[best], pp[best]
    if not refine:
        return fbest, theta, phi

    half = np.pi / grid
    th, ph = theta.copy(), phi.copy()

    def along_theta(x):
        return _conditional_entropy(a, b, C, _directions(x, ph)[:, None, :])[:, 0]

    def along_phi(x):
        return _conditional_entropy(a, b, C, _directions(th, x)[:, None, :])[:, 0]

    for _ in range(rounds):
        th, _f = _golden_min(along_theta, theta - half, theta + half, iters)
        ph, _f = _golden_min(along_phi, phi - half, phi + half, iters)
    fref = along_phi(ph)
    improved = fref < fbest
    return (
        np.where(improved, fref, fbest),
        np.where(improved, th, theta),
        np.where(improved, ph, phi),
    )


def _canonical(theta, phi):
    # fold into theta in [0, pi], phi in [0, 2 pi)
    theta = math.fmod(theta, 2 * math.pi)
    if theta < 0:
        theta += 2 * math.pi
    if theta > math.pi:
        theta = 2 * math.pi - theta
        phi += math.pi
    return theta, math.fmod(phi, 2 * math.pi) % (2 * math.pi)


def _batch(rhos, grid, measured, refine, chunk=64):
    rhos = np.asarray(rhos, dtype=complex)
    R = correlation_tensor(rhos)
    a, b, C = _split(R, measured)
    kept = partial_trace(rhos, 1 if measured == 2 else 2)
    s_kept = _entropy_from_eigs(np.linalg.eigvalsh(kept))
    cond, theta, phi = _optimize(a, b, C, grid, refine, chunk)
    return s_kept - cond, theta, phi


def classical_correlation(rho, grid: int = 64, measured: int = 2, refine: bool = True):
    """Return ``(J, basis)``: the measurement-maximized classical correlation
    in bits and the optimal measurement on qubit ``measured``."""
    rho = _check_state(rho)
    if rho.shape != (4, 4):
        raise ValueError("classical correlation needs a single 4x4 state")
    j, theta, phi = _batch(rho[None], grid, measured, refine)
    return float(j[0]), MeasurementBasis(*_canonical(float(theta[0]), float(phi[0])))


def _clip(discord, mi):
    discord = np.where((discord < 0) & (discord > -_CLIP_TOL), 0.0, discord)
    return np.where((discord > mi) & (discord < mi + _CLIP_TOL), mi, discord)


def quantum_discord(rho, grid: int = 64, measured: int = 2) -> DiscordResult:
    rho = _check_state(rho)
    mi = mutual_information(rho)
    j, basis = classical_correlation(rho, grid, measured)
    d = float(_clip(np.float64(mi - j), np.float64(mi)))
    return DiscordResult(mi, j, d, basis)


def discord_series(rhos, grid: int = 64, measured: int = 2, chunk: int = 64) -> dict:
    """Discord of a stack of states, shape ``(N, 4, 4)``.

    Returns arrays keyed ``mutual_information``, ``classical_correlation``,
    ``discord``, ``theta``, ``phi``.
    """
    rhos = _check_state(rhos)
    if rhos.ndim != 3 or rhos.shape[1:] != (4, 4):
        raise ValueError("expected a stack of 4x4 states")
    mi = np.asarray(mutual_information(rhos), dtype=float).reshape(-1)
    j, theta, phi = _batch(rhos, grid, measured, True, chunk)
    return {
        "mutual_information": mi,
        "classical_correlation": j,
        "discord": _clip(mi - j, mi),
        "theta": theta,
        "phi": phi,
    }
