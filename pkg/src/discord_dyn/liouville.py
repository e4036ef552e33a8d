"""Superoperators of the two-qubit master equations as 16x16 matrices.

Basis ordering is ``|ee>, |eg>, |ge>, |gg>`` (qubit 1 is the left tensor
factor, ``|e>`` precedes ``|g>``).  Density matrices are vectorized by column
stacking, so ``A rho B`` becomes ``kron(B.T, A) @ vec(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .coeffs import CoefficientSet

__all__ = [
    "ReservoirKind",
    "SuperoperatorSet",
    "Liouvillian",
    "vec",
    "unvec",
    "left",
    "right",
    "sandwich",
    "qubit_operators",
    "swap_operator",
    "build_superoperators",
    "SUPEROPERATORS",
    "liouvillian_independent",
    "liouvillian_common",
    "liouvillian",
    "trace_row",
]

_I2 = np.eye(2, dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


class ReservoirKind(str, Enum):
    INDEPENDENT = "independent"
    COMMON = "common"


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int = 4) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def left(a):
    """Matrix of ``rho -> a rho``."""
    return np.kron(np.eye(a.shape[0]), a)


def right(b):
    """Matrix of ``rho -> rho b``."""
    return np.kron(b.T, np.eye(b.shape[0]))


def sandwich(a, b):
    """Matrix of ``rho -> a rho b``."""
    return np.kron(b.T, a)


def qubit_operators():
    """Single-qubit operators embedded on qubit 1 and qubit 2.

    Returns a dict keyed ``sp1, sm1, sz1, sp2, sm2, sz2``.
    """
    ops = {}
    for name, op in (("sp", SIGMA_PLUS), ("sm", SIGMA_MINUS), ("sz", SIGMA_Z)):
        ops[name + "1"] = np.kron(op, _I2)
        ops[name + "2"] = np.kron(_I2, op)
    return ops


def swap_operator() -> np.ndarray:
    """Two-qubit SWAP on the 4-dimensional space."""
    s = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            s[2 * j + i, 2 * i + j] = 1.0
    return s


@dataclass(frozen=True)
class SuperoperatorSet:
    J0: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    Jminus: np.ndarray
    Jplus: np.ndarray
    Kminus: np.ndarray
    Kplus: np.ndarray
    K0: np.ndarray
    Id: np.ndarray


def build_superoperators() -> SuperoperatorSet:
    o = qubit_operators()
    sp1, sm1, sz1 = o["sp1"], o["sm1"], o["sz1"]
    sp2, sm2, sz2 = o["sp2"], o["sm2"], o["sz2"]
    ident = np.eye(16, dtype=complex)

    J0 = left(sz1) + left(sz2) - right(sz1) - right(sz2)
    hop = sm1 @ sp2 + sp1 @ sm2
    J1 = left(hop) + right(hop)
    hop2 = sp1 @ sm2 + sp2 @ sm1
    J2 = left(hop2) - right(hop2)
    Jminus = sandwich(sm1, sp2) + sandwich(sm2, sp1)
    Jplus = sandwich(sp1, sm2) + sandwich(sp2, sm1)
    Kminus = sandwich(sm1, sp1) + sandwich(sm2, sp2)
    Kplus = sandwich(sp1, sm1) + sandwich(sp2, sm2)
    n1, n2 = sp1 @ sm1, sp2 @ sm2
    K0 = 0.5 * (left(n1) + right(n1) - ident) + 0.5 * (left(n2) + right(n2) - ident)

    mats = dict(J0=J0, J1=J1, J2=J2, Jminus=Jminus, Jplus=Jplus,
                Kminus=Kminus, Kplus=Kplus, K0=K0, Id=ident)
    for m in mats.values():
        m.setflags(write=False)
    return SuperoperatorSet(**mats)


SUPEROPERATORS = build_superoperators()


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray
    kind: ReservoirKind

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))


def _independent_matrix(c: CoefficientSet, ops: SuperoperatorSet) -> np.ndarray:
    k1, k2, m1 = c.kappa1, c.kappa2, c.mu1
    return (
        -4.0 * k1 * ops.Id
        - 1j * k2 * ops.J0
        + 2.0 * (k1 + m1) * ops.Kminus
        + 2.0 * (k1 - m1) * ops.Kplus
        - 4.0 * m1 * ops.K0
    )


def liouvillian_independent(c: CoefficientSet, ops: SuperoperatorSet = SUPEROPERATORS) -> Liouvillian:
    """Generator for two qubits, each with its own reservoir."""
    return Liouvillian(_independent_matrix(c, ops), ReservoirKind.INDEPENDENT)


def liouvillian_common(c: CoefficientSet, ops: SuperoperatorSet = SUPEROPERATORS) -> Liouvillian:
    """Generator for two qubits sharing one reservoir: the independent
    generator plus the exchange (``J1``, ``J2``) and cross-decay (``J-``,
    ``J+``) terms."""
    k1, m1, m2 = c.kappa1, c.mu1, c.mu2
    m = (
        _independent_matrix(c, ops)
        - 2.0 * k1 * ops.J1
        - 2j * m2 * ops.J2
        + 2.0 * (k1 + m1) * ops.Jminus
        + 2.0 * (k1 - m1) * ops.Jplus
    )
    return Liouvillian(m, ReservoirKind.COMMON)


def liouvillian(kind, c: CoefficientSet) -> Liouvillian:
    kind = ReservoirKind(kind)
    if kind is ReservoirKind.INDEPENDENT:
        return liouvillian_independent(c)
    return liouvillian_common(c)


def trace_row(dim: int = 4) -> np.ndarray:
    """Row vector ``vec(I)^H``; ``trace_row() @ vec(rho) == Tr(rho)``."""
    return vec(np.eye(dim, dtype=complex)).conj()
