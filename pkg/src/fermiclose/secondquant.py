"""Second quantization of one-particle contractions.

A contraction ``A`` is completed by ``B = (1 - A A^dagger)^{1/2}`` to an
isometry ``(A | B)``; the resulting CP map sends ``f`` to ``A f``.  For
gauge-invariant environments products of annihilators transform with the
exterior powers of ``A``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .channel import ChannelSpec, MonomialPoly, dual_action_even
from .environment import CorrelationTensor
from .errors import ConstraintError, EvennessError, IndexRangeError
from .multiindex import (
    MonomialKey,
    batch_minors,
    check_multiindex,
    combination_array,
    concat_det,
    subsets,
)

DISSIPATIVE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ContractionDilation:
    A: np.ndarray
    B: np.ndarray

    def channel(self, gamma: CorrelationTensor) -> ChannelSpec:
        return ChannelSpec(self.A.shape[0], self.A, self.B, gamma)


@dataclass(frozen=True, eq=False)
class ExteriorPowerMatrix:
    p: int
    basis: tuple
    data: np.ndarray


def dilate_contraction(A, tol: float = 1e-9) -> ContractionDilation:
    A = linalg.as_matrix(A)
    smax = np.linalg.norm(A, 2) if A.size else 0.0
    if smax > 1 + tol:
        raise ConstraintError(f"A is not a contraction (largest singular value {smax:.6g})")
    B = linalg.hermitian_sqrt(np.eye(A.shape[0]) - A @ A.conj().T, tol=tol)
    return ContractionDilation(A, B)


def exterior_power(A, p: int) -> ExteriorPowerMatrix:
    """Matrix of all p x p minors ``det(A[I, L])`` over lexicographic p-subsets."""
    A = linalg.as_matrix(A)
    m = A.shape[0]
    if not 0 <= p <= m:
        raise IndexRangeError(f"p={p} outside 0..{m}")
    idx = combination_array(m, p)
    return ExteriorPowerMatrix(p, tuple(subsets(m, p)), batch_minors(A, idx, idx))


def check_dissipative(H_eff, tol: float = DISSIPATIVE_TOL) -> None:
    """Require ``i (H_eff - H_eff^dagger) <= 0``."""
    H_eff = linalg.as_matrix(H_eff)
    herm = 1j * (H_eff - H_eff.conj().T)
    top = np.linalg.eigvalsh((herm + herm.conj().T) / 2).max()
    if top > tol:
        raise ConstraintError(f"i(H_eff - H_eff^+) has positive eigenvalue {top:.3e}")


def contraction_semigroup(H_eff, t: float) -> np.ndarray:
    """``A(t) = expm(i t H_eff)`` for a dissipative effective Hamiltonian."""
    if t < 0:
        raise ValueError("t must be non-negative")
    check_dissipative(H_eff)
    return linalg.expm(1j * t * linalg.as_matrix(H_eff))


def annihilation_action_gauge_invariant(A, I) -> MonomialPoly:
    """``Phi^*(f_I) = sum_L det(A[I, L]) f_L`` (gauge-invariant, normalized environment)."""
    A = linalg.as_matrix(A)
    m = A.shape[0]
    I = check_multiindex(I, m)
    rows = np.array([[i - 1 for i in I]], dtype=np.intp).reshape(1, len(I))
    row = batch_minors(A, rows, combination_array(m, len(I)))[0]
    return MonomialPoly({MonomialKey((), L, 0): c for L, c in zip(subsets(m, len(I)), row)})


def annihilation_action_general(A, B, gamma: CorrelationTensor, I) -> MonomialPoly:
    """``Phi^*(f_I)`` for an even environment: only Gamma[empty; Omega], |Omega| even, enter."""
    if not gamma.is_even:
        raise EvennessError("annihilation action formula needs a parity-even environment")
    A, B = linalg.as_matrix(A), linalg.as_matrix(B)
    m = A.shape[0]
    I = check_multiindex(I, m)
    rows = [i - 1 for i in I]
    acc: dict = {}
    for s in range(0, len(I) + 1, 2):
        for om in subsets(m, s):
            g = gamma((), om)
            if g == 0:
                continue
            Bsub = B[np.ix_(rows, [w - 1 for w in om])]
            for L in subsets(m, len(I) - s):
                d = concat_det(A[np.ix_(rows, [l - 1 for l in L])], Bsub)
                key = MonomialKey((), L, 0)
                acc[key] = acc.get(key, 0j) + g * d
    return MonomialPoly(acc)


@dataclass
class SemigroupReport:
    lhs: MonomialPoly
    rhs: MonomialPoly
    max_deviation: float


def semigroup_channel(H_eff, gamma: CorrelationTensor, t: float) -> ChannelSpec:
    return dilate_contraction(contraction_semigroup(H_eff, t)).channel(gamma)


def apply_dual(spec: ChannelSpec, poly: MonomialPoly) -> MonomialPoly:
    """Extend ``dual_action_even`` linearly to a polynomial without parity terms."""
    out = MonomialPoly()
    for key, c in poly.items():
        out = out + c * dual_action_even(spec, key.J, key.I)
    return out


def check_semigroup_failure(H_eff, gamma, t1: float, t2: float, probe) -> SemigroupReport:
    """Compare ``Phi*_{t1}(Phi*_{t2}(X))`` with ``Phi*_{t1+t2}(X)`` on a probe monomial."""
    probe = MonomialKey(*probe)
    start = MonomialPoly.monomial(probe.J, probe.I)
    lhs = apply_dual(semigroup_channel(H_eff, gamma, t1), apply_dual(semigroup_channel(H_eff, gamma, t2), start))
    rhs = apply_dual(semigroup_channel(H_eff, gamma, t1 + t2), start)
    return SemigroupReport(lhs, rhs, lhs.max_deviation(rhs))


def kronecker_sum(H, p: int) -> np.ndarray:
    """``sum_r 1^{(r-1)} (x) H (x) 1^{(p-r)}`` on the p-fold tensor power."""
    H = linalg.as_matrix(H)
    m = H.shape[0]
    out = np.zeros((m**p, m**p), dtype=complex)
    for r in range(p):
        out += np.kron(np.kron(np.eye(m**r), H), np.eye(m ** (p - r - 1)))
    return out


def random_dissipative(m: int, rng: np.random.Generator, strength: float = 1.0) -> np.ndarray:
    """``H0 + i*strength*D`` with Hermitian H0 and PSD D, so ``expm(i t H)`` contracts."""
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    Y = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    H0 = (X + X.conj().T) / 2
    D = (Y @ Y.conj().T) / m
    return H0 + 1j * strength * D
