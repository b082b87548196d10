"""Post-selected CP maps ``Phi_E(rho) = Tr_2[(1 (x) E) U (rho (x) sigma) U^dagger]``.

An even effect ``E = sum e[M;N] f_M^dagger f_N`` on the environment enters
the Heisenberg action through block minors of the full mode unitary
``W = [[A, B], [C, D]]``:

    Delta(I, N; L, Omega) = det [[A_IL, B_IOmega], [C_NL, D_NOmega]]

which are minors of W with rows ``I ++ (N + m)`` and columns ``L ++ (Omega + m)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import fock_oracle, linalg
from .channel import MonomialPoly, _accumulate, contract_blocks, split_minor_table
from .environment import CorrelationTensor
from .errors import ConstraintError, EvennessError, ResourceGuardError, ShapeError
from .multiindex import check_multiindex, enumerate_multiindices

EXPANSION_PRUNE = 1e-12
UNITARY_TOL = 1e-9


@dataclass
class EffectExpansion:
    """Coefficients ``e[(M, N)]`` of an environment effect.

    ``trusted`` is False for coefficient tables that were never checked
    against ``0 <= E <= 1``.
    """

    m: int
    coeffs: dict = field(default_factory=dict)
    trusted: bool = True

    def __post_init__(self):
        clean = {}
        for (M, N), v in self.coeffs.items():
            M, N = check_multiindex(M, self.m), check_multiindex(N, self.m)
            if v != 0:
                clean[(M, N)] = complex(v)
        self.coeffs = clean

    def check(self, tol: float = 1e-12) -> None:
        for (M, N), v in self.coeffs.items():
            if (len(M) + len(N)) % 2 and abs(v) > tol:
                raise EvennessError(f"effect has odd term e[{M};{N}]")
            if abs(np.conj(v) - self.coeffs.get((N, M), 0j)) > tol:
                raise ConstraintError(f"effect coefficients not Hermitian at ({M}, {N})")

    def to_matrix(self) -> np.ndarray:
        rep = fock_oracle.build_rep(self.m)
        out = np.zeros((rep.dim, rep.dim), dtype=complex)
        for (M, N), v in self.coeffs.items():
            out += v * fock_oracle.monomial_matrix(rep, M, N)
        return out

    def complement(self) -> "EffectExpansion":
        """Coefficients of ``1 - E``."""
        out = {k: -v for k, v in self.coeffs.items()}
        out[((), ())] = out.get(((), ()), 0j) + 1.0
        return EffectExpansion(self.m, out, self.trusted)

    @classmethod
    def identity(cls, m: int) -> "EffectExpansion":
        return cls(m, {((), ()): 1.0})

    @classmethod
    def number(cls, m: int, mode: int) -> "EffectExpansion":
        return cls(m, {((mode,), (mode,)): 1.0})

    @classmethod
    def even_parity_projector(cls, m: int) -> "EffectExpansion":
        """``(1 + P) / 2`` with ``P = sum_J (-2)^{|J|} f_J^dagger f_J``."""
        coeffs = {}
        for J in enumerate_multiindices(m, m):
            coeffs[(J, J)] = 0.5 * (-2.0) ** len(J) + (0.5 if not J else 0.0)
        return cls(m, coeffs)


def expand_effect(E, tol: float = 1e-9) -> EffectExpansion:
    """Expand an explicit effect matrix in normally ordered monomials."""
    E = np.asarray(E, dtype=complex)
    d = E.shape[0]
    m = d.bit_length() - 1
    if E.shape != (d, d) or 2**m != d:
        raise ShapeError("effect must be 2^m x 2^m")
    if m > fock_oracle.MAX_EXPANSION_MODES:
        raise ResourceGuardError(
            f"explicit effect matrices limited to m <= {fock_oracle.MAX_EXPANSION_MODES}; pass coefficients instead"
        )
    if np.linalg.norm(E - E.conj().T) > tol:
        raise ConstraintError("effect is not Hermitian")
    w = np.linalg.eigvalsh((E + E.conj().T) / 2)
    if w.min() < -tol or w.max() > 1 + tol:
        raise ConstraintError("effect spectrum outside [0, 1]")
    rep = fock_oracle.build_rep(m)
    P = rep.parity
    if np.linalg.norm(P @ E - E @ P) > tol:
        raise EvennessError("effect does not commute with parity")
    coeffs = fock_oracle.expand_in_monomials(rep, E, prune=EXPANSION_PRUNE)
    eff = EffectExpansion(m, {(k.J, k.I): v for k, v in coeffs.items()})
    residual = np.linalg.norm(E - eff.to_matrix())
    if residual > tol:
        raise ConstraintError(f"monomial reconstruction residual {residual:.3e} exceeds {tol}")
    return eff


def instrument_sum(parts: Iterable[EffectExpansion], m: int | None = None) -> EffectExpansion:
    parts = list(parts)
    if not parts:
        if m is None:
            raise ValueError("mode count needed for an empty sum")
        return EffectExpansion(m, {})
    m = parts[0].m if m is None else m
    acc: dict = {}
    for e in parts:
        if e.m != m:
            raise ShapeError("effects act on different mode counts")
        for k, v in e.coeffs.items():
            acc[k] = acc.get(k, 0j) + v
    return EffectExpansion(m, {k: v for k, v in acc.items() if abs(v) > EXPANSION_PRUNE},
                           all(e.trusted for e in parts))


def _check_unitary(W) -> np.ndarray:
    W = linalg.as_matrix(W)
    n = W.shape[0]
    if W.shape != (n, n) or n % 2:
        raise ShapeError("W must be 2m x 2m")
    if np.linalg.norm(W @ W.conj().T - np.eye(n)) > UNITARY_TOL:
        raise ConstraintError("W is not unitary")
    return W


def _postselected(W, gamma: CorrelationTensor, eff: EffectExpansion, J, I, parities) -> MonomialPoly:
    W = _check_unitary(W)
    m = W.shape[0] // 2
    if gamma.m != m or eff.m != m:
        raise ShapeError("mode counts of W, environment and effect differ")
    J = check_multiindex(J, m)
    I = check_multiindex(I, m)
    out = MonomialPoly()
    for (M, N), e in eff.coeffs.items():
        if (len(M) + len(N)) % 2:
            raise EvennessError("effect expansion has odd terms")
        rows_l = np.array([[j - 1 for j in J] + [m + x - 1 for x in M]], dtype=np.intp).reshape(1, -1)
        rows_r = np.array([[i - 1 for i in I] + [m + x - 1 for x in N]], dtype=np.intp).reshape(1, -1)
        pl, pr = rows_l.shape[1], rows_r.shape[1]
        left = lambda r, rows=rows_l: split_minor_table(W, rows, m, r)  # noqa: E731
        right = lambda s, rows=rows_r: split_minor_table(W, rows, m, s)  # noqa: E731
        part = _accumulate(contract_blocks(left, right, pl, pr, gamma, parities), m, pl, pr)
        sign = -1.0 if ((len(I) + len(J)) * len(M)) % 2 else 1.0
        out = out + (sign * e) * part
    return out


def dual_action_postselected(W, gamma: CorrelationTensor, eff: EffectExpansion, J, I) -> MonomialPoly:
    """Phi_E^*(f_J^dagger f_I) for any environment (parity terms kept)."""
    return _postselected(W, gamma, eff, J, I, (0, 1))


def dual_action_postselected_even(W, gamma: CorrelationTensor, eff: EffectExpansion, J, I) -> MonomialPoly:
    if not gamma.is_even:
        raise EvennessError("environment state is not parity-even")
    return _postselected(W, gamma, eff, J, I, (0,))
