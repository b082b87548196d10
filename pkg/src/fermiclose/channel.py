"""Heisenberg action of CP maps induced by linear mode transformations.

For ``U^dagger a U = A a + B b`` and an environment state ``sigma`` the dual map
sends ``f_J^dagger f_I`` to

    sum (-1)^{|Xi|(|K|+|L|)} conj(det(A_JK | B_JXi)) Gamma[Xi;Omega] det(A_IL | B_IOmega)
        f_K^dagger f_L P^{|Xi|+|Omega|}

over all K, Xi, L, Omega with |K|+|Xi| = |J| and |L|+|Omega| = |I|.  The
concatenated determinants are minors of ``R = (A | B)`` whose columns are
``L`` followed by ``Omega + m``, so every sum below is a contraction of
minor tables of ``R`` against blocks of Gamma.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from . import linalg
from .environment import CorrelationTensor
from .errors import ConstraintError, EvennessError, IndexRangeError, ShapeError
from .multiindex import (
    MonomialKey,
    MultiIndex,
    basis_keys,
    batch_minors,
    check_multiindex,
    combination_array,
    key_order,
    subsets,
)

PRUNE = 1e-14
ISOMETRY_TOL = 1e-9
UNITARY_TOL = 1e-10


class MonomialPoly:
    """Finite linear combination of ``f_K^dagger f_L P^s`` terms."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[dict] = None, prune: float = PRUNE):
        self.terms: dict[MonomialKey, complex] = {}
        for k, v in (terms or {}).items():
            if abs(v) > prune:
                self.terms[MonomialKey(*k)] = complex(v)

    @classmethod
    def monomial(cls, J=(), I=(), parity=0, coeff=1.0) -> "MonomialPoly":
        return cls({MonomialKey(tuple(J), tuple(I), parity % 2): coeff})

    def __getitem__(self, key) -> complex:
        return self.terms.get(MonomialKey(*key), 0j)

    def __iter__(self):
        return iter(sorted(self.terms, key=key_order))

    def __len__(self):
        return len(self.terms)

    def items(self):
        return [(k, self.terms[k]) for k in self]

    def _combine(self, other: "MonomialPoly", sign: float) -> "MonomialPoly":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0j) + sign * v
        return MonomialPoly(out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c):
        return MonomialPoly({k: c * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def max_deviation(self, other) -> float:
        """Largest absolute coefficient difference against a poly or a plain dict."""
        other_terms = other.terms if isinstance(other, MonomialPoly) else other
        keys = set(self.terms) | set(other_terms)
        return max((abs(self.terms.get(k, 0j) - other_terms.get(k, 0j)) for k in keys), default=0.0)

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        inner = ", ".join(f"{k.label()}: {v:.6g}" for k, v in self.items())
        return f"MonomialPoly({{{inner}}})"


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Mode transformation ``(A | B)`` (optionally the full unitary W) plus environment."""

    m: int
    A: np.ndarray
    B: np.ndarray
    gamma: CorrelationTensor
    W: Optional[np.ndarray] = None

    def __post_init__(self):
        A = linalg.as_matrix(self.A)
        B = linalg.as_matrix(self.B)
        m = self.m
        if A.shape != (m, m) or B.shape != (m, m):
            raise ShapeError(f"A and B must be {m}x{m}")
        if self.gamma.m != m:
            raise ShapeError("environment mode count differs from system mode count")
        resid = self.isometry_residual_of(A, B)
        if resid > ISOMETRY_TOL:
            raise ConstraintError(f"isometry condition AA^+ + BB^+ = 1 violated (residual {resid:.3e})")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if self.W is not None:
            W = linalg.as_matrix(self.W)
            if W.shape != (2 * m, 2 * m):
                raise ShapeError("W must be 2m x 2m")
            if not (np.array_equal(W[:m, :m], A) and np.array_equal(W[:m, m:], B)):
                raise ConstraintError("top blocks of W must equal A and B")
            if np.linalg.norm(W @ W.conj().T - np.eye(2 * m)) > UNITARY_TOL:
                raise ConstraintError("W is not unitary")
            W.setflags(write=False)
            object.__setattr__(self, "W", W)

    @staticmethod
    def isometry_residual_of(A, B) -> float:
        m = A.shape[0]
        return float(np.linalg.norm(A @ A.conj().T + B @ B.conj().T - np.eye(m)))

    @property
    def isometry_residual(self) -> float:
        return self.isometry_residual_of(self.A, self.B)

    @classmethod
    def from_unitary(cls, W, gamma: CorrelationTensor) -> "ChannelSpec":
        W = np.asarray(W, dtype=complex)
        m = W.shape[0] // 2
        return cls(m, W[:m, :m].copy(), W[:m, m:].copy(), gamma, W)

    @classmethod
    def unchecked(cls, A, B, gamma: CorrelationTensor) -> "ChannelSpec":
        """Skip validation; only for fault-injection runs that perturb (A | B) on purpose."""
        spec = object.__new__(cls)
        for name, val in (("m", gamma.m), ("A", linalg.as_matrix(A)), ("B", linalg.as_matrix(B)),
                          ("gamma", gamma), ("W", None)):
            object.__setattr__(spec, name, val)
        return spec

    @property
    def R(self) -> np.ndarray:
        return np.hstack([self.A, self.B])

    def full_unitary(self) -> np.ndarray:
        """W if supplied, otherwise some unitary completion of (A | B)."""
        if self.W is not None:
            return self.W
        return linalg.complete_isometry(self.A, self.B)


# -- minor-contraction engine ---------------------------------------------------------


def split_columns(m: int, p: int, s: int) -> np.ndarray:
    """Zero-based column sets ``L ++ (Omega + m)``, |L| = p - s, |Omega| = s, L-major."""
    Ls = combination_array(m, p - s)
    Os = combination_array(m, s) + m
    return np.concatenate(
        [np.repeat(Ls, len(Os), axis=0), np.tile(Os, (len(Ls), 1))], axis=1
    ).reshape(len(Ls) * len(Os), p)


def split_minor_table(R: np.ndarray, rows: np.ndarray, m: int, s: int) -> np.ndarray:
    """``det(R[row, L ++ (Omega+m)])`` with shape ``(n_rows, n_L, n_Omega)``."""
    p = rows.shape[1]
    cols = split_columns(m, p, s)
    return batch_minors(R, rows, cols).reshape(len(rows), comb(m, p - s), comb(m, s))


def _split_range(p: int, m: int) -> range:
    # |Omega| = s needs 0 <= s <= m and 0 <= p - s <= m
    return range(max(0, p - m), min(p, m) + 1)


def contract_blocks(
    left: Callable[[int], np.ndarray],
    right: Callable[[int], np.ndarray],
    p_left: int,
    p_right: int,
    gamma: CorrelationTensor,
    parities: tuple = (0, 1),
) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield ``(r, s, T)`` with ``T[j, i, K, L]`` the coefficient blocks.

    ``left(r)`` returns minors over (row, K, Xi) with |Xi| = r; ``right(s)``
    over (row, L, Omega) with |Omega| = s.  The sign and Gamma block are folded in.
    """
    m = gamma.m
    for r in _split_range(p_left, m):
        for s in _split_range(p_right, m):
            if (r + s) % 2 not in parities:
                continue
            if gamma.is_gauge_invariant and r != s:
                continue
            if gamma.is_even and (r + s) % 2:
                continue
            G = gamma.block(r, s)
            if not G.any():
                continue
            X = left(r)
            Y = right(s)
            nj, nk, nxi = X.shape
            ni, nl, nom = Y.shape
            Z = np.conj(X).reshape(nj * nk, nxi) @ G
            T = Z @ Y.reshape(ni * nl, nom).T
            sign = -1.0 if (r * ((p_left - r) + (p_right - s))) % 2 else 1.0
            yield r, s, sign * T.reshape(nj, nk, ni, nl).transpose(0, 2, 1, 3)


def _accumulate(blocks, m, p_left, p_right) -> MonomialPoly:
    acc: dict[MonomialKey, complex] = {}
    for r, s, T in blocks:
        Ks = subsets(m, p_left - r)
        Ls = subsets(m, p_right - s)
        par = (r + s) % 2
        T = T[0, 0]
        for a, b in zip(*np.nonzero(T)):
            key = MonomialKey(Ks[a], Ls[b], par)
            acc[key] = acc.get(key, 0j) + T[a, b]
    return MonomialPoly(acc)


def _rows(idx: MultiIndex) -> np.ndarray:
    return np.array([[i - 1 for i in idx]], dtype=np.intp).reshape(1, len(idx))


def _dual_action(spec: ChannelSpec, J, I, parities) -> MonomialPoly:
    J = check_multiindex(J, spec.m)
    I = check_multiindex(I, spec.m)
    R = spec.R
    m = spec.m
    left = lambda r: split_minor_table(R, _rows(J), m, r)  # noqa: E731
    right = lambda s: split_minor_table(R, _rows(I), m, s)  # noqa: E731
    return _accumulate(contract_blocks(left, right, len(J), len(I), spec.gamma, parities), m, len(J), len(I))


def dual_action_general(spec: ChannelSpec, J, I) -> MonomialPoly:
    """Phi^*(f_J^dagger f_I) for an arbitrary environment, parity terms included."""
    return _dual_action(spec, J, I, (0, 1))


def _require_even(gamma: CorrelationTensor) -> None:
    if not gamma.is_even:
        raise EvennessError("environment state is not parity-even; the closed formula does not apply")


def dual_action_even(spec: ChannelSpec, J, I) -> MonomialPoly:
    """Phi^*(f_J^dagger f_I) for a parity-even environment (no P terms)."""
    _require_even(spec.gamma)
    return _dual_action(spec, J, I, (0,))


def dual_action_special(spec: ChannelSpec, J, I, case: str) -> MonomialPoly:
    """Reduced sums for the built-in environment families.

    These loop over the surviving (Xi, Omega) pairs directly and are checked
    against :func:`dual_action_even`.
    """
    g = spec.gamma
    if g.kind != case:
        raise ValueError(f"environment kind {g.kind!r} does not match case {case!r}")
    J = check_multiindex(J, spec.m)
    I = check_multiindex(I, spec.m)
    m, A, B = spec.m, spec.A, spec.B

    def minor(rows, L, Om):
        M = np.hstack([A[np.ix_([x - 1 for x in rows], [l - 1 for l in L])],
                       B[np.ix_([x - 1 for x in rows], [w - 1 for w in Om])]])
        return complex(np.linalg.det(M)) if M.shape[0] else 1.0 + 0j

    if case == "vacuum":
        pairs = [((), (), 1.0)]
    elif case == "fock":
        Mset = g.params["M"]
        pairs = [(x, x, 1.0) for r in range(len(Mset) + 1) for x in combinations(Mset, r)]
    elif case == "uniform":
        pairs = [(x, x, g(x, x)) for r in range(m + 1) for x in subsets(m, r)]
    elif case == "gaussian":
        pairs = [(x, w, g(x, w)) for r in range(m + 1) for x in subsets(m, r) for w in subsets(m, r)]
    else:
        raise ValueError(f"no reduced formula for case {case!r}")

    acc: dict[MonomialKey, complex] = {}
    for xi, om, gval in pairs:
        if gval == 0 or len(xi) > len(J) or len(om) > len(I):
            continue
        for K in subsets(m, len(J) - len(xi)):
            left = np.conj(minor(J, K, xi))
            if left == 0:
                continue
            for L in subsets(m, len(I) - len(om)):
                sign = -1 if (len(xi) * (len(K) + len(L))) % 2 else 1
                key = MonomialKey(K, L, 0)
                acc[key] = acc.get(key, 0j) + sign * left * gval * minor(I, L, om)
    return MonomialPoly(acc)


# -- transfer matrices ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentTransferMatrix:
    """Matrix of a Heisenberg map on ``span{f_J^dagger f_I : |J|+|I| <= k}``.

    Row ``(J, I)``, column ``(K, L)`` holds the coefficient of ``f_K^dagger f_L``
    in the image of ``f_J^dagger f_I``.
    """

    m: int
    k: int
    basis: tuple
    data: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, key) -> int:
        return _basis_index(self.m, self.k)[MonomialKey(*key)]

    def to_csv(self) -> str:
        return matrix_csv(self.basis, self.data)


def _basis_index(m: int, k: int) -> dict:
    return {key: n for n, key in enumerate(basis_keys(m, k))}


def block_offsets(m: int, k: int) -> dict:
    """Start offset of each (|J|, |I|) block in the canonical basis."""
    offsets, pos = {}, 0
    for total in range(k + 1):
        for p in range(max(0, total - m), min(total, m) + 1):
            offsets[(p, total - p)] = pos
            pos += comb(m, p) * comb(m, total - p)
    return offsets


def assemble_transfer(
    m: int,
    k: int,
    left_table: Callable[[int, int], np.ndarray],
    gamma: CorrelationTensor,
    parities=(0,),
) -> np.ndarray:
    """Dense transfer matrix from minor tables ``left_table(p, r)`` over all |J| = p."""
    offsets = block_offsets(m, k)
    D = sum(comb(m, p) * comb(m, q) for (p, q) in offsets)
    T = np.zeros((D, D), dtype=complex)
    for (p, q), row0 in offsets.items():
        nJ, nI = comb(m, p), comb(m, q)
        for r, s, blk in contract_blocks(
            lambda r: left_table(p, r), lambda s: left_table(q, s), p, q, gamma, parities
        ):
            col0 = offsets[(p - r, q - s)]
            nK, nL = comb(m, p - r), comb(m, q - s)
            T[row0:row0 + nJ * nI, col0:col0 + nK * nL] += blk.reshape(nJ * nI, nK * nL)
    return T


def transfer_matrix(spec: ChannelSpec, k: int) -> MomentTransferMatrix:
    """Matrix of Phi^* on monomials of total order <= k (even environments only)."""
    _require_even(spec.gamma)
    m = spec.m
    if k < 0 or k > 2 * m:
        raise IndexRangeError(f"order cap k={k} outside 0..{2 * m}")
    R = spec.R
    cache: dict = {}

    def table(p, r):
        if (p, r) not in cache:
            cache[(p, r)] = split_minor_table(R, combination_array(m, p), m, r)
        return cache[(p, r)]

    data = assemble_transfer(m, k, table, spec.gamma)
    return MomentTransferMatrix(m, k, tuple(basis_keys(m, k)), data)


def apply_transfer(T: MomentTransferMatrix, moments) -> np.ndarray:
    moments = np.asarray(moments, dtype=complex)
    if moments.shape != (T.dim,):
        raise ShapeError(f"moment vector has shape {moments.shape}, expected ({T.dim},)")
    return T.data @ moments


# -- CSV helpers ----------------------------------------------------------------------


def fmt(x: float) -> str:
    """17 significant digits; -0.0 is written as 0."""
    return format(float(x) + 0.0, ".16e")


def fmt_complex(z: complex) -> str:
    sign = "-" if z.imag < 0 else "+"
    return f"{fmt(z.real)}{sign}{fmt(abs(z.imag))}j"


def matrix_csv(basis: Iterable[MonomialKey], data: np.ndarray) -> str:
    labels = [k.label() for k in basis]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row\\col"] + labels)
    for lab, row in zip(labels, data):
        w.writerow([lab] + [fmt_complex(z) for z in row])
    return buf.getvalue()
