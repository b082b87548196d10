"""Multi-indices, monomial keys and the minor/determinant kernels.

Mode labels are 1-based in every public function.  A multi-index is a plain
tuple of strictly increasing labels, e.g. ``(1, 3)``; the empty tuple is the
empty index.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .errors import IndexRangeError, ShapeError

MultiIndex = Tuple[int, ...]

# det of the 0x0 matrix
EMPTY_DET = 1.0


class MonomialKey(NamedTuple):
    """Key of the operator ``f_J^dagger f_I P^parity``."""

    J: MultiIndex
    I: MultiIndex
    parity: int = 0

    @property
    def order(self) -> int:
        return len(self.J) + len(self.I)

    def label(self) -> str:
        """Canonical ``"J|I"`` string, e.g. ``"1,3|2"``; parity keys get a ``"|P"`` suffix."""
        s = ",".join(map(str, self.J)) + "|" + ",".join(map(str, self.I))
        return s + "|P" if self.parity else s

    @classmethod
    def from_label(cls, text: str) -> "MonomialKey":
        parts = text.split("|")
        if len(parts) not in (2, 3):
            raise ValueError(f"bad monomial label {text!r}")

        def idx(s):
            return tuple(int(x) for x in s.split(",")) if s.strip() else ()

        parity = 1 if len(parts) == 3 and parts[2] == "P" else 0
        return cls(idx(parts[0]), idx(parts[1]), parity)


def key_order(key: MonomialKey):
    """Sort key for the canonical basis order: total order, |J|, J, I, parity."""
    return (len(key.J) + len(key.I), len(key.J), key.J, key.I, key.parity)


def check_multiindex(idx: Sequence[int], m: int) -> MultiIndex:
    idx = tuple(int(i) for i in idx)
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise IndexRangeError(f"multi-index {idx} is not strictly increasing")
    if idx and (idx[0] < 1 or idx[-1] > m):
        raise IndexRangeError(f"multi-index {idx} outside 1..{m}")
    return idx


def subsets(m: int, card: int) -> list[MultiIndex]:
    """All cardinality-``card`` subsets of 1..m in lexicographic order."""
    return list(combinations(range(1, m + 1), card))


def enumerate_multiindices(m: int, max_card: int) -> list[MultiIndex]:
    """Subsets of 1..m of size <= max_card, sorted by (size, lexicographic)."""
    if m < 1:
        raise IndexRangeError("m must be positive")
    if max_card < 0 or max_card > m:
        raise IndexRangeError(f"max_card={max_card} outside 0..{m}")
    out: list[MultiIndex] = []
    for c in range(max_card + 1):
        out.extend(subsets(m, c))
    return out


@lru_cache(maxsize=None)
def combination_array(m: int, card: int) -> np.ndarray:
    """Zero-based ``(binom(m, card), card)`` integer array of subsets, lexicographic."""
    n = comb(m, card)
    if card == 0:
        arr = np.zeros((1, 0), dtype=np.intp)
    else:
        arr = np.fromiter(
            (i for c in combinations(range(m), card) for i in c), dtype=np.intp, count=n * card
        ).reshape(n, card)
    arr.setflags(write=False)
    return arr


def basis_keys(m: int, k: int) -> list[MonomialKey]:
    """Canonical monomial basis ``f_J^dagger f_I`` with |J| + |I| <= k (parity 0)."""
    if k < 0 or k > 2 * m:
        raise IndexRangeError(f"order cap {k} outside 0..{2 * m}")
    keys = []
    for total in range(k + 1):
        for p in range(max(0, total - m), min(total, m) + 1):
            for J in subsets(m, p):
                for I in subsets(m, total - p):
                    keys.append(MonomialKey(J, I, 0))
    return keys


def basis_dimension(m: int, k: int) -> int:
    """sum_{p+q<=k} binom(m,p) binom(m,q)"""
    return sum(comb(m, p) * comb(m, q) for p in range(k + 1) for q in range(k + 1 - p))


def submatrix(X: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    X = np.asarray(X)
    p, q = X.shape
    rows, cols = tuple(rows), tuple(cols)
    if any(r < 1 or r > p for r in rows) or any(c < 1 or c > q for c in cols):
        raise IndexRangeError(f"labels {rows}x{cols} outside {p}x{q} matrix")
    return X[np.ix_([r - 1 for r in rows], [c - 1 for c in cols])].reshape(len(rows), len(cols))


def _det(M: np.ndarray) -> complex:
    if M.shape[0] == 0:
        return EMPTY_DET
    return complex(np.linalg.det(M))


def concat_det(Asub: np.ndarray, Bsub: np.ndarray) -> complex:
    """det of the horizontal concatenation ``(Asub | Bsub)``."""
    Asub = np.asarray(Asub, dtype=complex)
    Bsub = np.asarray(Bsub, dtype=complex)
    if (
        Asub.ndim != 2
        or Bsub.ndim != 2
        or Asub.shape[0] != Bsub.shape[0]
        or Asub.shape[1] + Bsub.shape[1] != Asub.shape[0]
    ):
        raise ShapeError(f"cannot form square matrix from {Asub.shape} | {Bsub.shape}")
    return _det(np.hstack([Asub, Bsub]))


def block_det_W(W: np.ndarray, I: MultiIndex, N: MultiIndex, L: MultiIndex, Omega: MultiIndex) -> complex:
    """det [[A_{IxL}, B_{IxOmega}], [C_{NxL}, D_{NxOmega}]] for W = [[A, B], [C, D]]."""
    W = np.asarray(W)
    two_m = W.shape[0]
    if W.shape != (two_m, two_m) or two_m % 2:
        raise ShapeError("W must be square with even size")
    if len(I) + len(N) != len(L) + len(Omega):
        raise ShapeError("|I|+|N| must equal |L|+|Omega|")
    m = two_m // 2
    for idx in (I, N, L, Omega):
        check_multiindex(idx, m)
    rows = list(I) + [m + n for n in N]
    cols = list(L) + [m + w for w in Omega]
    return _det(submatrix(W, rows, cols).astype(complex))


def sign_pow(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def batch_minors(X: np.ndarray, rows: np.ndarray, cols: np.ndarray, chunk: int = 200_000) -> np.ndarray:
    """Minors ``det(X[rows[a], cols[b]])`` for all pairs; zero-based index arrays.

    ``rows`` has shape ``(n, p)`` and ``cols`` shape ``(c, p)``; returns ``(n, c)``.
    """
    X = np.asarray(X, dtype=complex)
    rows = np.asarray(rows, dtype=np.intp).reshape(len(rows), -1)
    cols = np.asarray(cols, dtype=np.intp).reshape(len(cols), -1)
    p = rows.shape[1]
    if cols.shape[1] != p:
        raise ShapeError("row and column index sets must have equal size")
    n, c = rows.shape[0], cols.shape[0]
    if p == 0:
        return np.ones((n, c), dtype=complex)
    if p == 1:
        return X[rows[:, 0]][:, cols[:, 0]]
    if p == 2:
        r0, r1 = X[rows[:, 0]], X[rows[:, 1]]
        return r0[:, cols[:, 0]] * r1[:, cols[:, 1]] - r0[:, cols[:, 1]] * r1[:, cols[:, 0]]
    out = np.empty((n, c), dtype=complex)
    step = max(1, chunk // max(c, 1))
    for a in range(0, n, step):
        sub = X[rows[a:a + step, None, :, None], cols[None, :, None, :]]
        out[a:a + step] = np.linalg.det(sub)
    return out
