"""Environment correlation tensors ``Gamma[Xi; Omega] = Tr(sigma f_Xi^dagger f_Omega)``."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Any

import numpy as np

from . import fock_oracle
from .errors import ConstraintError, IndexRangeError, ShapeError
from .multiindex import (
    MonomialKey,
    MultiIndex,
    batch_minors,
    check_multiindex,
    combination_array,
    enumerate_multiindices,
    subsets,
)

KINDS = ("vacuum", "gaussian", "fock", "uniform", "explicit")


@dataclass(eq=False)
class CorrelationTensor:
    """Lazy evaluator of the environment moments.

    ``params`` holds the kind-specific data: ``C`` (gaussian), ``M`` (fock),
    ``N`` (uniform) or ``table`` (explicit, keyed by ``(Xi, Omega)``).
    """

    m: int
    kind: str
    params: dict
    is_even: bool
    is_gauge_invariant: bool
    _blocks: dict = field(default_factory=dict, repr=False)

    @property
    def normalization(self) -> complex:
        return self((), ())

    def __call__(self, xi: MultiIndex, omega: MultiIndex) -> complex:
        xi = check_multiindex(xi, self.m)
        omega = check_multiindex(omega, self.m)
        if self.is_gauge_invariant and len(xi) != len(omega):
            return 0j
        if self.is_even and (len(xi) + len(omega)) % 2:
            return 0j
        return _EVAL[self.kind](self, xi, omega)

    def block(self, r: int, s: int) -> np.ndarray:
        """Matrix of Gamma over all |Xi| = r (rows) and |Omega| = s (columns).

        Both axes use lexicographic order of the subsets.  Cached per ``(r, s)``.
        """
        cached = self._blocks.get((r, s))
        if cached is not None:
            return cached
        nr, ns = comb(self.m, r), comb(self.m, s)
        if (self.is_gauge_invariant and r != s) or (self.is_even and (r + s) % 2):
            out = np.zeros((nr, ns), dtype=complex)
        else:
            out = _BLOCK.get(self.kind, _block_by_loop)(self, r, s)
        out.setflags(write=False)
        self._blocks[(r, s)] = out
        return out

    def table(self) -> dict:
        """All 4^m entries as ``{(Xi, Omega): value}`` (small m only)."""
        idx = enumerate_multiindices(self.m, self.m)
        return {(x, w): self(x, w) for x in idx for w in idx}

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "m": self.m, "is_even": self.is_even,
                "is_gauge_invariant": self.is_gauge_invariant}


def _block_by_loop(g: CorrelationTensor, r: int, s: int) -> np.ndarray:
    rows, cols = subsets(g.m, r), subsets(g.m, s)
    return np.array([[_EVAL[g.kind](g, x, w) for w in cols] for x in rows], dtype=complex).reshape(
        len(rows), len(cols)
    )


def _eval_vacuum(g, xi, omega):
    return 1.0 + 0j if not xi and not omega else 0j


def _eval_gaussian(g, xi, omega):
    if len(xi) != len(omega):
        return 0j
    if not xi:
        return 1.0 + 0j
    C = g.params["C"]
    return complex(np.linalg.det(C[np.ix_([w - 1 for w in omega], [x - 1 for x in xi])]))


def _block_gaussian(g, r, s):
    # Gamma[Xi, Omega] = det C[Omega, Xi], so the block is the transposed minor table
    C = g.params["C"]
    return batch_minors(C, combination_array(g.m, s), combination_array(g.m, r)).T.copy()


def _eval_fock(g, xi, omega):
    M = set(g.params["M"])
    return 1.0 + 0j if xi == omega and set(xi) <= M else 0j


def _uniform_weight(m: int, N: int, card: int) -> float:
    # exact integer binomials; binom(a, b) = 0 outside 0 <= b <= a
    num = comb(m - card, N - card) if 0 <= N - card <= m - card else 0
    return num / comb(m, N)


def _eval_uniform(g, xi, omega):
    if xi != omega:
        return 0j
    return complex(_uniform_weight(g.m, g.params["N"], len(xi)))


def _block_diagonal(g, r, s):
    n = comb(g.m, r)
    if g.kind == "uniform":
        diag = np.full(n, _uniform_weight(g.m, g.params["N"], r), dtype=complex)
    else:
        M = set(g.params["M"])
        diag = np.array([1.0 if set(x) <= M else 0.0 for x in subsets(g.m, r)], dtype=complex)
    return np.diag(diag)


def _eval_explicit(g, xi, omega):
    return complex(g.params["table"].get((xi, omega), 0j))


_EVAL = {
    "vacuum": _eval_vacuum,
    "gaussian": _eval_gaussian,
    "fock": _eval_fock,
    "uniform": _eval_uniform,
    "explicit": _eval_explicit,
}
_BLOCK = {"gaussian": _block_gaussian, "fock": _block_diagonal, "uniform": _block_diagonal}


def gamma_vacuum(m: int) -> CorrelationTensor:
    if m < 1:
        raise IndexRangeError("m must be positive")
    return CorrelationTensor(m, "vacuum", {}, True, True)


def gamma_gaussian(C, tol: float = 1e-9) -> CorrelationTensor:
    """Gauge-invariant Gaussian environment with ``C[a, b] = Tr(sigma f_b^dagger f_a)``."""
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ShapeError("C must be square")
    if np.linalg.norm(C - C.conj().T) > tol:
        raise ConstraintError("C is not Hermitian")
    w = np.linalg.eigvalsh((C + C.conj().T) / 2)
    if w.min() < -tol or w.max() > 1 + tol:
        raise ConstraintError("eigenvalues of C must lie in [0, 1]")
    C = C.copy()
    C.setflags(write=False)
    return CorrelationTensor(C.shape[0], "gaussian", {"C": C}, True, True)


def gamma_fock(m: int, M: MultiIndex) -> CorrelationTensor:
    M = check_multiindex(M, m)
    return CorrelationTensor(m, "fock", {"M": M}, True, True)


def gamma_uniform(m: int, N: int) -> CorrelationTensor:
    if not 0 <= N <= m:
        raise IndexRangeError(f"particle number N={N} outside 0..{m}")
    return CorrelationTensor(m, "uniform", {"N": int(N)}, True, True)


def gamma_from_density(sigma, tol: float = 1e-9, comm_tol: float = 1e-10) -> CorrelationTensor:
    """Tabulate all moments of an explicit environment density matrix.

    Evenness and gauge invariance are measured, not assumed.
    """
    sigma = np.asarray(sigma, dtype=complex)
    d = sigma.shape[0]
    m = d.bit_length() - 1
    if sigma.shape != (d, d) or 2**m != d:
        raise ShapeError("sigma must be 2^m x 2^m")
    if np.linalg.norm(sigma - sigma.conj().T) > tol:
        raise ConstraintError("sigma is not Hermitian")
    if np.linalg.eigvalsh((sigma + sigma.conj().T) / 2).min() < -tol:
        raise ConstraintError("sigma is not positive semidefinite")
    rep = fock_oracle.build_rep(m)
    idx = enumerate_multiindices(m, m)
    mats = {x: fock_oracle.monomial_matrix(rep, (), x) for x in idx}
    table = {}
    for xi in idx:
        left = sigma @ mats[xi].conj().T
        for om in idx:
            val = complex(np.trace(left @ mats[om]))
            if val != 0:
                table[(xi, om)] = val
    P, N = rep.parity, rep.number_op
    is_even = np.linalg.norm(P @ sigma - sigma @ P) <= comm_tol
    is_gauge = np.linalg.norm(N @ sigma - sigma @ N) <= comm_tol
    if is_even:
        table = {k: v for k, v in table.items() if (len(k[0]) + len(k[1])) % 2 == 0}
    if is_gauge:
        table = {k: v for k, v in table.items() if len(k[0]) == len(k[1])}
    return CorrelationTensor(m, "explicit", {"table": table, "sigma": sigma}, bool(is_even), bool(is_gauge))


def moment_vector(g: CorrelationTensor, keys: list[MonomialKey]) -> np.ndarray:
    """Evaluate ``Tr(sigma f_J^dagger f_I)`` on a list of basis keys."""
    return np.array([g(k.J, k.I) for k in keys], dtype=complex)
