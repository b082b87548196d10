"""GKSL generators from CP maps and their closed moment equations.

The generator ``L(rho) = Phi(rho) - Gamma0 rho`` acts on observables as
``L^*(X) = Phi^*(X) - Gamma0 X`` with ``Gamma0 = Tr(sigma)``.  Restricted to
monomials of order <= k it is the matrix ``T - Gamma0 * 1`` where ``T`` is the
transfer matrix of ``Phi^*``.

A one-particle Hamiltonian ``H`` contributes the derivation fixed by
``f_l -> i sum_k H[l, k] f_k`` and ``f_j^dagger -> -i sum_k conj(H[j, k]) f_k^dagger``
(annihilators evolve as ``exp(iHt) f``, the same convention as the contraction
semigroup ``A(t) = exp(i H_eff t)``).  On a monomial the derivation replaces one
index at a time; a replacement that repeats an index vanishes, otherwise the
factor is re-sorted with the sign of the sorting permutation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import comb
from typing import Iterable, Optional

import numpy as np

from . import linalg
from .channel import ChannelSpec, MonomialPoly, _require_even, block_offsets, dual_action_even, transfer_matrix
from .errors import ConstraintError, ShapeError
from .multiindex import MonomialKey, MultiIndex, basis_keys, check_multiindex
from .secondquant import kronecker_sum


@dataclass(frozen=True, eq=False)
class MomentODESystem:
    """``d/dt mu = (generator_matrix + hamiltonian_part) mu`` over ``basis``."""

    m: int
    k: int
    basis: tuple
    generator_matrix: np.ndarray
    hamiltonian_part: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def total(self) -> np.ndarray:
        if self.hamiltonian_part is None:
            return self.generator_matrix
        return self.generator_matrix + self.hamiltonian_part

    def propagator(self, t: float) -> np.ndarray:
        if t not in self._cache:
            self._cache[t] = linalg.expm(t * self.total)
        return self._cache[t]


def generator_action(spec: ChannelSpec, J, I) -> MonomialPoly:
    """``L^*(f_J^dagger f_I) = Phi^*(f_J^dagger f_I) - Gamma0 f_J^dagger f_I``."""
    _require_even(spec.gamma)
    g0 = spec.gamma.normalization
    return dual_action_even(spec, J, I) - MonomialPoly.monomial(tuple(J), tuple(I), 0, g0)


def _replace(idx: MultiIndex, pos: int, new: int):
    """Sign and sorted index after replacing ``idx[pos]`` by ``new``; None if repeated."""
    rest = idx[:pos] + idx[pos + 1:]
    if new in rest:
        return None
    # moving `new` from slot pos to its sorted slot passes |shift| neighbours
    target = sum(1 for x in rest if x < new)
    sign = -1 if (pos - target) % 2 else 1
    return sign, tuple(sorted(rest + (new,)))


def hamiltonian_action(H, J, I) -> MonomialPoly:
    """``L_H^*(f_J^dagger f_I)`` for the one-particle Hamiltonian derivation."""
    H = np.asarray(H, dtype=complex)
    m = H.shape[0]
    J = check_multiindex(J, m)
    I = check_multiindex(I, m)
    acc: dict = {}
    for pos, i in enumerate(I):
        for k in range(1, m + 1):
            h = H[i - 1, k - 1]
            if h == 0:
                continue
            rep = _replace(I, pos, k)
            if rep is None:
                continue
            sign, newI = rep
            key = MonomialKey(J, newI, 0)
            acc[key] = acc.get(key, 0j) + 1j * h * sign
    # f_J^dagger = (f_J)^dagger: derivation of f_J, then conjugate
    for pos, j in enumerate(J):
        for k in range(1, m + 1):
            h = H[j - 1, k - 1]
            if h == 0:
                continue
            rep = _replace(J, pos, k)
            if rep is None:
                continue
            sign, newJ = rep
            key = MonomialKey(newJ, I, 0)
            acc[key] = acc.get(key, 0j) - 1j * np.conj(h) * sign
    return MonomialPoly(acc)


def hamiltonian_matrix(H, m: int, k: int) -> np.ndarray:
    basis = basis_keys(m, k)
    index = {key: n for n, key in enumerate(basis)}
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for row, key in enumerate(basis):
        for tkey, c in hamiltonian_action(H, key.J, key.I).items():
            out[row, index[tkey]] += c
    return out


def moment_ode_system(spec: ChannelSpec, k: int, H=None, tol: float = 1e-9) -> MomentODESystem:
    T = transfer_matrix(spec, k)
    gen = T.data - spec.gamma.normalization * np.eye(T.dim)
    ham = None
    if H is not None:
        H = linalg.as_matrix(H)
        if H.shape != (spec.m, spec.m):
            raise ShapeError(f"H must be {spec.m}x{spec.m}")
        if np.linalg.norm(H - H.conj().T) > tol:
            raise ConstraintError("one-particle Hamiltonian must be Hermitian")
        ham = hamiltonian_matrix(H, spec.m, k)
    return MomentODESystem(spec.m, k, T.basis, gen, ham)


def sum_generators(systems: Iterable[MomentODESystem]) -> MomentODESystem:
    """Sum of several generators over a common basis."""
    systems = list(systems)
    if not systems:
        raise ValueError("need at least one system")
    first = systems[0]
    for s in systems[1:]:
        if (s.m, s.k) != (first.m, first.k):
            raise ShapeError("generators must share mode count and order cap")
    gen = sum(s.generator_matrix for s in systems)
    hams = [s.hamiltonian_part for s in systems if s.hamiltonian_part is not None]
    return MomentODESystem(first.m, first.k, first.basis, gen, sum(hams) if hams else None)


def evolve_moments(sys: MomentODESystem, mu0, t: float) -> np.ndarray:
    mu0 = np.asarray(mu0, dtype=complex)
    if mu0.shape != (sys.dim,):
        raise ShapeError(f"moment vector has shape {mu0.shape}, expected ({sys.dim},)")
    if t < 0:
        raise ValueError("t must be non-negative")
    return sys.propagator(t) @ mu0


def trajectory(sys: MomentODESystem, mu0, t_grid) -> np.ndarray:
    return np.array([evolve_moments(sys, mu0, t) for t in t_grid])


def tensor_power_evolution(A, p: int, q: int, gamma0: complex, t: float, H=None) -> np.ndarray:
    """Propagator of ``<(f^+)^{(x)p} (x) f^{(x)q}>`` for a vacuum-type environment.

    Component ``(j_1..j_p, i_1..i_q)`` is ``(f_{j_1}...f_{j_p})^dagger f_{i_1}...f_{i_q}``;
    creation slots transform with ``conj(A)``, annihilation slots with ``A``.
    With ``H`` given the generator gains ``i H^{(q)}`` on annihilation slots and
    ``-i conj(H)^{(p)}`` on creation slots.
    """
    A = linalg.as_matrix(A)
    m = A.shape[0]
    M = np.ones((1, 1), dtype=complex)
    for _ in range(p):
        M = np.kron(M, A.conj())
    for _ in range(q):
        M = np.kron(M, A)
    gen = gamma0 * (M - np.eye(M.shape[0]))
    if H is not None:
        H = linalg.as_matrix(H)
        eye_p, eye_q = np.eye(m**p), np.eye(m**q)
        if p:
            gen = gen - 1j * np.kron(kronecker_sum(H.conj(), p), eye_q)
        if q:
            gen = gen + 1j * np.kron(eye_p, kronecker_sum(H, q))
    return linalg.expm(t * gen)


def antisymmetric_vector(mu: dict, m: int, p: int, q: int) -> np.ndarray:
    """Full tensor of ``(f_j-tuple)^dagger f_i-tuple`` moments from ordered moments."""
    out = np.zeros(m ** (p + q), dtype=complex)
    for jt in product(range(1, m + 1), repeat=p):
        if len(set(jt)) < p:
            continue
        for it in product(range(1, m + 1), repeat=q):
            if len(set(it)) < q:
                continue
            sj, si = _perm_sign(jt), _perm_sign(it)
            val = mu.get((tuple(sorted(jt)), tuple(sorted(it))), 0j)
            flat = 0
            for x in jt + it:
                flat = flat * m + (x - 1)
            out[flat] = sj * si * val
    return out


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign = -sign
    return sign


def block_slice(m: int, k: int, p: int, q: int) -> slice:
    """Rows of the (|J|, |I|) = (p, q) block in the canonical basis."""
    start = block_offsets(m, k)[(p, q)]
    return slice(start, start + comb(m, p) * comb(m, q))
