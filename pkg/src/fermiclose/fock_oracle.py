"""Brute-force Fock-space realization used as ground truth in tests.

Basis convention: ``|n_1 ... n_m>`` with mode 1 the leftmost (slowest) tensor
factor, ``|0> = (1, 0)^T`` and the single-mode annihilator ``S = [[0, 1], [0, 0]]``
mapping ``|1>`` to ``|0>``.  Jordan-Wigner strings use ``Z = diag(1, -1)``.

System-plus-environment operators live on ``C^{2^m} (x) C^{2^m}`` with
``a_i = f_i (x) 1`` and ``b_i = P (x) f_i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from . import linalg
from .errors import ConstraintError, ResourceGuardError, ShapeError
from .multiindex import MonomialKey, MultiIndex, check_multiindex, enumerate_multiindices

MAX_MODES = 14
MAX_COMBINED_MODES = 3
MAX_EXPANSION_MODES = 6

_Z = np.diag([1.0, -1.0]).astype(complex)
_S = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True, eq=False)
class FockRep:
    m: int
    f_ops: tuple
    parity: np.ndarray
    number_op: np.ndarray

    @property
    def dim(self) -> int:
        return 2 ** self.m


def _guard(m: int, limit: int, what: str) -> None:
    if m < 1 or m > limit:
        raise ResourceGuardError(f"{what} limited to 1 <= m <= {limit}, got m={m}")


@lru_cache(maxsize=None)
def build_rep(m: int) -> FockRep:
    _guard(m, MAX_MODES, "Fock representation")
    f_ops = []
    for j in range(m):
        factors = [_Z] * j + [_S] + [_I2] * (m - j - 1)
        f = reduce(np.kron, factors)
        f.setflags(write=False)
        f_ops.append(f)
    occ = np.array([bin(s).count("1") for s in range(2**m)], dtype=float)
    P = np.diag((-1.0) ** occ).astype(complex)
    N = np.diag(occ).astype(complex)
    P.setflags(write=False)
    N.setflags(write=False)
    return FockRep(m, tuple(f_ops), P, N)


def _product(mats, dim):
    out = np.eye(dim, dtype=complex)
    for M in mats:
        out = out @ M
    return out


def monomial_matrix(rep: FockRep, J: MultiIndex, I: MultiIndex, parity_exp: int = 0) -> np.ndarray:
    """``(f_{j1}...f_{jq})^dagger (f_{i1}...f_{ip}) P^parity_exp``."""
    J = check_multiindex(J, rep.m)
    I = check_multiindex(I, rep.m)
    fJ = _product([rep.f_ops[j - 1] for j in J], rep.dim)
    fI = _product([rep.f_ops[i - 1] for i in I], rep.dim)
    X = fJ.conj().T @ fI
    if parity_exp % 2:
        X = X @ rep.parity
    return X


def key_matrix(rep: FockRep, key: MonomialKey) -> np.ndarray:
    return monomial_matrix(rep, key.J, key.I, key.parity)


def combined_modes(rep: FockRep) -> tuple[list, list]:
    _guard(rep.m, MAX_COMBINED_MODES, "combined system+environment space")
    one = np.eye(rep.dim, dtype=complex)
    a_ops = [np.kron(f, one) for f in rep.f_ops]
    b_ops = [np.kron(rep.parity, f) for f in rep.f_ops]
    return a_ops, b_ops


def implement_mode_unitary(W, modes, tol: float = 1e-8) -> np.ndarray:
    """Unitary U with ``U^dagger c_l U = (W c)_l`` for the CAR family ``modes``.

    Uses ``W = expm(-iH)`` and ``U = expm(-iG)`` with ``G = sum_jk H_jk c_j^dagger c_k``.
    """
    W = np.asarray(W, dtype=complex)
    n = len(modes)
    if W.shape != (n, n):
        raise ShapeError(f"W has shape {W.shape}, expected {(n, n)}")
    H = linalg.unitary_log(W)
    dim = modes[0].shape[0]
    G = np.zeros((dim, dim), dtype=complex)
    for j in range(n):
        cj_dag = modes[j].conj().T
        for k in range(n):
            if H[j, k] != 0:
                G += H[j, k] * (cj_dag @ modes[k])
    U = linalg.expm(-1j * G)
    Ud = U.conj().T
    for l in range(n):
        target = sum(W[l, k] * modes[k] for k in range(n))
        err = np.linalg.norm(Ud @ modes[l] @ U - target)
        if err > tol:
            raise ConstraintError(f"mode relation {l + 1} violated by {err:.3e}")
    return U


def implement_unitary(rep: FockRep, W) -> np.ndarray:
    """Implement a 2m x 2m mode unitary on the combined (a, b) modes."""
    a_ops, b_ops = combined_modes(rep)
    return implement_mode_unitary(W, a_ops + b_ops)


def channel_apply(U, sigma, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    d = rho.shape[0]
    if sigma.shape != (d, d) or np.shape(U) != (d * d, d * d):
        raise ShapeError("inconsistent shapes for channel application")
    return linalg.partial_trace_second(U @ np.kron(rho, sigma) @ np.conj(U).T, d, d)


def postselected_dual(U, sigma, E, X) -> np.ndarray:
    """``Tr_2[(1 (x) sigma) U^dagger (X (x) E) U]``."""
    X = np.asarray(X, dtype=complex)
    d = X.shape[0]
    sigma = np.asarray(sigma, dtype=complex)
    E = np.asarray(E, dtype=complex)
    if sigma.shape != (d, d) or E.shape != (d, d) or np.shape(U) != (d * d, d * d):
        raise ShapeError("inconsistent shapes for dual application")
    U = np.asarray(U)
    Y = U.conj().T @ np.kron(X, E) @ U
    return linalg.partial_trace_second(np.kron(np.eye(d), sigma) @ Y, d, d)


def dual_apply(U, sigma, X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    return postselected_dual(U, sigma, np.eye(X.shape[0]), X)


def gaussian_density(C, rep: FockRep, tol: float = 1e-9) -> np.ndarray:
    """Gauge-invariant Gaussian state with ``Tr(sigma f_b^dagger f_a) = C[a, b]``."""
    C = np.asarray(C, dtype=complex)
    m = rep.m
    if C.shape != (m, m):
        raise ShapeError(f"C must be {m}x{m}")
    if np.linalg.norm(C - C.conj().T) > tol:
        raise ConstraintError("C is not Hermitian")
    nu, V = np.linalg.eigh((C + C.conj().T) / 2)
    if nu.min() < -tol or nu.max() > 1 + tol:
        raise ConstraintError("spectrum of C outside [0, 1]")
    nu = np.clip(nu, 0.0, 1.0)
    sigma0 = reduce(np.kron, [np.diag([1 - v, v]).astype(complex) for v in nu])
    U = implement_mode_unitary(V, list(rep.f_ops))
    return U @ sigma0 @ U.conj().T


def fock_density(rep: FockRep, M: MultiIndex) -> np.ndarray:
    M = check_multiindex(M, rep.m)
    state = np.zeros(rep.dim, dtype=complex)
    state[sum(1 << (rep.m - j) for j in M)] = 1.0
    return np.outer(state, state)


def uniform_density(rep: FockRep, N: int) -> np.ndarray:
    """Equal mixture of all Fock states with N particles."""
    states = [M for M in enumerate_multiindices(rep.m, rep.m) if len(M) == N]
    return sum(fock_density(rep, M) for M in states) / len(states)


def environment_density(gamma, rep: FockRep) -> np.ndarray:
    """Density matrix realizing one of the correlation-tensor families."""
    kind, params = gamma.kind, gamma.params
    if kind == "vacuum":
        return fock_density(rep, ())
    if kind == "fock":
        return fock_density(rep, params["M"])
    if kind == "uniform":
        return uniform_density(rep, params["N"])
    if kind == "gaussian":
        return gaussian_density(params["C"], rep)
    return np.asarray(params["sigma"], dtype=complex)


@lru_cache(maxsize=None)
def _expansion_basis(m: int):
    _guard(m, MAX_EXPANSION_MODES, "monomial expansion")
    rep = build_rep(m)
    idx = enumerate_multiindices(m, m)
    keys = [MonomialKey(M, N, 0) for M in idx for N in idx]
    cols = np.stack([key_matrix(rep, k).reshape(-1) for k in keys], axis=1)
    inv = np.linalg.inv(cols)
    inv.setflags(write=False)
    return keys, inv


def expand_in_monomials(rep: FockRep, X, tol: float = 1e-9, prune: float = 0.0) -> dict:
    """Coefficients of X in the basis ``{f_M^dagger f_N}`` of all 4^m monomials."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (rep.dim, rep.dim):
        raise ShapeError("operator has wrong dimension")
    keys, inv = _expansion_basis(rep.m)
    c = inv @ X.reshape(-1)
    recon = sum(ci * key_matrix(rep, k) for ci, k in zip(c, keys) if ci != 0)
    scale = max(1.0, np.linalg.norm(X))
    if np.linalg.norm(recon - X) > tol * scale:
        raise ConstraintError("monomial expansion failed to reconstruct the operator")
    return {k: complex(ci) for k, ci in zip(keys, c) if abs(ci) > prune}


def expand_with_parity(rep: FockRep, Y, grade: int, prune: float = 1e-13) -> dict:
    """Split Y into ``sum c f_K^+ f_L + (sum d f_K^+ f_L) P`` with grades fixed.

    Terms without P have operator grade ``grade`` (mod 2); terms carrying P are
    built from monomials of the opposite grade.  This makes the decomposition
    unique, which is how parity-carrying formulas are compared.
    """
    Y = np.asarray(Y, dtype=complex)
    P = rep.parity
    even = (Y + P @ Y @ P) / 2
    odd = Y - even
    same, other = (even, odd) if grade % 2 == 0 else (odd, even)
    out = {}
    for k, c in expand_in_monomials(rep, same).items():
        if abs(c) > prune:
            out[k] = c
    for k, c in expand_in_monomials(rep, other @ P).items():
        if abs(c) > prune:
            out[MonomialKey(k.J, k.I, 1)] = c
    return out


def moments(rep: FockRep, rho, keys) -> np.ndarray:
    """``Tr(rho f_J^dagger f_I)`` for each key."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(rho @ key_matrix(rep, k)) for k in keys])


def liouvillian(U, sigma, gamma0: complex, H=None, rep: FockRep | None = None) -> np.ndarray:
    """Superoperator (row-major vec) of ``L(rho) = Phi(rho) - gamma0 rho - i[Hhat, rho]``.

    ``Hhat = -sum_ab H_ab f_a^dagger f_b`` so that annihilators evolve as
    ``f -> exp(iHt) f`` in the Heisenberg picture.
    """
    sigma = np.asarray(sigma, dtype=complex)
    d = sigma.shape[0]
    m = d.bit_length() - 1
    _guard(m, MAX_COMBINED_MODES, "master-equation superoperator")
    Hhat = None
    if H is not None:
        rep = rep or build_rep(m)
        H = np.asarray(H, dtype=complex)
        Hhat = -sum(H[a, b] * rep.f_ops[a].conj().T @ rep.f_ops[b] for a in range(m) for b in range(m))
    L = np.zeros((d * d, d * d), dtype=complex)
    for col in range(d * d):
        E = np.zeros(d * d, dtype=complex)
        E[col] = 1.0
        E = E.reshape(d, d)
        out = channel_apply(U, sigma, E) - gamma0 * E
        if Hhat is not None:
            out = out - 1j * (Hhat @ E - E @ Hhat)
        L[:, col] = out.reshape(-1)
    return L


def master_equation_evolve(U, sigma, rho0, t: float, H=None) -> np.ndarray:
    """``rho_t = expm(t L) rho0`` with ``L(rho) = Phi(rho) - Tr(sigma) rho`` (+ Hamiltonian)."""
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    gamma0 = np.trace(np.asarray(sigma, dtype=complex))
    L = liouvillian(U, sigma, gamma0, H)
    return (linalg.expm(t * L) @ rho0.reshape(-1)).reshape(d, d)


def random_density(m: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    d = 2**m
    rank = rank or d
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def random_even_density(m: int, rng: np.random.Generator) -> np.ndarray:
    rep = build_rep(m)
    rho = random_density(m, rng)
    P = rep.parity
    rho = (rho + P @ rho @ P) / 2
    return rho / np.trace(rho)


def random_even_effect(m: int, rng: np.random.Generator) -> np.ndarray:
    """Random parity-even operator with spectrum inside [0, 1]."""
    # P is diagonal in the occupation basis, so build E block-diagonally
    parity = np.real(np.diag(build_rep(m).parity))
    evens = np.where(parity > 0)[0]
    odds = np.where(parity < 0)[0]
    E = np.zeros((2**m, 2**m), dtype=complex)
    for block in (evens, odds):
        Q = linalg.random_unitary(len(block), rng)
        E[np.ix_(block, block)] = (Q * rng.uniform(0.0, 1.0, len(block))) @ Q.conj().T
    return E
