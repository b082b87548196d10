"""Dense complex linear-algebra kernels.

Kronecker products and partial traces use one global convention: the first
factor is the slow index, ``(X kron Y)[i*rows(Y)+k, j*cols(Y)+l] = X[i,j] Y[k,l]``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import ConstraintError, ShapeError

DEFAULT_TOL = 1e-9


def _square(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {X.shape}")
    return X


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ConstraintError("matrix has non-finite entries")
    return X


def det(X) -> complex:
    X = _square(X)
    if X.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(X))


def expm(X) -> np.ndarray:
    X = _square(X)
    if X.shape[0] == 0:
        return X.copy()
    return sla.expm(X)


def hermitian_sqrt(X, tol: float = DEFAULT_TOL) -> np.ndarray:
    """PSD square root of a Hermitian PSD matrix; eigenvalues in [-tol, 0) are clamped."""
    X = _square(X)
    scale = max(1.0, np.linalg.norm(X))
    if np.linalg.norm(X - X.conj().T) > tol * scale:
        raise ConstraintError("matrix is not Hermitian within tolerance")
    w, V = np.linalg.eigh((X + X.conj().T) / 2)
    if w.size and w.min() < -tol * scale:
        raise ConstraintError(f"matrix is not PSD: smallest eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def unitary_log(W, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Hermitian H with expm(-1j*H) == W, eigenphases taken in (-pi, pi]."""
    W = _square(W)
    n = W.shape[0]
    if np.linalg.norm(W @ W.conj().T - np.eye(n)) > tol:
        raise ConstraintError("matrix is not unitary within tolerance")
    # complex Schur form of a normal matrix is diagonal
    T, Z = sla.schur(W, output="complex")
    phases = np.angle(np.diag(T))
    phases[np.isclose(phases, -np.pi, atol=1e-14)] = np.pi
    H = -(Z * phases) @ Z.conj().T
    return (H + H.conj().T) / 2


def complete_isometry(A, B, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unitary ``W = [[A, B], [C, D]]`` extending the isometry ``(A | B)``."""
    A, B = as_matrix(A), as_matrix(B)
    m = A.shape[0]
    if A.shape != (m, m) or B.shape != (m, m):
        raise ShapeError("A and B must both be m x m")
    R = np.hstack([A, B])
    resid = np.linalg.norm(R @ R.conj().T - np.eye(m))
    if resid > tol:
        raise ConstraintError(f"AA^+ + BB^+ != 1 (residual {resid:.3e})")
    # rows of (C | D) span the orthogonal complement of the rows of R
    comp = sla.null_space(R, rcond=1e-12)
    if comp.shape[1] != m:
        raise ConstraintError("row space of (A | B) does not have full rank")
    W = np.vstack([R, comp.conj().T])
    return W


def kron(X, Y) -> np.ndarray:
    return np.kron(np.asarray(X, dtype=complex), np.asarray(Y, dtype=complex))


def partial_trace_second(X, d1: int, d2: int) -> np.ndarray:
    """Trace out the second (fast) tensor factor of a (d1*d2) x (d1*d2) matrix."""
    X = _square(X)
    if X.shape[0] != d1 * d2:
        raise ShapeError(f"size {X.shape[0]} != {d1}*{d2}")
    return np.einsum("ikjk->ij", X.reshape(d1, d2, d1, d2))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with phase-fixed diagonal."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))
