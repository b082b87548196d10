"""Shared builders for oracle comparisons."""
import numpy as np

from fermiclose import fock_oracle, linalg
from fermiclose.channel import ChannelSpec
from fermiclose.environment import gamma_fock, gamma_gaussian, gamma_uniform, gamma_vacuum


def random_hermitian(m, rng):
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (X + X.conj().T) / 2


def random_C(m, rng):
    V = linalg.random_unitary(m, rng)
    return (V * rng.uniform(0, 1, m)) @ V.conj().T


def random_contraction(m, rng):
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return X / (np.linalg.norm(X, 2) * rng.uniform(1.0, 2.0))


def random_environment(kind, m, rng):
    if kind == "vacuum":
        return gamma_vacuum(m)
    if kind == "fock":
        M = tuple(int(j) + 1 for j in np.flatnonzero(rng.integers(0, 2, m)))
        return gamma_fock(m, M)
    if kind == "uniform":
        return gamma_uniform(m, int(rng.integers(0, m + 1)))
    return gamma_gaussian(random_C(m, rng))


def realize(W, gamma):
    """Oracle pieces (rep, U, sigma) for a mode unitary and environment."""
    m = gamma.m
    rep = fock_oracle.build_rep(m)
    U = fock_oracle.implement_unitary(rep, W)
    return rep, U, fock_oracle.environment_density(gamma, rep)


def random_spec(m, kind, rng):
    W = linalg.random_unitary(2 * m, rng)
    return ChannelSpec.from_unitary(W, random_environment(kind, m, rng))


def poly_matrix(rep, poly):
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for key, c in poly.items():
        out += c * fock_oracle.key_matrix(rep, key)
    return out
