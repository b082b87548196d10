import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermiclose import fock_oracle as fo
from fermiclose.environment import (
    gamma_fock,
    gamma_from_density,
    gamma_gaussian,
    gamma_uniform,
    gamma_vacuum,
    moment_vector,
)
from fermiclose.errors import ConstraintError, IndexRangeError, ShapeError
from fermiclose.multiindex import basis_keys, enumerate_multiindices, subsets

from oracle_helpers import random_C


def test_vacuum_table():
    g = gamma_vacuum(2)
    tab = g.table()
    assert tab[((), ())] == 1
    assert sum(abs(v) for v in tab.values()) == 1


def test_fock_rule():
    g = gamma_fock(3, (1, 3))
    assert g((1,), (1,)) == 1 and g((1, 3), (1, 3)) == 1
    assert g((2,), (2,)) == 0 and g((1,), (3,)) == 0


def test_uniform_weights_m4_n2():
    g = gamma_uniform(4, 2)
    assert g((), ()) == 1
    assert g((1,), (1,)) == pytest.approx(0.5)
    assert g((1, 2), (1, 2)) == pytest.approx(1 / 6)
    assert g((1, 2, 3), (1, 2, 3)) == 0
    with pytest.raises(IndexRangeError):
        gamma_uniform(3, 4)


def test_uniform_is_the_number_projected_mixture():
    rep = fo.build_rep(3)
    g = gamma_uniform(3, 2)
    ref = gamma_from_density(fo.uniform_density(rep, 2))
    for (x, w), v in ref.table().items():
        assert abs(g(x, w) - v) < 1e-14


def test_gaussian_validation():
    with pytest.raises(ConstraintError):
        gamma_gaussian(np.diag([1.5, 0.2]))
    with pytest.raises(ConstraintError):
        gamma_gaussian(np.array([[0.5, 0.1], [0.3, 0.5]]))
    with pytest.raises(ShapeError):
        gamma_gaussian(np.zeros((2, 3)))


def test_gaussian_second_moment_and_det():
    C = np.array([[0.6, 0.2j], [-0.2j, 0.3]])
    g = gamma_gaussian(C)
    assert g((1,), (2,)) == pytest.approx(C[1, 0])
    assert g((1, 2), (1, 2)) == pytest.approx(np.linalg.det(C.T))


@given(st.integers(0, 2**31))
def test_wick_against_oracle_m2(seed):
    rng = np.random.default_rng(seed)
    C = random_C(2, rng)
    g = gamma_gaussian(C)
    ref = gamma_from_density(fo.gaussian_density(C, fo.build_rep(2)))
    for x in enumerate_multiindices(2, 2):
        for w in enumerate_multiindices(2, 2):
            assert abs(g(x, w) - ref(x, w)) < 1e-10


@pytest.mark.parametrize("kind", ["vacuum", "fock", "uniform", "gaussian"])
def test_blocks_match_pointwise(kind, rng):
    m = 4
    g = {"vacuum": gamma_vacuum(m), "fock": gamma_fock(m, (2, 3)), "uniform": gamma_uniform(m, 3),
         "gaussian": gamma_gaussian(random_C(m, rng))}[kind]
    for r in range(m + 1):
        for s in range(m + 1):
            B = g.block(r, s)
            assert not B.flags.writeable
            for a, x in enumerate(subsets(m, r)):
                for b, w in enumerate(subsets(m, s)):
                    assert abs(B[a, b] - g(x, w)) < 1e-12


def test_explicit_flags_measured(rng):
    rep = fo.build_rep(2)
    even = gamma_from_density(fo.random_even_density(2, rng))
    assert even.is_even and not even.is_gauge_invariant
    general = gamma_from_density(fo.random_density(2, rng))
    assert not general.is_even
    assert abs(general((), (1,))) > 0
    fock = gamma_from_density(fo.fock_density(rep, (2,)))
    assert fock.is_even and fock.is_gauge_invariant


def test_explicit_rejects_bad_sigma():
    with pytest.raises(ShapeError):
        gamma_from_density(np.eye(3))
    with pytest.raises(ConstraintError):
        gamma_from_density(np.diag([1.2, -0.2, 0, 0]))


def test_normalization_and_moment_vector():
    g = gamma_fock(2, (1,))
    keys = basis_keys(2, 2)
    v = moment_vector(g, keys)
    assert v[0] == 1 and g.normalization == 1
    assert v[keys.index(type(keys[0])((1,), (1,)))] == 1
