import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skam.context import EnumerationCapError
from skam.lattice import (ResonanceLattice, bounded_vectors, enumerate_lattices, hermite_normal_form,
                          lll_reduce, saturation_index)


def random_unimodular(rng, n, steps=8):
    U = np.eye(n, dtype=np.int64)
    for _ in range(steps):
        i, j = rng.choice(n, size=2, replace=False) if n > 1 else (0, 0)
        if n > 1:
            U[i] += int(rng.integers(-2, 3)) * U[j]
        if rng.random() < 0.3:
            U[int(rng.integers(n))] *= -1
        if n > 1 and rng.random() < 0.3:
            U[[i, j]] = U[[j, i]]
    assert abs(round(np.linalg.det(U))) == 1
    return U


@pytest.mark.parametrize("basis", [[[1, 1, 0], [0, 1, 2]], [[2, 1]], [[1, -1, 0]], [[3, 1, 0], [1, 0, 1], [0, 2, 1]]])
def test_hnf_canonical_under_100_rebasings(basis):
    rng = np.random.default_rng(7)
    B = np.array(basis, dtype=np.int64)
    ref = hermite_normal_form(B)
    for _ in range(100):
        U = random_unimodular(rng, B.shape[0])
        assert hermite_normal_form(U @ B) == ref


def test_hnf_shape():
    H = hermite_normal_form([[0, 2], [1, 1]])
    assert H == [[1, 1], [0, 2]]
    assert hermite_normal_form([[-1, 0]]) == [[1, 0]]


def test_lattice_equality_and_membership():
    a = ResonanceLattice([[1, 1], [1, -1]])
    b = ResonanceLattice([[2, 0], [1, -1]])
    assert a == b and hash(a) == hash(b)
    assert a.covolume == pytest.approx(2.0)
    assert not a.is_saturated and saturation_index(a.basis) == 2
    assert a.contains((3, 1)) and not a.contains((1, 0))
    R = ResonanceLattice([[1, 2]])
    assert R.contains((-2, -4)) and not R.contains((1, 1))
    assert R.covolume == pytest.approx(math.sqrt(5))


def test_trivial_and_full():
    T = ResonanceLattice.trivial(3)
    assert T.n == 0 and T.covolume == 1.0 and T.contains((0, 0, 0)) and not T.contains((1, 0, 0))
    Z = ResonanceLattice.full(2)
    assert Z.n == 2 and Z.contains((5, -7)) and Z.covolume == pytest.approx(1.0)


def test_generating_sets_collapse_to_their_lattice():
    R = ResonanceLattice([[1, 2], [2, 4]])
    assert R.n == 1 and R == ResonanceLattice([[-1, -2]])
    assert ResonanceLattice([[2, 0], [3, 0]]) == ResonanceLattice([[1, 0]], d=2)
    with pytest.raises(ValueError):
        ResonanceLattice([[1, 2]], d=3)


def test_projection_norm():
    R = ResonanceLattice([[1, 1]], d=2)
    v = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, -1.0]])
    assert np.allclose(R.projection_norm(v), [1 / math.sqrt(2), math.sqrt(2), 0.0])


def test_enumeration_examples():
    assert [tuple(R.basis[0]) for R in enumerate_lattices(1, 1.0, 2)] == [(0, 1), (1, 0)] or \
        {tuple(R.basis[0]) for R in enumerate_lattices(1, 1.0, 2)} == {(1, 0), (0, 1)}
    assert len(enumerate_lattices(2, 1.0, 2)) == 1
    one = enumerate_lattices(1, math.sqrt(2), 2)
    assert {tuple(R.basis[0]) for R in one} == {(1, 0), (0, 1), (1, 1), (1, -1)}
    # the index-2 lattice spanned by (1,1),(1,-1) is not saturated and is dropped
    assert enumerate_lattices(2, math.sqrt(2), 2) == [ResonanceLattice.full(2)]
    assert len(enumerate_lattices(2, math.sqrt(2), 2, saturated=False)) == 2


def test_enumeration_is_deduplicated_and_bounded():
    lats = enumerate_lattices(2, math.sqrt(5), 3)
    assert len(set(lats)) == len(lats)
    assert all(R.is_saturated and R.max_basis_norm <= math.sqrt(5) * (1 + 1e-9) for R in lats)


def test_boundary_inclusive():
    assert (2, 1) in bounded_vectors(2, math.sqrt(5))
    assert (2, 1) not in bounded_vectors(2, math.sqrt(5) - 1e-6)


def test_enumeration_cap():
    with pytest.raises(EnumerationCapError):
        enumerate_lattices(2, 4.0, 3, cap=10)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=3, max_size=3).filter(any),
       st.lists(st.integers(-4, 4), min_size=3, max_size=3).filter(any))
def test_lll_preserves_lattice(u, v):
    B = np.array([u, v])
    if np.linalg.matrix_rank(B) < 2:
        return
    L = lll_reduce(B)
    assert hermite_normal_form(L) == hermite_normal_form(B)
    assert np.max(np.linalg.norm(L, axis=1)) <= np.max(np.linalg.norm(B, axis=1)) + 1e-12
