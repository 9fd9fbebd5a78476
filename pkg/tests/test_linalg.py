import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssalg.linalg import (
    LinAlgError,
    Matrix,
    Subspace,
    complement,
    image,
    kernel,
    kernel_basis,
    preimage,
    rank,
    rref,
    solve,
    split_surjection,
)
from ssalg.scalar import QQ

entries = st.integers(min_value=-6, max_value=6)


def mat(rows):
    return Matrix(QQ, rows)


def random_matrix(draw_rows, draw_cols):
    return st.lists(
        st.lists(entries, min_size=draw_cols, max_size=draw_cols),
        min_size=draw_rows,
        max_size=draw_rows,
    ).map(mat)


def test_rref_identity():
    I = Matrix.identity(QQ, 2)
    R, piv = rref(I)
    assert R == I and piv == (0, 1)


def test_rref_zero():
    Z = Matrix.zero(QQ, 2, 2)
    R, piv = rref(Z)
    assert R == Z and piv == ()


def test_rref_rank_one():
    # hand elimination: [[1,2],[2,4]] -> [[1,2],[0,0]]
    R, piv = rref(mat([[1, 2], [2, 4]]))
    assert R == mat([[1, 2], [0, 0]])
    assert piv == (0,)


@given(st.integers(2, 4), st.integers(2, 4), st.data())
@settings(max_examples=40)
def test_rref_idempotent_and_rank_transpose(r, c, data):
    M = data.draw(random_matrix(r, c))
    R, piv = rref(M)
    R2, piv2 = rref(R)
    assert R2 == R and piv2 == piv
    assert rank(M) == rank(M.transpose())
    assert list(piv) == sorted(piv)


def test_split_surjection_identity():
    I = Matrix.identity(QQ, 3)
    assert split_surjection(I) == I


def test_split_surjection_pivot_rule():
    # [1 0] and [1 1] both section through the first coordinate
    assert split_surjection(mat([[1, 0]])) == mat([[1], [0]])
    assert split_surjection(mat([[1, 1]])) == mat([[1], [0]])


def test_split_surjection_requires_full_row_rank():
    with pytest.raises(LinAlgError):
        split_surjection(mat([[1, 2], [2, 4]]))


@given(st.integers(1, 3), st.integers(1, 4), st.data())
@settings(max_examples=40)
def test_split_surjection_is_right_inverse(r, c, data):
    M = data.draw(random_matrix(r, c))
    if rank(M) != r:
        return
    S = split_surjection(M)
    assert M @ S == Matrix.identity(QQ, r)


def test_complement_edge_cases():
    T = Subspace.full(QQ, 3)
    assert complement(T, T).dim == 0
    assert complement(Subspace.zero(QQ, 3), T) == T


def test_complement_greedy_rule():
    # S = span(e1+e2) inside Q^2: the pivot rule forces C = span(e2)
    S = Subspace(QQ, 2, [[1, 1]])
    T = Subspace.full(QQ, 2)
    C = complement(S, T)
    assert C == Subspace(QQ, 2, [[0, 1]])


def test_complement_requires_containment():
    S = Subspace(QQ, 2, [[1, 0]])
    T = Subspace(QQ, 2, [[0, 1]])
    with pytest.raises(LinAlgError):
        complement(S, T)


def _random_subspace_pair(rng, ambient):
    T = Subspace(
        QQ,
        ambient,
        [[Fraction(rng.randint(-4, 4)) for _ in range(ambient)] for _ in range(rng.randint(0, ambient))],
    )
    if T.dim == 0:
        return Subspace.zero(QQ, ambient), T
    k = rng.randint(0, T.dim)
    combos = []
    for _ in range(k):
        v = [Fraction(0)] * ambient
        for row in T.basis:
            c = Fraction(rng.randint(-3, 3))
            v = [a + c * b for a, b in zip(v, row)]
        combos.append(v)
    return Subspace(QQ, ambient, combos), T


def test_complement_dimension_and_directness():
    rng = random.Random(7)
    for _ in range(60):
        S, T = _random_subspace_pair(rng, 5)
        C = complement(S, T)
        assert S.dim + C.dim == T.dim
        assert (S + C) == T
        assert S.intersect(C).dim == 0


def test_kernel_image_rank_nullity():
    M = mat([[1, 2, 3], [2, 4, 6]])
    assert rank(M) == 1
    K = kernel(M)
    assert K.dim == 2
    for v in kernel_basis(M):
        assert all(not x for x in M.apply(v))
    assert image(M).dim == 1


def test_solve_and_preimage():
    M = mat([[1, 1], [0, 1]])
    x = solve(M, [QQ.of(3), QQ.of(1)])
    assert M.apply(x) == (QQ.of(3), QQ.of(1))
    S = Subspace(QQ, 2, [[1, 0]])
    P = preimage(M, S)
    # M x in span(e1)  <=>  x2 = 0
    assert P == Subspace(QQ, 2, [[1, 0]])


def test_subspace_canonical_form_unique():
    A = Subspace(QQ, 3, [[1, 1, 0], [0, 1, 1]])
    B = Subspace(QQ, 3, [[1, 0, -1], [0, 2, 2]])
    assert A == B
    assert A.basis == B.basis
