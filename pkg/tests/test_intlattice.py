import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latentmult import intlattice as il
from latentmult import models
from latentmult.moveset import MoveSet

from conftest import CONTINGENCY_A, CONTINGENCY_LB, CONTINGENCY_MB, MTA_LB


def small_matrices(max_rows=5, max_cols=8, lo=-2, hi=2):
    return st.tuples(st.integers(1, max_rows), st.integers(1, max_cols)).flatmap(
        lambda s: arrays(np.int64, s, elements=st.integers(lo, hi))
    )


def is_row_hnf(H):
    last_pivot = -1
    zero_seen = False
    for i, row in enumerate(H):
        nz = np.flatnonzero(row)
        if nz.size == 0:
            zero_seen = True
            continue
        assert not zero_seen, "zero rows must come last"
        p = nz[0]
        assert p > last_pivot and row[p] > 0
        for k in range(i):
            assert 0 <= H[k, p] < row[p]
        last_pivot = p
    return True


def span_equal(B1, B2):
    B1, B2 = np.asarray(B1), np.asarray(B2)
    return all(il.lattice_member(B1, v) for v in B2) and all(il.lattice_member(B2, v) for v in B1)


class TestRank:
    def test_identity(self):
        assert il.rank(np.eye(3, dtype=int)) == 3

    def test_contingency(self):
        assert il.rank(CONTINGENCY_A) == 5

    def test_zero(self):
        assert il.rank(np.zeros((2, 4), dtype=int)) == 0

    def test_dependent_rows(self):
        assert il.rank([[1, 2, 3], [2, 4, 6], [1, 0, 1]]) == 2

    def test_overflow_is_reported(self):
        with pytest.raises(OverflowError):
            il.rank([[2**40, 1], [1, 2**40]])

    @given(small_matrices())
    def test_matches_numpy(self, A):
        assert il.rank(A) == np.linalg.matrix_rank(A.astype(float))


class TestHermiteNormalForm:
    def test_small_example(self):
        M = np.array([[2, 4], [1, 3]])
        H, U = il.hermite_normal_form(M)
        assert H.tolist() == [[1, 1], [0, 2]]
        assert (U @ M == H).all()
        assert abs(il.unimodular_det(U)) == 1

    def test_small_example_same_lattice_as_unreduced_form(self):
        # [[1,3],[0,2]] differs only by a multiple of the second row
        H, _ = il.hermite_normal_form([[2, 4], [1, 3]])
        assert span_equal(H, [[1, 3], [0, 2]])

    def test_identity(self):
        H, U = il.hermite_normal_form(np.eye(3, dtype=int))
        assert (H == np.eye(3)).all() and (U == np.eye(3)).all()

    def test_zero_row(self):
        H, U = il.hermite_normal_form([[0, 0]])
        assert H.tolist() == [[0, 0]] and U.tolist() == [[1]]

    @given(small_matrices())
    def test_invariants(self, M):
        H, U = il.hermite_normal_form(M)
        assert (U @ M == H).all()
        assert abs(il.unimodular_det(U)) == 1
        assert is_row_hnf(H)
        assert np.count_nonzero(np.any(H, axis=1)) == il.rank(M)

    @given(small_matrices())
    def test_deterministic(self, M):
        H1, U1 = il.hermite_normal_form(M)
        H2, U2 = il.hermite_normal_form(M.copy())
        assert (H1 == H2).all() and (U1 == U2).all()

    @given(small_matrices(4, 4))
    def test_unique_for_full_rank_square(self, M):
        # row HNF is unique for nonsingular input, so any unimodular remix agrees
        if M.shape[0] != M.shape[1] or M.shape[0] < 2 or il.rank(M) < M.shape[0]:
            return
        T = np.eye(M.shape[0], dtype=np.int64)
        T[0] += T[-1]
        H1, _ = il.hermite_normal_form(M)
        H2, _ = il.hermite_normal_form(T @ M)
        assert (H1 == H2).all()


def test_unimodular_det_values():
    assert il.unimodular_det([[2, 1], [1, 1]]) == 1
    assert il.unimodular_det([[0, 1], [1, 0]]) == -1
    assert il.unimodular_det([[1, 2], [2, 4]]) == 0
    with pytest.raises(ValueError):
        il.unimodular_det([[1, 2, 3], [4, 5, 6]])


class TestKernelBasis:
    def test_single_row(self):
        B = il.kernel_lattice_basis([[1, 1]])
        assert B.same_moves([[1, -1]])
        assert B.provenance == "lattice"

    def test_contingency(self):
        B = il.kernel_lattice_basis(CONTINGENCY_A)
        assert len(B) == 4
        for v in CONTINGENCY_LB:
            assert il.lattice_member(B, v)
        assert span_equal(B.moves, CONTINGENCY_LB)

    def test_contingency_markov_moves_are_members(self):
        B = il.kernel_lattice_basis(CONTINGENCY_A)
        m = il.lattice_member(B, CONTINGENCY_MB[4])
        assert m and (m.coefficients @ B.moves == CONTINGENCY_MB[4]).all()

    def test_mta_dimension(self):
        A = models.build_mta(2).A
        B = il.kernel_lattice_basis(A)
        assert len(B) == 6
        assert span_equal(B.moves, MTA_LB)

    def test_full_rank_square_has_trivial_kernel(self):
        assert len(il.kernel_lattice_basis([[2, 1], [1, 1]])) == 0

    def test_non_primitive_kernel(self):
        # kernel of [2, 4] is generated by (2, -1), not (4, -2)
        B = il.kernel_lattice_basis([[2, 4]])
        assert B.same_moves([[2, -1]])

    @given(small_matrices())
    def test_cardinality_and_kernel(self, A):
        B = il.kernel_lattice_basis(A)
        assert len(B) == A.shape[1] - il.rank(A)
        if len(B):
            assert not np.any(A @ B.moves.T)
            assert il.rank(B.moves) == len(B)


class TestMembership:
    def test_member(self):
        m = il.lattice_member(np.array([[1, -1]]), [3, -3])
        assert m.member and m.coefficients.tolist() == [3]

    def test_outside_span(self):
        m = il.lattice_member(np.array([[1, -1]]), [1, 1])
        assert not m and m.coefficients is None

    def test_fractional_coefficients(self):
        assert not il.lattice_member(np.array([[2, 0], [0, 2]]), [2, 3])

    def test_dependent_basis_rejected(self):
        with pytest.raises(ValueError):
            il.lattice_member(np.array([[1, 1], [2, 2]]), [1, 1])

    def test_empty_basis(self):
        ok, _ = il.lattice_coefficients(np.zeros((0, 3), dtype=int), [[0, 0, 0], [1, 0, 0]])
        assert ok.tolist() == [True, False]

    def test_large_values_use_exact_path(self):
        B = np.array([[1, -1, 0], [0, 1, -1]])
        v = [2**45, 0, -(2**45)]
        m = il.lattice_member(B, v)
        assert m and m.coefficients.tolist() == [2**45, 2**45]

    @given(small_matrices(), st.lists(st.integers(-5, 5), min_size=8, max_size=8))
    def test_round_trip(self, A, c):
        B = il.kernel_lattice_basis(A)
        if len(B) == 0:
            return
        c = np.array(c[: len(B)])
        m = il.lattice_member(B, c @ B.moves)
        assert m and (m.coefficients == c).all()

    def test_vectorised_agrees_with_single(self):
        B = il.kernel_lattice_basis(CONTINGENCY_A)
        V = np.array(list(itertools.product([-1, 0, 1], repeat=9))[::97])
        ok, coeffs = il.lattice_coefficients(B, V)
        for v, flag, c in zip(V, ok, coeffs):
            single = il.lattice_member(B, v)
            assert bool(single) == flag
            if flag:
                assert (single.coefficients == c).all()


def test_kernel_contains():
    assert il.kernel_contains(CONTINGENCY_A, CONTINGENCY_LB[0])
    assert not il.kernel_contains(CONTINGENCY_A, [1] + [0] * 8)


def test_moveset_type():
    assert isinstance(il.kernel_lattice_basis([[1, 1, 1]]), MoveSet)
