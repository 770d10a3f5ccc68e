from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnrank.exceptions import NegativeEntryError, NotInModelError
from nnrank.rank2 import (
    DoubleSliceDependent,
    SliceRankOne,
    classify_boundary,
    compress_to_binary,
    decide,
    decompose,
    decompose_222,
    hyperdeterminant,
    in_bipyramid_region,
    jukes_cantor_cell,
    jukes_cantor_det,
    jukes_cantor_factors,
    jukes_cantor_tensor,
    mu,
    nonneg_matrix_rank2,
    u12_remainder,
    u_quantities,
)
from nnrank.supermodular import is_pi_supermodular_full
from nnrank.tensor import Rank2Decomposition, flattening_rank, outer, tensor_from_rank2
from nnrank.validation import as_exact

from .conftest import PARITY, rank2_tensor

F = Fraction
EX = as_exact(np.array([9, 5, 5, 3, 5, 3, 3, 2]).reshape(2, 2, 2))
DIAG = as_exact(np.array([1, 0, 0, 0, 0, 0, 0, 1]).reshape(2, 2, 2))


def vec(*xs):
    return [F(x) for x in xs]


def assert_unit_vectors(D):
    for v in list(D.a) + list(D.b):
        assert all(x >= 0 for x in v)
        assert abs(sum(v) - 1) < 1e-12


# ---------------------------------------------------------------- 2x2x2 invariants


def test_u_quantities_examples():
    U = u_quantities(np.ones((2, 2, 2), dtype=int))
    assert all(x == 0 for x in (U.u12, U.u13, U.u23, U.u12_1, U.u23_2))
    U = u_quantities(DIAG)
    assert (U.u12, U.u13, U.u23) == (1, 1, 1)
    assert (U.u12_1, U.u12_2, U.u13_1, U.u23_2) == (0, 0, 0, 0)
    U = u_quantities(EX)
    assert (U.u12, U.u13, U.u23) == (6, 6, 6)
    assert (U.u12_1, U.u12_2, U.u13_1, U.u13_2, U.u23_1, U.u23_2) == (2, 1, 2, 1, 2, 1)


def test_u12_decomposes_into_slices_and_remainder():
    rng = np.random.default_rng(0)
    for _ in range(50):
        P = as_exact(rng.integers(0, 10, (2, 2, 2)))
        U = u_quantities(P)
        assert U.u12 == U.u12_1 + U.u12_2 + u12_remainder(P)


def test_hyperdeterminant_and_mu_examples():
    assert hyperdeterminant(DIAG) == 1
    assert hyperdeterminant(EX) == 1
    assert hyperdeterminant(outer([np.array([1, 2]), np.array([3, 1]), np.array([2, 5])])) == 0
    assert mu(DIAG) == 0
    assert mu(np.ones((2, 2, 2), dtype=int)) == 0  # forced by p+++^2 Det = mu^2 + 4 U12 U13 U23
    assert mu(np.zeros((2, 2, 2), dtype=int)) == 0


# ---------------------------------------------------------------- decompositions


def test_decompose_222_examples():
    D = decompose_222(DIAG)
    assert D.s == D.t == 1
    assert all(list(a) == vec(1, 0) for a in D.a) and all(list(b) == vec(0, 1) for b in D.b)

    D = decompose_222(EX)
    assert (D.s, D.t) == (27, 8)
    assert all(list(a) == vec(F(2, 3), F(1, 3)) for a in D.a)
    assert all(list(b) == vec(F(1, 2), F(1, 2)) for b in D.b)
    assert D.meta["branch"] == "pencil"


def test_decompose_222_rank_one_flattening_branch():
    P = as_exact(np.einsum("i,jk->ijk", np.array([1, 1]), np.array([[1, 1], [1, 2]])))
    D = decompose_222(P)
    assert D.meta["branch"] == "rank-one-flattening"
    assert list(D.a[0]) == list(D.b[0]) == vec(F(1, 2), F(1, 2))
    assert np.all(tensor_from_rank2(D) == P)


def test_decompose_222_rejects_parity():
    with pytest.raises(NotInModelError):
        decompose_222(PARITY)


def test_matrix_rank2_examples():
    D = nonneg_matrix_rank2(np.eye(2, dtype=int))
    assert (D.s, D.t) == (1, 1)
    assert [list(v) for v in D.a] == [vec(1, 0), vec(1, 0)]
    assert [list(v) for v in D.b] == [vec(0, 1), vec(0, 1)]

    D = nonneg_matrix_rank2(np.outer([1, 2], [3, 1]))
    assert D.t == 0

    D = nonneg_matrix_rank2(np.array([[1, 1], [1, 2]]))
    assert (D.s, D.t) == (2, 3)
    assert [list(v) for v in D.a] == [vec(F(1, 2), F(1, 2)), vec(1, 0)]
    assert [list(v) for v in D.b] == [vec(F(1, 3), F(2, 3)), vec(0, 1)]


def test_compress_to_binary():
    a = [np.array([1, 0, 1]), np.array([1, 2]), np.array([2, 1])]
    b = [np.array([0, 1, 1]), np.array([1, 1]), np.array([1, 3])]
    P = as_exact(outer(a) + outer(b))
    comp = compress_to_binary(P)
    assert comp.factors[0].tolist() == [[1, 0, 1], [0, 1, 1]]
    assert comp.pivots[0] == (1, 2)
    assert np.all(comp.core == P[:2])
    assert np.all(comp.expand() == P)

    comp = compress_to_binary(EX)
    assert np.all(comp.core == EX)
    assert all(C.tolist() == [[1, 0], [0, 1]] for C in comp.factors)

    with pytest.raises(ValueError):
        compress_to_binary(outer([np.array([1, 2, 3]), np.array([1, 1]), np.array([1, 2])]))  # rank-1 axes


def test_decompose_zero_and_4way():
    D = decompose(np.zeros((2, 3, 2), dtype=int))
    assert D.s == D.t == 0
    assert [list(v) for v in D.a] == [vec(F(1, 2), F(1, 2)), vec(F(1, 3), F(1, 3), F(1, 3)), vec(F(1, 2), F(1, 2))]

    a, b = [np.array([F(2, 3), F(1, 3)])] * 4, [np.array([F(1, 2), F(1, 2)])] * 4
    P = tensor_from_rank2(Rank2Decomposition((2,) * 4, a, b, 1, 1))
    D = decompose(P)
    assert {(D.s, tuple(D.a[0])), (D.t, tuple(D.b[0]))} == {(1, tuple(a[0])), (1, tuple(b[0]))}
    assert np.all(tensor_from_rank2(D) == P)


def test_decompose_rejects_outside_model():
    with pytest.raises(NotInModelError) as err:
        decompose(PARITY)
    assert err.value.result.reason == "not-supermodular"
    with pytest.raises(NotInModelError):
        decompose(np.random.default_rng(0).uniform(size=(3, 3, 3)))


def test_irrational_roots_fall_back_to_float():
    P = as_exact(np.array([3, 1, 1, 1, 1, 1, 1, 2]).reshape(2, 2, 2))
    assert hyperdeterminant(P) == 17  # not a square, so the pencil roots are irrational
    D = decompose(P)
    assert D.mode == "float" and D.meta["exact_fallback"]
    assert np.max(np.abs(tensor_from_rank2(D) - np.asarray(P, dtype=float))) < 1e-12


def test_decide_examples():
    assert decide(outer([np.array([1, 2]), np.array([3, 1]), np.array([1, 1])]))
    r = decide(PARITY)
    assert not r and r.reason == "not-supermodular" and r.flattening_rank == 2
    assert r.certificate.witness is not None
    r = decide(np.random.default_rng(1).uniform(0.1, 1, (3, 3, 3)))
    assert not r and r.reason == "flattening-rank-exceeds-2" and r.partition is not None
    assert r.to_dict()["verdict"] == "not-in-model"
    assert decide(np.array([[1, 0, 1], [0, 1, 0], [1, 0, 1]]))
    assert not decide(np.eye(3))
    with pytest.raises(NegativeEntryError):
        decide(np.array([[1, -1], [0, 1]]))


def test_decide_agrees_with_decompose_on_model_and_non_model_samples():
    rng = np.random.default_rng(7)
    for k in range(30):
        shape = [(2, 2, 2), (3, 2, 2), (2, 3, 2, 2)][k % 3]
        P = rng.integers(0, 4, shape) if k % 2 else rank2_tensor(rng, shape, exact=True, positive=False)[0]
        res = decide(P)
        if res:
            D = decompose(P)
            err = np.max(np.abs(np.asarray(tensor_from_rank2(D) - as_exact(P), dtype=float)))
            assert err <= 1e-8 * max(1, float(np.max(P)))
        else:
            with pytest.raises(NotInModelError):
                decompose(P)


# ---------------------------------------------------------------- boundary


def test_classify_boundary_examples():
    a = [np.array([0.3, 0.7]), np.array([0.6, 0.4]), np.array([1.0, 0.0])]
    b = [np.array([0.8, 0.2]), np.array([0.1, 0.9]), np.array([0.0, 1.0])]
    assert classify_boundary(outer(a) + outer(b)) == [SliceRankOne(3, 1), SliceRankOne(3, 2)]
    assert classify_boundary(EX) == []
    a = [np.array([1.0, 2, 2]), np.array([1.0, 3]), np.array([2.0, 1])]
    b = [np.array([1.0, 2, 3]), np.array([2.0, 1]), np.array([1.0, 1])]
    P = outer(a) + outer(b)
    assert classify_boundary(P, include_double_slices=True) == [DoubleSliceDependent(1, 1, 2)]
    assert classify_boundary(P) == []
    assert DoubleSliceDependent(1, 1, 2).to_dict()["kind"] == "double_slice_dependent"


def test_classify_boundary_requires_model_membership():
    with pytest.raises(NotInModelError):
        classify_boundary(PARITY)


# ---------------------------------------------------------------- Jukes-Cantor slice


def test_jukes_cantor_examples():
    assert jukes_cantor_det(F(1, 2), 0, 0, 0) == F(1, 16)
    assert hyperdeterminant(jukes_cantor_tensor(F(1, 2), 0, 0, 0)) == F(1, 16)
    q = F(1, 8)
    assert jukes_cantor_det(q, q, q, q) == 0
    assert len(jukes_cantor_cell(q, q, q, q)) == 4
    assert len(jukes_cantor_cell(0.5, 0.0, 0.0, 0.0)) == 1
    f0, f1, f2, f3 = jukes_cantor_factors(F(1, 2), 0, 0, 0)
    assert f0 * f1 * f2 * f3 == F(1, 16)


def test_jukes_cantor_float_identity():
    rng = np.random.default_rng(2)
    for x, y, z, w in rng.dirichlet(np.ones(4), size=100) / 2:
        assert abs(hyperdeterminant(jukes_cantor_tensor(x, y, z, w)) - jukes_cantor_det(x, y, z, w)) < 1e-12


def test_toric_cells_lie_inside_bipyramid_regions():
    # containment holds; the converse does not (the bipyramids are convex hulls)
    rng = np.random.default_rng(3)
    for x, y, z, w in rng.dirichlet(np.ones(4), size=2000) / 2:
        if jukes_cantor_cell(x, y, z, w):
            assert in_bipyramid_region(x, y, z, w)


# ---------------------------------------------------------------- properties

shapes = st.sampled_from([(2, 2), (2, 2, 2), (3, 2, 2), (2, 3, 2), (3, 3, 2), (2, 2, 2, 2), (3, 2, 2, 2)])


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_exact_round_trip(shape, seed):
    P, _, _ = rank2_tensor(np.random.default_rng(seed), shape, exact=True, positive=False)
    assert decide(P)
    D = decompose(P)
    assert_unit_vectors(D)
    recon = tensor_from_rank2(D)
    if D.mode == "exact":
        assert np.all(recon == P)
    else:
        assert D.meta.get("exact_fallback")
        assert np.max(np.abs(np.asarray(recon - P, dtype=float))) <= 1e-8 * float(np.max(P))


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_float_round_trip(shape, seed):
    P, _, _ = rank2_tensor(np.random.default_rng(seed), shape)
    D = decompose(P)
    assert_unit_vectors(D)
    assert np.max(np.abs(tensor_from_rank2(D) - P)) <= 1e-8 * np.max(P)
    assert flattening_rank(P) <= 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sign_rule_on_binary_tensors(seed):
    P, a, b = rank2_tensor(np.random.default_rng(seed), (2, 2, 2), exact=True, positive=False)
    pi = tuple((1, 2) if a[r][0] * b[r][1] - a[r][1] * b[r][0] >= 0 else (2, 1) for r in range(3))
    assert is_pi_supermodular_full(P, pi)
