from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnrank.exceptions import SearchTooLargeError
from nnrank.supermodular import (
    canonical_pi,
    canonical_tuples,
    check_pi,
    facet_comparison_count,
    facet_count_binary,
    find_pi,
    four_function_check,
    identity_pi,
    induced_pi,
    is_pi_supermodular_facets,
    is_pi_supermodular_full,
    n_cells,
    pi_join,
    pi_meet,
    rank2_matrix_pi,
    reverse_pi,
    toric_cells,
)
from nnrank.tensor import flatten, outer

from .conftest import PARITY, rank2_tensor

EX = np.array([9, 5, 5, 3, 5, 3, 3, 2]).reshape(2, 2, 2)
ID3 = ((1, 2), (1, 2), (1, 2))


def test_meet_join():
    pi = ((1, 2), (1, 2), (1, 2))
    assert pi_meet((1, 2, 1), (2, 1, 1), pi) == (1, 1, 1)
    assert pi_join((1, 2, 1), (2, 1, 1), pi) == (2, 2, 1)
    assert pi_meet((2, 1, 2), (2, 1, 2), pi) == (2, 1, 2)
    swap = ((2, 1, 3),)
    assert pi_meet((1,), (2,), swap) == (2,)
    assert pi_join((1,), (2,), swap) == (1,)


def test_check_pi_rejects_non_permutations():
    with pytest.raises(ValueError):
        check_pi(((1, 1),), (2,))
    with pytest.raises(ValueError):
        check_pi(((1, 2),), (3,))


def test_full_check_examples():
    assert is_pi_supermodular_full(np.ones((2, 3, 2)), ((2, 1), (3, 1, 2), (1, 2)))
    assert is_pi_supermodular_full(EX, ID3)
    cert = is_pi_supermodular_full(PARITY, ID3)
    assert not cert
    i, j, k, l = cert.witness
    p = lambda m: PARITY[tuple(x - 1 for x in m)]  # noqa: E731
    assert p(i) * p(j) > p(k) * p(l)
    assert cert.to_dict()["verdict"] == "fail"


def test_facet_check_examples():
    cert = is_pi_supermodular_facets(EX, ID3)
    assert cert and cert.comparisons == 6
    assert is_pi_supermodular_facets(np.ones((3, 3)), ((1, 2, 3), (1, 2, 3)))
    assert not is_pi_supermodular_facets(np.array([[1, 2], [3, 1]]), ((1, 2), (1, 2)))


def test_facet_counts():
    assert [facet_count_binary(n) for n in (3, 4, 5)] == [6, 24, 80]
    for n in range(3, 9):
        assert facet_comparison_count((2,) * n) == n * (n - 1) * 2 ** (n - 3)


def test_cell_counts():
    assert n_cells((3, 3, 3)) == 108
    assert n_cells((2, 2, 2)) == 4
    tuples = list(canonical_tuples((3, 2, 2)))
    assert len(tuples) == n_cells((3, 2, 2)) == 12
    assert all(canonical_pi(pi) == pi for pi in tuples)
    with pytest.raises(SearchTooLargeError):
        list(canonical_tuples((5, 5, 5), limit=100))


def test_reverse_pi_is_the_same_cell():
    rng = np.random.default_rng(1)
    P, _, _ = rank2_tensor(rng, (3, 2, 3))
    pi = find_pi(P)
    assert is_pi_supermodular_full(P, reverse_pi(pi))


def test_find_pi_examples():
    P = outer([np.array([1, 2]), np.array([3, 1]), np.array([1, 1])])
    assert find_pi(P) == ID3
    assert find_pi(EX) == ID3
    assert find_pi(PARITY) is None


def test_toric_cells_examples():
    assert len(toric_cells(np.ones((3, 3, 3), dtype=int))) == 108
    assert toric_cells(PARITY) == []
    assert toric_cells(EX) == [ID3]


def test_toric_cells_parallel_is_deterministic():
    rng = np.random.default_rng(3)
    P, _, _ = rank2_tensor(rng, (3, 3, 2), exact=True)
    assert toric_cells(P) == toric_cells(P, n_jobs=2)


def test_find_pi_exact_and_float_agree():
    rng = np.random.default_rng(4)
    for _ in range(20):
        P, _, _ = rank2_tensor(rng, (3, 2, 2), exact=True)
        assert find_pi(P) == find_pi(P.astype(float))


def test_four_function_check():
    # C = {p_12k}, C' = {p_21k}: 8 * 8 <= 14 * 5
    C = [(1, 2, 1), (1, 2, 2)]
    C2 = [(2, 1, 1), (2, 1, 2)]
    assert four_function_check(EX, ID3, C, C2)
    assert four_function_check(EX, ID3, [(1, 1, 1)], [(2, 2, 2)])
    every = list(product((1, 2), repeat=3))
    assert four_function_check(EX, ID3, every, every)
    with pytest.raises(ValueError):
        four_function_check(PARITY, ID3, C, C2)


def test_induced_pi_on_identity():
    pi = ((1, 2, 3), (1, 2), (1, 2))
    assert induced_pi(pi, [[1], [2, 3]]) == ((1, 2, 3), (1, 2, 3, 4))


def test_rank2_matrix_pi_makes_flattenings_supermodular():
    # The lexicographically induced order can fail on a supermodular tensor's
    # flattening; an angular order of the rank-2 flattening always exists.
    rng = np.random.default_rng(6)
    for _ in range(50):
        P, _, _ = rank2_tensor(rng, (2, 3, 2))
        for part in ([[1], [2, 3]], [[1, 2], [3]], [[1, 3], [2]]):
            F = flatten(P, part)
            pi = rank2_matrix_pi(F)
            assert pi is not None and is_pi_supermodular_full(F, pi)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=2, max_size=4).map(tuple), st.integers(0, 2**32 - 1))
def test_facets_agree_with_full(shape, seed):
    rng = np.random.default_rng(seed)
    P = np.array([Fraction(int(x)) for x in rng.integers(1, 6, int(np.prod(shape)))], dtype=object).reshape(shape)
    if seed % 2:
        P, _, _ = rank2_tensor(rng, shape, exact=True)
    pi = tuple(tuple(int(x) + 1 for x in rng.permutation(d)) for d in shape)
    assert bool(is_pi_supermodular_full(P, pi)) == bool(is_pi_supermodular_facets(P, pi))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=2, max_size=3).map(tuple), st.integers(0, 2**32 - 1))
def test_rank2_samples_are_supermodular(shape, seed):
    P, _, _ = rank2_tensor(np.random.default_rng(seed), shape, exact=True, positive=False)
    pi = find_pi(P)
    assert pi is not None and pi in toric_cells(P)
    assert identity_pi(shape) == tuple(tuple(range(1, d + 1)) for d in shape)
