import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pinswitch import matlin
from pinswitch.instances import SLOW_C, SLOW_L

import oracles

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def test_symmetric_part_closed_form():
    np.testing.assert_array_equal(matlin.symmetric_part([[0, 2], [0, 0]]), [[0, 1], [1, 0]])


def test_symmetric_part_rejects_non_square():
    with pytest.raises(matlin.DimensionError):
        matlin.symmetric_part(np.zeros((2, 3)))


@given(hnp.arrays(float, (4, 4), elements=finite))
def test_symmetric_part_idempotent(A):
    S = matlin.symmetric_part(A)
    np.testing.assert_array_equal(matlin.symmetric_part(S), S)
    np.testing.assert_array_equal(S, S.T)


def test_symmetric_input_is_fixed():
    S = np.array([[1.0, 2, 3], [2, 5, 6], [3, 6, 9]])
    np.testing.assert_array_equal(matlin.symmetric_part(S), S)


def test_kron_small_cases():
    B = np.array([[1.0, 2], [3, 4]])
    np.testing.assert_array_equal(matlin.kron(np.eye(1), B), B)
    np.testing.assert_array_equal(matlin.kron(np.diag([1.0, 2]), np.eye(2)), np.diag([1.0, 1, 2, 2]))
    np.testing.assert_array_equal(matlin.kron(np.eye(5), np.eye(3)), np.eye(15))


@given(
    hnp.arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 4)), elements=finite),
    hnp.arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 4)), elements=finite),
    st.data(),
)
def test_kron_entry_spot_check(A, B, data):
    K = matlin.kron(A, B)
    assert K.shape == (A.shape[0] * B.shape[0], A.shape[1] * B.shape[1])
    r = data.draw(st.integers(0, K.shape[0] - 1))
    c = data.draw(st.integers(0, K.shape[1] - 1))
    assert K[r, c] == oracles.kron_entry(A, B, r, c)


def test_sym_eig_extremes_simple():
    assert matlin.sym_eig_extremes(np.diag([-3.0, 5.0])) == (-3.0, 5.0)
    lo, hi = matlin.sym_eig_extremes([[0.0, 1.0], [1.0, 0.0]])
    assert lo == pytest.approx(-1.0, abs=1e-14) and hi == pytest.approx(1.0, abs=1e-14)


def test_sym_eig_rejects_nan():
    with pytest.raises(matlin.NumericError):
        matlin.sym_eig_extremes(np.array([[np.nan, 0], [0, 1.0]]))


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(matlin.DimensionError):
        matlin.sym_eig_extremes(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=1000)
@given(st.sampled_from([2, 3]), st.data())
def test_sym_eig_against_closed_form(n, data):
    A = data.draw(hnp.arrays(float, (n, n), elements=st.floats(-10, 10, allow_nan=False)))
    S = 0.5 * (A + A.T)
    lo, hi = matlin.sym_eig_extremes(S)
    ref = oracles.closed_form_eig_2x2(S) if n == 2 else oracles.closed_form_eig_3x3(S)
    # the trigonometric 3x3 formula loses accuracy near repeated roots
    tol = 1e-10 if n == 2 else 1e-7
    assert lo == pytest.approx(ref[0], abs=tol * max(1, np.abs(S).max()))
    assert hi == pytest.approx(ref[1], abs=tol * max(1, np.abs(S).max()))


@pytest.mark.parametrize("i", range(5))
def test_slow_instance_spectra_against_charpoly(i):
    A = np.eye(5) + 10 * SLOW_L[i] - 10 * SLOW_C[i]
    S = matlin.symmetric_part(A)
    hi = matlin.sym_eig_extremes(S)[1]
    assert hi == pytest.approx(oracles.sym_lambda_max_charpoly(S), abs=1e-8)
    assert hi <= -0.75


def test_symmetric_part_of_weighted_instance():
    S = matlin.symmetric_part(np.eye(5) @ (np.eye(5) + 10 * SLOW_L[0] - 10 * SLOW_C[0]))
    np.testing.assert_array_equal(S, S.T)
    assert matlin.sym_eig_extremes(S)[1] <= -0.75


def test_perron_two_node_closed_form():
    a, b = 2.0, 3.0
    p = matlin.perron_left_vector([[-a, a], [b, -b]])
    np.testing.assert_allclose(p, [b / (a + b), a / (a + b)], atol=1e-15)


def test_perron_symmetric_uniform():
    L = np.array([[-2.0, 1, 1], [1, -1, 0], [1, 0, -1]])
    np.testing.assert_allclose(matlin.perron_left_vector(L), np.full(3, 1 / 3), atol=1e-15)


@pytest.mark.parametrize("i", [0, 2, 3, 4])
def test_perron_residual_on_instance(i):
    L = SLOW_L[i]
    p = matlin.perron_left_vector(L)
    assert np.all(p > 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(p @ L)) <= 1e-9 * np.abs(L).max()


def test_perron_rejects_reducible():
    L = np.zeros((4, 4))
    L[:2, :2] = [[-1, 1], [1, -1]]
    L[2:, 2:] = [[-1, 1], [1, -1]]
    with pytest.raises(matlin.ConnectivityError):
        matlin.perron_left_vector(L)


def test_perron_power_fallback_agrees():
    p = matlin._perron_power(SLOW_L[0])
    np.testing.assert_allclose(p, matlin.perron_left_vector(SLOW_L[0]), atol=1e-12)


@pytest.mark.parametrize("i", range(5))
def test_strong_connectivity_matches_scc_oracle(i):
    assert matlin.is_strongly_connected(SLOW_L[i]) == oracles.scc_connected(SLOW_L[i])


def test_slow_instance_second_topology_is_reducible():
    # node 3 of the second topology has no outgoing influence
    assert not matlin.is_strongly_connected(SLOW_L[1])
    assert all(matlin.is_strongly_connected(SLOW_L[i]) for i in (0, 2, 3, 4))


def test_strong_connectivity_trivial_cases():
    assert matlin.is_strongly_connected(np.zeros((1, 1)))
    L = np.zeros((4, 4))
    L[:2, :2] = [[-1, 1], [1, -1]]
    L[2:, 2:] = [[-1, 1], [1, -1]]
    assert not matlin.is_strongly_connected(L)


@given(hnp.arrays(float, (5, 5), elements=st.floats(0, 3)))
def test_connectivity_random_against_networkx(W):
    L = matlin.rebalance_diagonal(np.where(W > 1.5, W, 0.0))
    assert matlin.is_strongly_connected(L) == oracles.scc_connected(L)


def test_maxabs_is_entrywise():
    assert matlin.maxabs([[1.0, -7.0], [3.0, 2.0]]) == 7.0
