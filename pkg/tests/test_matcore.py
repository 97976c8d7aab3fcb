import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ptreg.matcore import (BlockSpec, frobenius_mse, is_psd, matrix_unit, partial_trace,
                           sym_eig)

from .conftest import gram


def partial_trace_loop(M, q, m):
    out = np.zeros((q, q))
    for i in range(q):
        for j in range(q):
            out[i, j] = sum(M[i * m + k, j * m + k] for k in range(m))
    return out


def test_partial_trace_identity():
    np.testing.assert_array_equal(partial_trace(np.eye(6), BlockSpec(2, 3)), 3 * np.eye(2))


def test_partial_trace_q1_is_trace():
    np.testing.assert_array_equal(partial_trace([[1, 2], [3, 4]], BlockSpec(1, 2)), [[5.0]])


def test_partial_trace_hand_example():
    M = np.array([[1, 0, 2, 0], [0, 1, 0, 2], [3, 0, 4, 0], [0, 3, 0, 4]], dtype=float)
    np.testing.assert_array_equal(partial_trace(M, BlockSpec(2, 2)), [[2, 4], [6, 8]])


def test_partial_trace_dimension_error():
    with pytest.raises(ValueError, match="expects side 6.*got side 5"):
        partial_trace(np.eye(5), BlockSpec(2, 3))


@given(q=st.integers(1, 4), m=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_partial_trace_matches_loop_and_properties(q, m, seed):
    rng = np.random.default_rng(seed)
    M, N = rng.standard_normal((2, q * m, q * m))
    a, b = rng.standard_normal(2)
    spec = BlockSpec(q, m)
    np.testing.assert_allclose(partial_trace(M, spec), partial_trace_loop(M, q, m), atol=1e-12)
    np.testing.assert_allclose(partial_trace(a * M + b * N, spec),
                               a * partial_trace(M, spec) + b * partial_trace(N, spec), atol=1e-12)
    assert abs(np.trace(partial_trace(M, spec)) - np.trace(M)) <= 1e-12 * max(1, np.abs(M).sum())
    P = M @ M.T
    assert is_psd(partial_trace(P, spec), 1e-10)


def test_partial_trace_q1_exact(rng):
    M = rng.standard_normal((5, 5))
    assert partial_trace(M, BlockSpec(1, 5))[0, 0] == np.trace(M)


def test_matrix_units():
    np.testing.assert_array_equal(matrix_unit(2, 0, 0), [[1, 0], [0, 0]])
    np.testing.assert_array_equal(matrix_unit(2, 0, 1), [[0, 1], [0, 0]])
    np.testing.assert_array_equal(sum(matrix_unit(3, i, i) for i in range(3)), np.eye(3))
    with pytest.raises(IndexError):
        matrix_unit(2, 2, 0)


def test_sym_eig_diag():
    res = sym_eig(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(res.eigenvalues, [3, 1])
    np.testing.assert_allclose(np.abs(res.eigenvectors), np.eye(2))


def test_sym_eig_swap():
    res = sym_eig([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(res.eigenvalues, [1, -1], atol=1e-15)
    s = 1 / np.sqrt(2)
    v0, v1 = res.eigenvectors[:, 0], res.eigenvectors[:, 1]
    assert abs(abs(v0 @ [s, s]) - 1) < 1e-12
    assert abs(abs(v1 @ [s, -s]) - 1) < 1e-12


@given(arrays(np.float64, (8, 8), elements=st.floats(-10, 10)))
def test_sym_eig_invariants(A):
    S = (A + A.T) / 2
    res = sym_eig(S)
    V, lam = res.eigenvectors, res.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    assert np.max(np.abs(V.T @ V - np.eye(8))) <= 1e-10
    norm = np.linalg.norm(S)
    if norm > 0:
        assert np.linalg.norm(V @ np.diag(lam) @ V.T - S) <= 1e-9 * norm


def test_sym_eig_deterministic_and_symmetrizes(rng):
    A = rng.standard_normal((6, 6))
    r1, r2 = sym_eig(A), sym_eig(A.copy())
    np.testing.assert_array_equal(r1.eigenvectors, r2.eigenvectors)
    np.testing.assert_allclose(r1.eigenvalues, sym_eig((A + A.T) / 2).eigenvalues)
    with pytest.raises(ValueError):
        sym_eig(np.ones((2, 3)))


def test_is_psd(rng):
    assert is_psd(np.eye(3), 0)
    assert not is_psd(np.diag([1, -0.5]), 1e-8)
    assert is_psd(gram(rng, 5, 3), 1e-10)
    with pytest.raises(ValueError):
        is_psd(np.ones((2, 3)))


def test_frobenius_mse():
    assert frobenius_mse(np.eye(2), np.eye(2)) == 0
    assert frobenius_mse(np.eye(2), np.zeros((2, 2))) == 2
    assert frobenius_mse([[1, 2], [3, 4]], [[0, 2], [3, 0]]) == 17
    with pytest.raises(ValueError):
        frobenius_mse(np.eye(2), np.eye(3))
