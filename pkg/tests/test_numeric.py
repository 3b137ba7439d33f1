import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from theta_kummer.errors import DegenerateSystem, DimensionMismatch, NoConvergence, NotPositiveDefinite
from theta_kummer.numeric import (
    as_cpoint,
    central_difference,
    cholesky_spd,
    contour_coefficients,
    lstsq,
    newton_scalar,
    singular_values,
)


def test_cholesky_known():
    L = cholesky_spd([[4.0, 2.0], [2.0, 3.0]])
    assert np.allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-15)


@pytest.mark.parametrize("M", [[[1.0, 2.0], [2.0, 1.0]], [[0.0, 0.0], [0.0, 1.0]], [[1.0, 0.5], [0.4, 1.0]]])
def test_cholesky_rejects(M):
    with pytest.raises(NotPositiveDefinite):
        cholesky_spd(M)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_cholesky_reconstructs(n, seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(n, n))
    M = A @ A.T + n * np.eye(n)
    L = cholesky_spd(M)
    assert np.allclose(L, np.tril(L))
    assert np.abs(L @ L.T - M).max() < 1e-12 * np.abs(M).max()


def test_singular_values_match_gram_eigenvalues(rng):
    A = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    s = singular_values(A)
    ev = np.sort(np.linalg.eigvalsh(A.conj().T @ A))[::-1]
    assert np.allclose(s, np.sqrt(ev), rtol=1e-12)
    assert np.all(np.diff(s) <= 0)


def test_singular_values_unitary_invariance(rng):
    A = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    Q, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    assert np.allclose(singular_values(Q @ A), singular_values(A), rtol=1e-12)


def test_lstsq_exact_and_optimal(rng):
    A = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    x0 = np.array([1 + 2j, -0.5j])
    x, res = lstsq(A, A @ x0)
    assert np.allclose(x, x0, atol=1e-13) and res < 1e-14

    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    x, res = lstsq(A, b)
    # normal equations hold at the optimum
    assert np.abs(A.conj().T @ (A @ x - b)).max() < 1e-12
    for _ in range(5):
        y = x + 1e-3 * (rng.normal(size=2) + 1j * rng.normal(size=2))
        assert np.linalg.norm(A @ y - b) >= np.linalg.norm(A @ x - b)
    assert res == pytest.approx(np.linalg.norm(A @ x - b) / np.linalg.norm(b))


def test_lstsq_zero_rhs_and_degenerate():
    A = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(DegenerateSystem):
        lstsq(A, [1.0, 0.0, 0.0])
    _, res = lstsq(np.eye(3)[:, :2], np.zeros(3))
    assert res == 0.0


def test_newton_sqrt2():
    t = newton_scalar(lambda t: (t * t - 2, 2 * t), 1.0, 1e-14)
    assert abs(t - np.sqrt(2)) < 1e-14


def test_newton_no_convergence():
    with pytest.raises(NoConvergence):
        newton_scalar(lambda t: (t * t + 1, 2 * t), 0.5, 1e-14, max_iter=5)


def test_difference_and_contour():
    f = lambda x: np.exp(1j * x)  # noqa: E731
    assert abs(central_difference(f, 1e-2) - 1j) < 1e-8
    assert abs(central_difference(f, 1e-2, 2) + 1) < 1e-7
    c = contour_coefficients(lambda x: np.exp(x) / x, 0.0, 0.5, (-1, 0, 1))
    assert abs(c[-1] - 1) < 1e-14 and abs(c[0] - 1) < 1e-14 and abs(c[1] - 0.5) < 1e-14


def test_as_cpoint_dimension():
    with pytest.raises(DimensionMismatch):
        as_cpoint([1, 2], 3)
    assert as_cpoint(1.5, 1).dtype == complex
