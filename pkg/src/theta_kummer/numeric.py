"""Small dense linear algebra, scalar Newton iteration and difference stencils.

Everything here works on plain numpy arrays; matrices never exceed 64 rows.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import (
    DegenerateSystem,
    DerivativeVanished,
    DimensionMismatch,
    NoConvergence,
    NotPositiveDefinite,
)

SYMMETRY_TOL = 1e-12
RANK_TOL = 1e-14


def as_cmatrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {A.shape}")
    return A


def as_cpoint(z, dim: int | None = None) -> np.ndarray:
    """Coerce ``z`` to a 1-d complex vector, checking its length if ``dim`` is given."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1:
        raise DimensionMismatch(f"point must be a vector, got shape {z.shape}")
    if dim is not None and z.shape[0] != dim:
        raise DimensionMismatch(f"point has dimension {z.shape[0]}, expected {dim}")
    return z


def cholesky_spd(M) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == M`` for real symmetric positive-definite ``M``.

    Raises NotPositiveDefinite on the first non-positive pivot.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(np.abs(M).max(), 1e-300)
    if np.abs(M - M.T).max() > SYMMETRY_TOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    L = np.zeros_like(M)
    for j in range(n):
        pivot = M[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            raise NotPositiveDefinite(f"pivot {j} is {pivot:.3e}")
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def singular_values(A) -> np.ndarray:
    """Singular values of ``A`` in nonincreasing order."""
    A = as_cmatrix(A)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def lstsq(A, b) -> tuple[np.ndarray, float]:
    """Least-squares solution of ``A x = b`` and the relative residual ``|Ax-b|/|b|``.

    The system is declared degenerate when the smallest singular value is below
    ``1e-14 * sigma_1`` (numerically dependent columns).
    """
    A = as_cmatrix(A)
    b = np.asarray(b, dtype=complex)
    rows, cols = A.shape
    if rows < cols:
        raise ValueError(f"underdetermined system {rows}x{cols}")
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[-1] < RANK_TOL * s[0]:
        raise DegenerateSystem(f"singular values {s}")
    x = Vh.conj().T @ ((U.conj().T @ b) / s)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return x, 0.0
    return x, float(np.linalg.norm(A @ x - b) / nb)


def newton_scalar(
    f: Callable[[complex], tuple[complex, complex]],
    t0: complex,
    tol: float,
    max_iter: int = 50,
) -> complex:
    """Plain complex Newton iteration.  ``f`` returns ``(value, derivative)``.

    Stops as soon as ``|f(t)| < tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t = complex(t0)
    for _ in range(max_iter + 1):
        val, der = f(t)
        if abs(val) < tol:
            return t
        if abs(der) < 1e-300:
            raise DerivativeVanished(f"|f'| = {abs(der):.3e} at t = {t}")
        t = t - val / der
    raise NoConvergence(f"|f| = {abs(val):.3e} after {max_iter} iterations")


def central_difference(f: Callable[[float], complex], h: float, order: int = 1) -> complex:
    """Fourth-order accurate central difference of ``f`` at 0 (first or second derivative)."""
    if order == 1:
        return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
    if order == 2:
        return (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)
    raise ValueError("order must be 1 or 2")


def contour_coefficients(
    f: Callable[[complex], complex],
    center: complex,
    radius: float,
    orders,
    n: int = 32,
) -> dict[int, complex]:
    """Laurent coefficients of ``f`` about ``center`` by the trapezoid rule on a circle.

    Exponentially accurate when ``f`` is analytic in an annulus around the circle
    with no other singularity inside it.
    """
    theta = 2 * np.pi * np.arange(n) / n
    w = radius * np.exp(1j * theta)
    vals = np.array([f(center + wk) for wk in w])
    return {k: complex(np.mean(vals * w ** (-k))) for k in orders}
