import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from theta_kummer import PeriodMatrix, sample_siegel, theta_char_eval, theta_eval, truncation_radius
from theta_kummer.errors import ArgumentOverflow, DimensionMismatch, InvalidPeriodMatrix
from theta_kummer.numeric import central_difference
from theta_kummer.theta import characteristics, enumerate_ellipsoid, theta_gradient, theta_jet


def brute_theta(B, z, N=8):
    g = len(z)
    grid = np.array(np.meshgrid(*[np.arange(-N, N + 1)] * g, indexing="ij")).reshape(g, -1).T
    return np.sum(np.exp(2j * np.pi * grid @ z + 1j * np.pi * np.einsum("ki,ij,kj->k", grid, B, grid)))


def test_genus_one_constant(pm1):
    ref = math.fsum(math.exp(-math.pi * n * n) for n in range(-50, 51))
    v = theta_eval(pm1, [0.0])
    assert abs(v.value - ref) < 1e-12
    assert v.tail_bound <= 1e-12


def test_second_order_constant(pm1):
    ref = math.fsum(math.exp(-2 * math.pi * n * n) for n in range(-50, 51))
    assert abs(theta_char_eval(pm1, (0,), [0.0]).value - ref) < 1e-12


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("g", [1, 2, 3])
def test_brute_force_agreement(g, seed):
    pm = sample_siegel(g, seed, 0.3)
    r = np.random.default_rng(seed)
    z = r.uniform(-0.5, 0.5, g) + pm.B @ r.uniform(-0.5, 0.5, g)
    ref = brute_theta(pm.B, z, 8 if g < 3 else 6)
    assert abs(theta_eval(pm, z).value - ref) < 1e-12 * max(1, abs(ref))


def test_parity_and_periodicity(pm2, rng):
    z = rng.normal(size=2) + 1j * rng.normal(size=2) * 0.3
    v = theta_eval(pm2, z).value
    assert abs(theta_eval(pm2, -z).value - v) < 1e-12 * abs(v)
    n = np.array([1, -2])
    assert abs(theta_eval(pm2, z + n).value - v) < 1e-12 * abs(v)


def test_quasi_periodicity(pm2, rng):
    z = rng.uniform(-0.5, 0.5, 2) + 0.2j
    m = np.array([1, 0])
    lhs = theta_eval(pm2, z + pm2.B @ m).value
    rhs = np.exp(-1j * np.pi * m @ pm2.B @ m - 2j * np.pi * m @ z) * theta_eval(pm2, z).value
    assert abs(lhs - rhs) < 1e-11 * abs(rhs)


def test_derivatives_match_finite_differences(pm3, rng):
    for _ in range(5):
        z = rng.uniform(-0.5, 0.5, 3) + pm3.B @ rng.uniform(-0.3, 0.3, 3)
        U, V = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
        f = lambda s: theta_eval(pm3, z + s * U).value  # noqa: E731
        dU, dUU = theta_eval(pm3, z, [U]).value, theta_eval(pm3, z, [U, U]).value
        assert abs(central_difference(f, 1e-3) - dU) < 1e-6 * max(1, abs(dU))
        assert abs(central_difference(f, 1e-3, 2) - dUU) < 1e-6 * max(1, abs(dUU))
        fv = lambda s: theta_eval(pm3, z + s * V, [U]).value  # noqa: E731
        dUV = theta_eval(pm3, z, [U, V]).value
        assert abs(central_difference(fv, 1e-3) - dUV) < 1e-6 * max(1, abs(dUV))


def test_jet_is_multilinear(pm2, rng):
    z = rng.normal(size=2) * 0.3 + 0.1j
    E = np.eye(2)
    U = np.array([1 + 1j, -0.5])
    grad = theta_gradient(pm2, z)
    assert abs(theta_eval(pm2, z, [U]).value - U @ grad) < 1e-12 * np.linalg.norm(grad)
    a, b = theta_jet(pm2, z, [(E[0], E[1]), (E[1], E[0])])
    assert abs(a.value - b.value) < 1e-13 * max(1, abs(a.value))


def test_second_order_sum_rule(pm3):
    # theta(0)^2 = sum_eps Theta[eps](0)^2 (addition formula at z = Z = 0)
    zero = np.zeros(3)
    lhs = theta_eval(pm3, zero).value ** 2
    rhs = sum(theta_char_eval(pm3, e, zero).value ** 2 for e in characteristics(3))
    assert abs(lhs - rhs) < 1e-11 * abs(lhs)


def test_tail_bound_certifies_truncation(pm2, rng):
    z = rng.uniform(-0.5, 0.5, 2) + pm2.B @ rng.uniform(-0.5, 0.5, 2)
    v = theta_eval(pm2, z, tol=1e-6)
    w = theta_eval(pm2, z, tol=1e-6, radius=2 * v.radius)
    assert abs(v.value - w.value) <= v.tail_bound
    assert v.tail_bound <= 1e-6 * max(1, v.scale)


def test_truncation_radius_monotone(pm2):
    radii = [truncation_radius(pm2, tol) for tol in (1e-4, 1e-8, 1e-12)]
    assert radii == sorted(radii)
    assert truncation_radius(pm2, 1e-8, order=2) >= radii[1]
    assert truncation_radius(pm2, 1e-8, z_bound=1.0) >= radii[1]
    R = truncation_radius(pm2, 1e-10)
    a = theta_eval(pm2, [0.1, 0.2], radius=R).value
    b = theta_eval(pm2, [0.1, 0.2], radius=R + 2).value
    assert abs(a - b) < 1e-10


def test_ellipsoid_enumeration_is_complete():
    L = np.linalg.cholesky(np.array([[2.0, 0.3], [0.3, 1.0]]))
    pts = enumerate_ellipsoid(L, 2.5)
    grid = np.array(np.meshgrid(np.arange(-6, 7), np.arange(-6, 7))).reshape(2, -1).T
    inside = {tuple(k) for k in grid if np.sum((L.T @ k) ** 2) <= 2.5 ** 2}
    assert {tuple(k) for k in pts} == inside


@pytest.mark.parametrize(
    "B",
    [[[1j, 0], [1, 1j]], [[-1j]], np.eye(7) * 1j, [[1j, np.nan], [np.nan, 1j]], [[1, 0], [0, 1j]]],
)
def test_invalid_period_matrices(B):
    with pytest.raises(InvalidPeriodMatrix):
        PeriodMatrix(B)


def test_dimension_checks(pm2):
    with pytest.raises(DimensionMismatch):
        theta_eval(pm2, [0.1])
    with pytest.raises(DimensionMismatch):
        theta_char_eval(pm2, (0, 2), [0, 0])
    with pytest.raises(ValueError):
        theta_eval(pm2, [0, 0], [[1, 0]] * 4)


def test_overflow_is_reported(pm1):
    with pytest.raises(ArgumentOverflow):
        theta_eval(pm1, [40j])


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-0.4, 0.4), st.floats(0.6, 2.0), st.floats(-3, 3), st.floats(-0.6, 0.6))
def test_genus_one_properties(tau_re, x, tau_im, re, im):
    pm = PeriodMatrix([[tau_re + 1j * tau_im]])
    z = complex(re, im * tau_im)
    v = theta_eval(pm, [z])
    assert abs(theta_eval(pm, [-z]).value - v.value) <= 1e-11 * max(1, v.scale)
    assert abs(theta_eval(pm, [z + 1]).value - v.value) <= 1e-11 * max(1, v.scale)


def test_reduce(pm2, rng):
    z = rng.normal(size=2) * 3 + 1j * rng.normal(size=2) * 3
    zr, n, m = pm2.reduce(z)
    assert np.allclose(zr + n + pm2.B @ m, z, atol=1e-12)
    w = np.linalg.solve(pm2.B.imag, zr.imag)
    assert np.all(np.abs(w) <= 0.5 + 1e-12)
    assert np.all(np.abs(zr.real - pm2.B.real @ w) <= 0.5 + 1e-12) or np.all(np.abs(zr.real) <= 0.5 + 1e-12)
