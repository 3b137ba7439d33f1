"""Points on the theta divisor and the flowed theta function.

A ``FlowFrame`` fixes directions ``U, V``, a shift ``P``, a base point ``Z`` and a
constant ``c``; it defines

    tau(x, y, t) = theta(U x + V y + P t + Z),
    u = 2 d_x d_y log tau = 2 (tau tau_xy - tau_x tau_y) / tau^2,
    psi = tau(x, y, t) / tau(x, y, t - 1),

and the residual of ``(c + u - T) psi = 0`` with ``T`` the unit shift in ``t``.
``u`` is always formed from the rational expression; no complex logarithm is taken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentOverflow, DerivativeVanished, NoConvergence, PoleAtArgument, SingularPoint
from .numeric import as_cpoint, contour_coefficients, newton_scalar
from .theta import PeriodMatrix, default_tol, theta_eval, theta_gradient, theta_jet

SMOOTH_TOL = 1e-8
POLE_TOL = 1e-12


@dataclass(frozen=True)
class DivisorPoint:
    z: np.ndarray
    theta_abs: float
    grad: np.ndarray


def _as_z(pm: PeriodMatrix, z) -> np.ndarray:
    return as_cpoint(z.z if isinstance(z, DivisorPoint) else z, pm.g)


def find_divisor_point(pm: PeriodMatrix, z0, direction, tol: float | None = None, max_iter: int = 50) -> DivisorPoint:
    """Newton iteration for theta = 0 along the line ``z0 + t * direction``.

    ``tol`` is relative to the Gaussian envelope at the root (see ``theta``).
    """
    z0 = as_cpoint(z0, pm.g)
    d = as_cpoint(direction, pm.g)
    tol = default_tol(pm.g) if tol is None else tol

    def f(t):
        v, dv = theta_jet(pm, z0 + t * d, [(), (d,)], tol)
        s = max(1.0, v.scale)
        return v.value / s, dv.value / s

    try:
        t = newton_scalar(f, 0.0, tol, max_iter)
    except ArgumentOverflow as exc:
        raise NoConvergence(f"Newton iterate left the representable range: {exc}") from exc
    z = z0 + t * d
    v = theta_eval(pm, z, (), tol)
    grad = theta_gradient(pm, z, tol)
    if np.linalg.norm(grad) <= SMOOTH_TOL * max(1.0, v.scale):
        raise SingularPoint(f"|grad theta| = {np.linalg.norm(grad):.2e} at {z}")
    return DivisorPoint(z, abs(v.value), grad)


def reduce_divisor_point(pm: PeriodMatrix, dp: DivisorPoint, tol: float | None = None) -> DivisorPoint:
    """Translate into the fundamental cell and re-polish (the quasi-periodicity factor
    changes the size of theta, so the translated point is re-certified)."""
    zr, _, _ = pm.reduce(dp.z)
    return find_divisor_point(pm, zr, np.conj(dp.grad), tol)


def tangent_direction(pm: PeriodMatrix, dp: DivisorPoint) -> np.ndarray:
    """Unit tangent to the theta divisor of a genus-2 ppav: the kernel of (grad, .)."""
    if pm.g != 2:
        raise ValueError("tangent_direction is defined for genus 2")
    g1, g2 = dp.grad
    T = np.array([-g2, g1], dtype=complex)
    n = np.linalg.norm(T)
    if n <= SMOOTH_TOL:
        raise SingularPoint("divisor point is singular")
    return T / n


@dataclass(frozen=True)
class FlowFrame:
    pm: PeriodMatrix
    U: np.ndarray
    V: np.ndarray
    P: np.ndarray
    Z: np.ndarray
    c: complex = 0j

    def __post_init__(self):
        g = self.pm.g
        for name in ("U", "V", "P", "Z"):
            object.__setattr__(self, name, as_cpoint(getattr(self, name), g))
        if np.linalg.norm(self.U) == 0 or np.linalg.norm(self.V) == 0:
            raise ValueError("U and V must be nonzero")
        object.__setattr__(self, "c", complex(self.c))

    def point(self, x, y, t) -> np.ndarray:
        return self.U * x + self.V * y + self.P * t + self.Z

    def swapped(self) -> "FlowFrame":
        return FlowFrame(self.pm, self.V, self.U, self.P, self.Z, self.c)


def _nonzero(val, scale, what):
    if abs(val) < POLE_TOL * max(1.0, scale):
        raise PoleAtArgument(f"{what} vanishes ({abs(val):.2e})")


def tau_u_psi(frame: FlowFrame, x, y, t, tol: float | None = None) -> tuple[complex, complex, complex]:
    pm = frame.pm
    z = frame.point(x, y, t)
    tau, tx, ty, txy = theta_jet(pm, z, [(), (frame.U,), (frame.V,), (frame.U, frame.V)], tol)
    _nonzero(tau.value, tau.scale, "tau(x, y, t)")
    prev = theta_eval(pm, z - frame.P, (), tol)
    _nonzero(prev.value, prev.scale, "tau(x, y, t-1)")
    T = tau.value
    u = 2 * (T * txy.value - tx.value * ty.value) / T ** 2
    return T, u, T / prev.value


def upsi_residual(frame: FlowFrame, x, y, t, tol: float | None = None) -> float:
    """|(c + u) psi - T psi| normalised by the sizes of its three terms."""
    tau, u, psi = tau_u_psi(frame, x, y, t, tol)
    nxt = theta_eval(frame.pm, frame.point(x, y, t) + frame.P, (), tol).value
    psi_next = nxt / tau
    num = abs((frame.c + u) * psi - psi_next)
    return float(num / (abs(frame.c * psi) + abs(u * psi) + abs(psi_next) + 1e-300))


def upsi_cleared(frame: FlowFrame, x, y, t, tol: float | None = None) -> complex:
    """c tau^2 + 2 (tau tau_xy - tau_x tau_y) - tau(t+1) tau(t-1): the pole-free form
    of the same equation, evaluated without forming u or psi."""
    pm = frame.pm
    z = frame.point(x, y, t)
    tau, tx, ty, txy = (v.value for v in theta_jet(pm, z, [(), (frame.U,), (frame.V,), (frame.U, frame.V)], tol))
    nxt = theta_eval(pm, z + frame.P, (), tol).value
    prev = theta_eval(pm, z - frame.P, (), tol).value
    return frame.c * tau ** 2 + 2 * (tau * txy - tx * ty) - nxt * prev


def _divisor_factors(pm, z, U, P, tol):
    f, fU, fUU = theta_jet(pm, z, [(), (U,), (U, U)], tol)
    g, gU = theta_jet(pm, z - P, [(), (U,)], tol)
    h, hU = theta_jet(pm, z + P, [(), (U,)], tol)
    _nonzero(g.value, g.scale, "theta(z - P)")
    _nonzero(h.value, h.scale, "theta(z + P)")
    return f, fU.value, fUU.value, g.value, gU.value, h.value, hU.value


def divisor_identity_residual(pm: PeriodMatrix, dp, U, P, tol: float | None = None) -> float:
    """Relative defect of
    theta_UU(z) theta(z-P) theta(z+P) = theta_U(z) [theta_U(z-P) theta(z+P) + theta_U(z+P) theta(z-P)].

    ``dp`` may be a DivisorPoint or a bare point; off the divisor the identity
    generally fails and the residual is simply reported.
    """
    z = _as_z(pm, dp)
    U = as_cpoint(U, pm.g)
    P = as_cpoint(P, pm.g)
    _, fU, fUU, g, gU, h, hU = _divisor_factors(pm, z, U, P, tol)
    lhs = fUU * g * h
    t1 = fU * gU * h
    t2 = fU * hU * g
    scale = abs(lhs) + abs(t1 + t2) + max(abs(lhs), abs(t1), abs(t2))
    return float(abs(lhs - t1 - t2) / (scale + 1e-300))


@dataclass(frozen=True)
class TaylorQuad:
    """Coefficients at a divisor point: ``a = psi'``, ``b = psi''``, ``A`` the residue of
    T psi and ``B`` defined by ``-B/A^2 = (1/T psi)''``.  ``b`` and ``B`` are second
    derivatives, i.e. twice the quadratic Taylor coefficients; the relation
    ``A b = a B`` is insensitive to that common factor."""

    a: complex
    b: complex
    A: complex
    B: complex
    eta_y: complex

    def relation_defect(self) -> float:
        lhs, rhs = self.A * self.b, self.a * self.B
        return float(abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300))


def taylor_quad(frame: FlowFrame, dp, tol: float | None = None) -> TaylorQuad:
    pm = frame.pm
    z = _as_z(pm, dp)
    f, fU, fUU, g, gU, h, hU = _divisor_factors(pm, z, frame.U, frame.P, tol)
    if abs(fU) < POLE_TOL * max(1.0, f.scale):
        raise DerivativeVanished("theta_U vanishes: U is tangent to the divisor")
    a = fU / g
    b = fUU / g - 2 * gU * fU / g ** 2
    A = h / fU
    B = -(A ** 2) * (fUU / h - 2 * hU * fU / h ** 2)
    return TaylorQuad(complex(a), complex(b), complex(A), complex(B), complex(A / (2 * a)))


def taylor_quad_numeric(frame: FlowFrame, dp, radius: float | None = None, n: int = 32, tol: float | None = None) -> TaylorQuad:
    """The same coefficients from theta values alone, by contour sampling of
    psi and T psi around the divisor point along the x direction."""
    pm = frame.pm
    z = _as_z(pm, dp)
    U, P = frame.U, frame.P
    if radius is None:
        radius = 0.02 / np.linalg.norm(U)

    def th(w):
        return theta_eval(pm, w, (), tol).value

    psi = contour_coefficients(lambda x: th(z + U * x) / th(z + U * x - P), 0.0, radius, (1, 2), n)
    tpsi = contour_coefficients(lambda x: th(z + U * x + P) / th(z + U * x), 0.0, radius, (-1, 0), n)
    a, b = psi[1], 2 * psi[2]
    A, B = tpsi[-1], 2 * tpsi[0]
    return TaylorQuad(a, b, A, B, A / (2 * a))


def implicit_eta_y(frame: FlowFrame, dp, tol: float | None = None) -> complex:
    """d eta / dy for the local root x = eta(y) of tau: -theta_V / theta_U."""
    z = _as_z(frame.pm, dp)
    fU, fV = theta_jet(frame.pm, z, [(frame.U,), (frame.V,)], tol)
    return complex(-fV.value / fU.value)
