"""The Kummer map and the linear-dependence conditions built on it.

``K(z)`` is the vector of second-order theta functions ``Theta[eps](z)``,
components ordered lexicographically in ``eps``.  Residuals are relative and
never thresholded here; callers decide what "holds" means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSystem
from .numeric import as_cpoint, lstsq, singular_values
from .theta import PeriodMatrix, characteristics, default_tol, theta_char_jet, theta_jet


@dataclass(frozen=True)
class KummerVector:
    g: int
    comps: np.ndarray
    tail_bound: float

    def __len__(self) -> int:
        return len(self.comps)


@dataclass(frozen=True)
class Gamma00Instance:
    """Candidate solution of K(P) = c K(0) + d_U d_V K(0)."""

    pm: PeriodMatrix
    P: np.ndarray
    U: np.ndarray
    V: np.ndarray
    c: complex

    def __post_init__(self):
        g = self.pm.g
        object.__setattr__(self, "P", as_cpoint(self.P, g))
        object.__setattr__(self, "U", as_cpoint(self.U, g))
        object.__setattr__(self, "V", as_cpoint(self.V, g))
        object.__setattr__(self, "c", complex(self.c))


@dataclass(frozen=True)
class FitCoefficients:
    c: complex
    b: complex
    rel_residual: float


@dataclass(frozen=True)
class CoefficientMatrix:
    c: complex
    cij: np.ndarray

    def __post_init__(self):
        cij = np.asarray(self.cij, dtype=complex)
        if cij.ndim != 2 or cij.shape[0] != cij.shape[1]:
            raise ValueError("cij must be a square matrix")
        if np.abs(cij - cij.T).max() > 1e-12 * max(np.abs(cij).max(), 1e-300):
            raise ValueError("cij must be symmetric")
        object.__setattr__(self, "cij", cij)
        object.__setattr__(self, "c", complex(self.c))

    @classmethod
    def rank_two(cls, c, U, V) -> "CoefficientMatrix":
        U = np.asarray(U, dtype=complex)
        V = np.asarray(V, dtype=complex)
        return cls(c, (np.outer(U, V) + np.outer(V, U)) / 2)


def _kummer(pm: PeriodMatrix, z, dirs, tol) -> KummerVector:
    z = as_cpoint(z, pm.g)
    tol = default_tol(pm.g) if tol is None else tol
    vals = [theta_char_jet(pm, e, z, [dirs], tol)[0] for e in characteristics(pm.g)]
    return KummerVector(pm.g, np.array([v.value for v in vals]), max(v.tail_bound for v in vals))


def kummer_map(pm: PeriodMatrix, z, tol: float | None = None) -> KummerVector:
    return _kummer(pm, z, (), tol)


def kummer_deriv(pm: PeriodMatrix, z, U, tol: float | None = None) -> KummerVector:
    """Componentwise d_U K(z)."""
    return _kummer(pm, z, (as_cpoint(U, pm.g),), tol)


def kummer_dderiv(pm: PeriodMatrix, z, U, V, tol: float | None = None) -> KummerVector:
    """Componentwise d_U d_V K(z)."""
    return _kummer(pm, z, (as_cpoint(U, pm.g), as_cpoint(V, pm.g)), tol)


def kummer_hessian(pm: PeriodMatrix, z, tol: float | None = None) -> np.ndarray:
    """Array ``H[e, i, j] = d_i d_j Theta[e](z)`` over the coordinate directions."""
    z = as_cpoint(z, pm.g)
    tol = default_tol(pm.g) if tol is None else tol
    g = pm.g
    E = np.eye(g)
    pairs = [(i, j) for i in range(g) for j in range(i, g)]
    H = np.zeros((2 ** g, g, g), dtype=complex)
    for k, e in enumerate(characteristics(g)):
        vals = theta_char_jet(pm, e, z, [(E[i], E[j]) for i, j in pairs], tol)
        for (i, j), v in zip(pairs, vals):
            H[k, i, j] = H[k, j, i] = v.value
    return H


def bilinear_residual(pm: PeriodMatrix, z, Z, tol: float | None = None) -> float:
    """Relative defect of theta(z+Z) theta(z-Z) = K(z) . K(Z)."""
    z = as_cpoint(z, pm.g)
    Z = as_cpoint(Z, pm.g)
    tol = default_tol(pm.g) if tol is None else tol
    lhs = theta_jet(pm, z + Z, [()], tol)[0].value * theta_jet(pm, z - Z, [()], tol)[0].value
    rhs = kummer_map(pm, z, tol).comps @ kummer_map(pm, Z, tol).comps
    return float(abs(lhs - rhs) / (1 + abs(lhs)))


def gamma00_residual(inst: Gamma00Instance, tol: float | None = None) -> float:
    """|K(P) - c K(0) - d_U d_V K(0)| / |K(P)|."""
    pm = inst.pm
    zero = np.zeros(pm.g, dtype=complex)
    KP = kummer_map(pm, inst.P, tol).comps
    rhs = inst.c * kummer_map(pm, zero, tol).comps + kummer_dderiv(pm, zero, inst.U, inst.V, tol).comps
    return float(np.linalg.norm(KP - rhs) / np.linalg.norm(KP))


def gamma00_fit(pm: PeriodMatrix, P, U, V, tol: float | None = None) -> FitCoefficients:
    """Best (c, b) in K(P) ~ c K(0) + b d_U d_V K(0), in the least-squares sense."""
    zero = np.zeros(pm.g, dtype=complex)
    KP = kummer_map(pm, P, tol).comps
    if np.linalg.norm(KP) == 0.0:
        raise DegenerateSystem("K(P) vanishes")
    A = np.column_stack([kummer_map(pm, zero, tol).comps, kummer_dderiv(pm, zero, U, V, tol).comps])
    x, res = lstsq(A, KP)
    return FitCoefficients(complex(x[0]), complex(x[1]), res)


def gamma00_residual_full(pm: PeriodMatrix, P, coeffs: CoefficientMatrix, tol: float | None = None) -> float:
    """|K(P) - c K(0) - sum_ij c_ij d_i d_j K(0)| / |K(P)| for a general symmetric c_ij."""
    if coeffs.cij.shape != (pm.g, pm.g):
        raise ValueError("cij has the wrong size")
    zero = np.zeros(pm.g, dtype=complex)
    KP = kummer_map(pm, P, tol).comps
    H = kummer_hessian(pm, zero, tol)
    rhs = coeffs.c * kummer_map(pm, zero, tol).comps + np.einsum("eij,ij->e", H, coeffs.cij)
    return float(np.linalg.norm(KP - rhs) / np.linalg.norm(KP))


def _sigma_ratio(cols) -> float:
    s = singular_values(np.column_stack(cols))
    if s[0] < 1e-300:
        raise DegenerateSystem("all Kummer vectors vanish")
    return float(s[-1] / s[0])


def trisecant_arguments(p, p1, p2, p3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p, p1, p2, p3 = (np.asarray(v, dtype=complex) for v in (p, p1, p2, p3))
    return ((p + p1 - p2 - p3) / 2, (p + p2 - p3 - p1) / 2, (p + p3 - p1 - p2) / 2)


def trisecant_residual(pm: PeriodMatrix, p, p1, p2, p3, tol: float | None = None) -> float:
    """sigma_3 / sigma_1 of the three Kummer vectors at (p + p_i - p_j - p_k)/2."""
    args = trisecant_arguments(*(as_cpoint(v, pm.g) for v in (p, p1, p2, p3)))
    return _sigma_ratio([kummer_map(pm, a, tol).comps for a in args])


def semidegenerate_vectors(pm: PeriodMatrix, p, p1, q, U, tol: float | None = None) -> list[np.ndarray]:
    p, p1, q = (as_cpoint(v, pm.g) for v in (p, p1, q))
    half = (p - p1) / 2
    return [
        kummer_map(pm, (p + p1 - 2 * q) / 2, tol).comps,
        kummer_map(pm, half, tol).comps,
        kummer_deriv(pm, half, U, tol).comps,
    ]


def semidegenerate_residual(pm: PeriodMatrix, p, p1, q, U, tol: float | None = None) -> float:
    """sigma_3 / sigma_1 of K((p+p1-2q)/2), K((p-p1)/2), d_U K((p-p1)/2).

    This is the limit of the trisecant configuration as p2, p3 -> q along U.
    """
    if np.linalg.norm(np.asarray(U, dtype=complex)) == 0:
        raise ValueError("U must be nonzero")
    return _sigma_ratio(semidegenerate_vectors(pm, p, p1, q, U, tol))


def trisecant_degeneration(pm: PeriodMatrix, p, p1, q, w, steps=(1e-1, 1e-2, 1e-3, 1e-4), tol: float | None = None) -> dict:
    """Follow p2 = q + s w, p3 = q - s w towards q.

    For s != 0 the three trisecant vectors span the same space as
    ``K(A1), (K(A2) + K(A3))/2, (K(A2) - K(A3))/(2s)``; that basis stays well
    conditioned and converges to the semidegenerate triple as s -> 0 with an
    O(s^2) error, so the last two steps are Richardson-extrapolated.
    """
    p, p1, q, w = (as_cpoint(v, pm.g) for v in (p, p1, q, w))
    profile = []
    for s in steps:
        A1, A2, A3 = trisecant_arguments(p, p1, q + s * w, q - s * w)
        K1, K2, K3 = (kummer_map(pm, a, tol).comps for a in (A1, A2, A3))
        profile.append(
            {
                "s": s,
                "raw": _sigma_ratio([K1, K2, K3]),
                "scaled": _sigma_ratio([K1, (K2 + K3) / 2, (K2 - K3) / (2 * s)]),
            }
        )
    (s1, r1), (s2, r2) = [(e["s"], e["scaled"]) for e in profile[-2:]]
    extrapolated = (s1 ** 2 * r2 - s2 ** 2 * r1) / (s1 ** 2 - s2 ** 2)
    return {
        "profile": profile,
        "extrapolated": float(extrapolated),
        "semidegenerate": semidegenerate_residual(pm, p, p1, q, w, tol),
    }
