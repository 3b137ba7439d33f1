"""Riemann theta functions and second-order theta functions with certified truncation.

Both series are instances of one Gaussian lattice sum

    S(Q, w) = sum_{n in Z^g}  prod_j (a_j + (u_j, n)) * exp(2 pi i (w, n) + pi i (Q n, n))

with ``Q`` symmetric and ``Im Q`` positive definite; the polynomial prefactor
carries directional derivatives.  The theta function is ``S(B, z)``;
the second-order function with characteristic ``eps`` is

    Theta[eps](z) = exp(2 pi i (eps, z) + pi i (B eps, eps) / 2) * S(2B, 2z + B eps).

Before summation the argument is shifted by a lattice vector so that the
Gaussian is centred in the unit cube, and terms are enumerated inside an
ellipsoid of radius ``R``.  ``R`` is chosen from a rigorous bound on the
discarded terms (a packing argument against the shortest lattice vector,
reducing the tail to incomplete gamma moments).

Tolerances are relative to the Gaussian envelope ``max(1, E)``, where ``E``
bounds the magnitude of the largest term; for real arguments ``E <= 1`` and
``tol`` is an absolute bound.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .errors import ArgumentOverflow, DimensionMismatch, InvalidPeriodMatrix, NotPositiveDefinite, RadiusOverflow
from .numeric import as_cpoint, cholesky_spd

MAX_GENUS = 6
MIN_IM_EIGENVALUE = 1e-8
DEFAULT_MAX_RADIUS = 9.0
RADIUS_STEP = 0.02
MAX_LOG_ENVELOPE = 600.0
_BUCKET = 0.25


def default_tol(g: int) -> float:
    return 1e-12 if g <= 3 else 1e-10


def max_radius() -> float:
    env = os.environ.get("THETA_KUMMER_MAX_RADIUS")
    return float(env) if env else DEFAULT_MAX_RADIUS


@dataclass(frozen=True)
class ThetaValue:
    """A truncated lattice sum.  ``tail_bound`` is an absolute bound on the
    discarded terms and is at most ``tol * max(1, scale)``, where ``scale`` is the
    Gaussian envelope of the series at this argument."""

    value: complex
    tail_bound: float
    scale: float = 1.0
    radius: float = 0.0

    def __complex__(self) -> complex:
        return self.value


def enumerate_ellipsoid(L: np.ndarray, radius: float) -> np.ndarray:
    """All integer vectors ``k`` with ``|L^T k| <= radius``, as an (N, g) array.

    Rows are ordered by increasing norm, lexicographically within equal norms.
    A tiny slack admits boundary points; extra points are harmless.
    """
    g = L.shape[0]
    R = L.T
    r2 = radius * radius * (1 + 1e-12) + 1e-12
    pts = np.zeros((1, 0), dtype=np.int64)
    used = np.zeros(1)
    for i in range(g - 1, -1, -1):
        t = pts @ R[i, i + 1:] if pts.shape[1] else np.zeros(len(pts))
        budget = np.sqrt(np.maximum(r2 - used, 0.0))
        lo = np.ceil((-budget - t) / R[i, i] - 1e-9).astype(np.int64)
        hi = np.floor((budget - t) / R[i, i] + 1e-9).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        idx = np.repeat(np.arange(len(pts)), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        coord = lo[idx] + (np.arange(idx.size) - starts)
        part = R[i, i] * coord + t[idx]
        used = used[idx] + part * part
        pts = np.column_stack([coord, pts[idx]])
    keep = used <= r2
    pts, used = pts[keep], used[keep]
    order = np.lexsort(tuple(pts[:, j] for j in range(g - 1, -1, -1)) + (used,))
    return pts[order]


def _round_up(x: float) -> float:
    # 2^(1/16) geometric grid; rounding up keeps every derived bound valid
    if x <= 0.0:
        return 0.0
    return 2.0 ** (math.ceil(math.log2(x) * 16) / 16)


def _round_up_all(xs) -> tuple[float, ...]:
    return tuple(_round_up(float(x)) for x in xs)


def _round_down(x: float) -> float:
    return 2.0 ** (math.floor(math.log2(x) * 16) / 16)


class QuadraticForm:
    """Lattice data for one symmetric matrix ``Q``: Cholesky factor of ``Im Q``,
    shortest lattice vector, and a cache of enumerated ellipsoids."""

    def __init__(self, Q: np.ndarray):
        self.Q = Q
        self.g = Q.shape[0]
        self.Y = Q.imag.copy()
        self.L = cholesky_spd(self.Y)
        self.Yinv = np.linalg.inv(self.Y)
        lam = np.linalg.eigvalsh(self.Y)
        self.stretch = 1.0 / math.sqrt(lam[0])
        self.offset = 0.5 * float(np.sqrt(np.diag(self.Y)).sum())
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        cand = enumerate_ellipsoid(self.L, math.sqrt(float(np.diag(self.Y).min())))
        norms = np.linalg.norm(cand @ self.L, axis=1)
        self.rho = float(norms[norms > 0].min()) * (1 - 1e-12)

    def points(self, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """Integer points covering every ellipsoid of ``radius`` centred in the unit cube,
        with the quadratic phases ``pi i (Q k, k)``."""
        key = math.ceil((radius + self.offset) / _BUCKET) * _BUCKET
        hit = self._cache.get(key)
        if hit is None:
            K = enumerate_ellipsoid(self.L, key)
            quad = 1j * np.pi * np.einsum("ni,ij,nj->n", K, self.Q, K)
            hit = (K, quad)
            self._cache[key] = hit
        return hit

    def tail(self, radii, alphas, betas) -> np.ndarray:
        """Bound on the sum of |prod_j(alpha_j + beta_j r)| exp(-pi r^2) over lattice points
        farther than ``r`` from the centre, for each ``r`` in ``radii``."""
        g, rho = self.g, self.rho
        poly = np.array([1.0])
        for a, b in zip(alphas, betas):
            poly = np.convolve(poly, [a, b])
        for _ in range(g - 1):
            poly = np.convolve(poly, [rho / 2, 1.0])
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        r0 = radii - rho
        s = (np.arange(len(poly)) + 1) / 2
        moments = 0.5 * np.pi ** (-s) * gamma_fn(s) * gammaincc(s, np.pi * np.maximum(r0, 0)[:, None] ** 2)
        out = g * (2 / rho) ** g * (moments @ poly)
        # the packing bound needs the integrand decreasing beyond r0
        out[r0 < math.sqrt(len(alphas) / (2 * np.pi))] = np.inf
        return out

    def radius_for(self, target: float, alphas, betas) -> tuple[float, float]:
        return self._radius_cached(_round_down(target), _round_up_all(alphas), _round_up_all(betas), max_radius())

    def tail_at(self, radius: float, alphas, betas) -> float:
        """Cached, conservatively rounded version of ``tail`` at a single radius."""
        return self._tail_cached(radius, _round_up_all(alphas), _round_up_all(betas))

    @functools.lru_cache(maxsize=65536)
    def _tail_cached(self, radius, alphas, betas) -> float:
        return float(self.tail([radius], alphas, betas)[0])

    @functools.lru_cache(maxsize=65536)
    def _radius_cached(self, target, alphas, betas, cap) -> tuple[float, float]:
        r_min = self.rho + math.sqrt(len(alphas) / (2 * np.pi))
        if r_min > cap:
            raise RadiusOverflow(f"minimal admissible radius {r_min:.2f} exceeds cap {cap}")
        coarse = np.append(np.arange(r_min, cap, 0.25), cap)
        tails = self.tail(coarse, alphas, betas)
        ok = np.flatnonzero(tails <= target)
        if ok.size == 0:
            raise RadiusOverflow(f"tail bound {target:.1e} unreachable below radius cap {cap}")
        if ok[0] == 0:
            return float(coarse[0]), float(tails[0])
        fine = coarse[ok[0] - 1] + RADIUS_STEP * np.arange(1, 13)
        fine = np.append(fine[fine < coarse[ok[0]]], coarse[ok[0]])
        ftails = self.tail(fine, alphas, betas)
        j = int(np.flatnonzero(ftails <= target)[0])
        return float(fine[j]), float(ftails[j])


class PeriodMatrix:
    """A point ``B`` of the Siegel upper half space; immutable after construction."""

    def __init__(self, B):
        B = np.array(B, dtype=complex)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise InvalidPeriodMatrix(f"period matrix must be square, got shape {B.shape}")
        g = B.shape[0]
        if not 1 <= g <= MAX_GENUS:
            raise InvalidPeriodMatrix(f"genus {g} outside 1..{MAX_GENUS}")
        if not np.all(np.isfinite(B)):
            raise InvalidPeriodMatrix("period matrix has non-finite entries")
        if np.abs(B - B.T).max() > 1e-12 * max(np.abs(B).max(), 1e-300):
            raise InvalidPeriodMatrix("period matrix is not symmetric")
        B = (B + B.T) / 2
        try:
            self.chol_im = cholesky_spd(B.imag)
        except NotPositiveDefinite as exc:
            raise InvalidPeriodMatrix(f"Im B is not positive definite: {exc}") from exc
        if np.linalg.eigvalsh(B.imag)[0] < MIN_IM_EIGENVALUE:
            raise InvalidPeriodMatrix("Im B is nearly singular")
        B.setflags(write=False)
        self.B = B
        self.g = g
        self._forms = {1: QuadraticForm(B), 2: QuadraticForm(2 * B)}

    @classmethod
    def from_parts(cls, re, im) -> "PeriodMatrix":
        return cls(np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float))

    def form(self, factor: int) -> QuadraticForm:
        return self._forms[factor]

    def reduce(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Write ``z = z_red + n + B m`` with ``Y^{-1} Im z_red`` and ``Re z_red`` in [-1/2, 1/2).

        Returns ``(z_red, n, m)`` with integer ``n``, ``m``.
        """
        z = as_cpoint(z, self.g)
        m = np.floor(np.linalg.solve(self.B.imag, z.imag) + 0.5)
        zr = z - self.B @ m
        n = np.floor(zr.real + 0.5)
        return zr - n, n.astype(np.int64), m.astype(np.int64)

    def __repr__(self) -> str:
        return f"PeriodMatrix(g={self.g}, B={self.B.tolist()!r})"


def _lattice_sums(
    form: QuadraticForm,
    w: np.ndarray,
    log_pref: complex,
    specs: Sequence[tuple[Sequence[complex], Sequence[np.ndarray]]],
    tol: float,
    radius: float | None = None,
) -> list[ThetaValue]:
    """Evaluate ``exp(log_pref) * S(Q, w)`` for several polynomial prefactors at once.

    Each spec is ``(a_list, u_list)`` describing ``prod_j (a_j + (u_j, n))``.
    """
    c = -form.Yinv @ w.imag
    m0 = np.floor(c + 0.5)
    cr = c - m0
    wk = w + form.Q @ m0
    wk = wk - np.floor(wk.real + 0.5)
    log_total = log_pref + 2j * np.pi * (w @ m0) + 1j * np.pi * (m0 @ form.Q @ m0)
    log_env = log_total.real + math.pi * float(cr @ form.Y @ cr)
    if log_env > MAX_LOG_ENVELOPE:
        raise ArgumentOverflow(f"envelope exp({log_env:.1f}) exceeds double range")
    pref = np.exp(log_total)
    env = math.exp(log_env)
    target = tol * max(1.0, 1.0 / env) if env > 0 else tol
    ncr = float(np.linalg.norm(cr))

    prepared = []
    R_need = 0.0
    for a_list, u_list in specs:
        a_shift = [complex(a + u @ m0) for a, u in zip(a_list, u_list)]
        alphas = [abs(a) + np.linalg.norm(u) * ncr for a, u in zip(a_shift, u_list)]
        betas = [np.linalg.norm(u) * form.stretch for u in u_list]
        if radius is None:
            R, _ = form.radius_for(target, alphas, betas)
        else:
            R = float(radius)
        R_need = max(R_need, R)
        prepared.append((a_shift, u_list, alphas, betas))

    K, quad = form.points(R_need)
    terms = np.exp(2j * np.pi * (K @ wk) + quad)
    out = []
    for a_shift, u_list, alphas, betas in prepared:
        t = terms
        for a, u in zip(a_shift, u_list):
            t = t * (a + K @ u)
        tail = form.tail_at(R_need, alphas, betas) * env
        out.append(ThetaValue(complex(pref * t.sum()), float(tail), float(env), float(R_need)))
    return out


def _dirs(dirs, g: int) -> list[np.ndarray]:
    return [as_cpoint(U, g) for U in dirs]


def theta_jet(pm: PeriodMatrix, z, dir_specs, tol: float | None = None, radius: float | None = None):
    """theta and any number of directional derivatives at one point in a single pass.

    ``dir_specs`` is a sequence of direction lists, e.g. ``[(), (U,), (U, U)]``.
    """
    z = as_cpoint(z, pm.g)
    tol = default_tol(pm.g) if tol is None else tol
    specs = []
    for dirs in dir_specs:
        us = _dirs(dirs, pm.g)
        if len(us) > 3:
            raise ValueError("theta derivatives are supported up to order 3")
        specs.append(([0j] * len(us), [2j * np.pi * u for u in us]))
    return _lattice_sums(pm.form(1), z, 0j, specs, tol, radius)


def theta_eval(pm: PeriodMatrix, z, dirs=(), tol: float | None = None, radius: float | None = None) -> ThetaValue:
    """theta(B, z) or its directional derivative along ``dirs`` (at most three directions)."""
    return theta_jet(pm, z, [tuple(dirs)], tol, radius)[0]


def theta_gradient(pm: PeriodMatrix, z, tol: float | None = None) -> np.ndarray:
    E = np.eye(pm.g)
    vals = theta_jet(pm, z, [(E[j],) for j in range(pm.g)], tol)
    return np.array([v.value for v in vals])


def characteristics(g: int) -> list[tuple[int, ...]]:
    """All eps in {0,1}^g in lexicographic order."""
    return [tuple((k >> (g - 1 - j)) & 1 for j in range(g)) for k in range(2 ** g)]


def theta_char_jet(pm: PeriodMatrix, eps, z, dir_specs, tol: float | None = None, radius: float | None = None):
    z = as_cpoint(z, pm.g)
    e = np.asarray(eps, dtype=float)
    if e.shape != (pm.g,) or not np.all((e == 0) | (e == 1)):
        raise DimensionMismatch(f"characteristic {eps!r} is not a 0/1 vector of length {pm.g}")
    tol = default_tol(pm.g) if tol is None else tol
    B = pm.B
    specs = []
    for dirs in dir_specs:
        us = _dirs(dirs, pm.g)
        if len(us) > 2:
            raise ValueError("second-order theta derivatives are supported up to order 2")
        specs.append(([2j * np.pi * (u @ e) for u in us], [4j * np.pi * u for u in us]))
    log_pref = 2j * np.pi * (e @ z) + 0.5j * np.pi * (e @ B @ e)
    return _lattice_sums(pm.form(2), 2 * z + B @ e, log_pref, specs, tol, radius)


def theta_char_eval(pm: PeriodMatrix, eps, z, dirs=(), tol: float | None = None, radius: float | None = None) -> ThetaValue:
    """Second-order theta function Theta[eps](B, z), optionally differentiated along ``dirs``."""
    return theta_char_jet(pm, eps, z, [tuple(dirs)], tol, radius)[0]


def truncation_radius(pm: PeriodMatrix, tol: float, order: int = 0, z_bound: float = 0.0) -> float:
    """Radius that certifies the theta series (differentiated ``order`` times along unit
    directions) to ``tol`` for every argument with coordinates bounded by ``z_bound``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0 <= order <= 3:
        raise ValueError("order must be in 0..3")
    form = pm.form(1)
    g = pm.g
    c_max = form.stretch ** 2 * math.sqrt(g) * z_bound + math.sqrt(g)
    alphas = [2 * np.pi * c_max] * order
    betas = [2 * np.pi * form.stretch] * order
    R, _ = form.radius_for(tol, alphas, betas)
    return R
