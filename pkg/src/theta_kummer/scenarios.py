"""End-to-end runs: Siegel-space sampling, the genus-2 Jacobian pipeline, and a
multistart residual scan.

All randomness comes from ``make_rng(seed)``, a numpy Generator over the
Philox-4x64 counter-based bit generator, so every run is a pure function of
its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .divisor import (
    DivisorPoint,
    FlowFrame,
    divisor_identity_residual,
    find_divisor_point,
    reduce_divisor_point,
    tangent_direction,
    taylor_quad,
    upsi_residual,
)
from .errors import (
    DegenerateSystem,
    DerivativeVanished,
    IndecomposabilityCheckFailed,
    InvalidPeriodMatrix,
    LatticePointError,
    NoConvergence,
    PoleAtArgument,
    SingularPoint,
)
from .kummer import (
    FitCoefficients,
    Gamma00Instance,
    gamma00_fit,
    gamma00_residual,
    kummer_hessian,
    kummer_map,
    semidegenerate_residual,
    trisecant_residual,
)
from .numeric import as_cpoint
from .theta import PeriodMatrix, default_tol

MAX_DRAWS = 50
MIN_LATTICE_DISTANCE = 0.05
INDECOMPOSABLE_TOL = 1e-3


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def sample_siegel(g: int, seed: int, offdiag_scale: float = 0.3) -> PeriodMatrix:
    """B = i (I + S) + R with S symmetric, zero diagonal, entries in +-offdiag_scale,
    and R real symmetric with entries in +-0.4."""
    if not 0 <= offdiag_scale < 0.5:
        raise ValueError("offdiag_scale must lie in [0, 0.5)")
    rng = make_rng(seed)
    for _ in range(100):
        S = np.triu(rng.uniform(-offdiag_scale, offdiag_scale, (g, g)), 1)
        R = np.triu(rng.uniform(-0.4, 0.4, (g, g)))
        B = 1j * (np.eye(g) + S + S.T) + R + np.triu(R, 1).T
        try:
            return PeriodMatrix(B)
        except InvalidPeriodMatrix:
            continue
    raise InvalidPeriodMatrix(f"no valid period matrix in 100 draws (g={g}, scale={offdiag_scale})")


def looks_decomposable(pm: PeriodMatrix) -> bool:
    """Heuristic: a genus-2 matrix with vanishing off-diagonal entry is a product."""
    return pm.g == 2 and abs(pm.B[0, 1]) <= INDECOMPOSABLE_TOL


def lattice_distance(pm: PeriodMatrix, v) -> float:
    """Sup-distance of ``v = x + B w`` to the lattice in the real coordinates (x, w)."""
    v = as_cpoint(v, pm.g)
    w = np.linalg.solve(pm.B.imag, v.imag)
    x = v.real - pm.B.real @ w
    return float(max(np.abs(x - np.round(x)).max(), np.abs(w - np.round(w)).max()))


def random_cell_point(pm: PeriodMatrix, rng: np.random.Generator) -> np.ndarray:
    g = pm.g
    return rng.uniform(-0.5, 0.5, g) + pm.B @ rng.uniform(-0.5, 0.5, g)


def random_direction(g: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.normal(size=g) + 1j * rng.normal(size=g)
    return d / np.linalg.norm(d)


def random_divisor_point(pm: PeriodMatrix, rng: np.random.Generator, tol: float | None = None,
                         avoid=()) -> DivisorPoint:
    """A smooth divisor point in the fundamental cell, distinct mod the lattice from ``avoid``."""
    for _ in range(MAX_DRAWS):
        z0 = random_cell_point(pm, rng)
        d = random_direction(pm.g, rng)
        try:
            dp = reduce_divisor_point(pm, find_divisor_point(pm, z0, d, tol), tol)
        except (NoConvergence, SingularPoint, DerivativeVanished):
            continue
        if all(lattice_distance(pm, dp.z - q) > MIN_LATTICE_DISTANCE for q in avoid):
            return dp
    raise SingularPoint(f"no usable divisor point after {MAX_DRAWS} draws")


@dataclass
class PipelineReport:
    pm: PeriodMatrix
    z1: DivisorPoint
    z2: DivisorPoint
    U: np.ndarray
    V: np.ndarray
    P: np.ndarray
    fit: FitCoefficients
    residuals: dict[str, float]
    seed: int
    tol: float
    instance: Gamma00Instance
    frame: FlowFrame
    extra_points: list[DivisorPoint] = field(default_factory=list)
    samples: dict[str, list] = field(default_factory=dict)
    notes: str = (
        "genus-2 identification: the theta divisor is a translate of the Abel-Jacobi curve; "
        "indecomposability checked heuristically via |B12|"
    )


def _sample_until(count, draw, errors=(PoleAtArgument, DerivativeVanished)):
    out = []
    for _ in range(count * MAX_DRAWS):
        if len(out) == count:
            break
        try:
            out.append(draw())
        except errors:
            continue
    if len(out) < count:
        raise SingularPoint(f"only {len(out)} of {count} samples could be evaluated")
    return out


def genus2_pipeline(pm: PeriodMatrix, seed: int = 0, tol: float | None = None, points=None,
                    n_upsi: int = 20, n_identity: int = 10) -> PipelineReport:
    """Build a rank-two solution of K(P) = c K(0) + b d_U d_V K(0) on a genus-2 ppav
    from two divisor points and check every downstream identity on it."""
    if pm.g != 2:
        raise ValueError("genus2_pipeline needs g = 2")
    if looks_decomposable(pm):
        raise IndecomposabilityCheckFailed(f"|B12| = {abs(pm.B[0, 1]):.2e} <= {INDECOMPOSABLE_TOL}")
    tol = default_tol(pm.g) if tol is None else tol
    rng = make_rng(seed)

    if points is None:
        z1 = random_divisor_point(pm, rng, tol)
        z2 = random_divisor_point(pm, rng, tol, avoid=[z1.z])
    else:
        z1, z2 = points
    P = z1.z - z2.z
    if lattice_distance(pm, P) <= MIN_LATTICE_DISTANCE:
        raise LatticePointError("z1 - z2 lies in the period lattice; P must be nonzero on A")
    z3 = random_divisor_point(pm, rng, tol, avoid=[z1.z, z2.z])
    z4 = random_divisor_point(pm, rng, tol, avoid=[z1.z, z2.z, z3.z])

    U = tangent_direction(pm, z1)
    V = tangent_direction(pm, z2)
    fit = gamma00_fit(pm, P, U, V, tol)
    inst = Gamma00Instance(pm, P, fit.b * U, V, fit.c)
    frame = FlowFrame(pm, inst.U, inst.V, P, random_cell_point(pm, rng), fit.c)

    def upsi_sample():
        # flow coordinates scaled so each displacement stays inside about one cell
        x, y, t = (rng.uniform(-0.5, 0.5, 3) + 1j * rng.uniform(-0.5, 0.5, 3)) / [
            np.linalg.norm(inst.U), np.linalg.norm(inst.V), 1.0]
        return [complex(x), complex(y), complex(t)], upsi_residual(frame, x, y, t, tol)

    upsi = _sample_until(n_upsi, upsi_sample)

    def identity_sample():
        dp = random_divisor_point(pm, rng, tol, avoid=[z1.z, z2.z])
        r_id = divisor_identity_residual(pm, dp, inst.U, P, tol)
        r_tq = taylor_quad(frame, dp, tol).relation_defect()
        return dp, r_id, r_tq

    ident = _sample_until(n_identity, identity_sample)

    residuals = {
        "gamma00": gamma00_residual(inst, tol),
        "upsi": max(r for _, r in upsi),
        "thetaidentity": max(r for _, r, _ in ident),
        "trisecant": trisecant_residual(pm, z1.z, z2.z, z3.z, z4.z, tol),
        "semidegenerate": semidegenerate_residual(pm, z3.z, z4.z, z2.z, V, tol),
        "taylor_abAB": max(r for _, _, r in ident),
    }
    return PipelineReport(
        pm=pm, z1=z1, z2=z2, U=U, V=V, P=P, fit=fit, residuals=residuals, seed=seed, tol=tol,
        instance=inst, frame=frame, extra_points=[z3, z4] + [dp for dp, _, _ in ident],
        samples={
            "upsi": [{"xyt": xyt, "residual": r} for xyt, r in upsi],
            "thetaidentity": [r for _, r, _ in ident],
            "taylor_abAB": [r for _, _, r in ident],
        },
    )


@dataclass
class ScanReport:
    pm: PeriodMatrix
    best_residual: float
    best_instance: Gamma00Instance | None
    iterations: int
    seed: int
    starts: int
    label: str = "exploratory: local minima of the rank-two fit residual, not a certificate"


class _BudgetExhausted(Exception):
    pass


ALS_SWEEPS = 200


def best_rank_two(KP: np.ndarray, K0: np.ndarray, H: np.ndarray, U0) -> tuple[np.ndarray, np.ndarray]:
    """Directions (U, V) minimising |K(P) - c K(0) - H[U, V]| for fixed P.

    ``H[e, i, j]`` is the Kummer Hessian at the origin, so ``d_U d_V K(0) = H[U, V]``
    is bilinear and each half-step (solve for (c, V) with U fixed, then for (c, U)
    with V fixed) is a small linear least-squares problem.  Sweeps stop when the
    residual stops decreasing.
    """
    U = np.asarray(U0, dtype=complex)
    V = U
    nk = np.linalg.norm(KP)
    prev = np.inf
    for _ in range(ALS_SWEEPS):
        x = np.linalg.lstsq(np.column_stack([K0, H @ U]), KP, rcond=None)[0]
        V = x[1:]
        A = np.column_stack([K0, H @ V])
        x = np.linalg.lstsq(A, KP, rcond=None)[0]
        r = np.linalg.norm(A @ x - KP) / nk
        if np.linalg.norm(x[1:]) == 0.0:
            break
        U = x[1:] / np.linalg.norm(x[1:])
        if r >= prev * (1 - 1e-6):
            break
        prev = r
    return U, V


def scan_min_residual(pm: PeriodMatrix, iters: int, seed: int = 0, tol: float | None = None,
                      starts=(), local_budget: int | None = None) -> ScanReport:
    """Multistart local search for small gamma00_fit residuals over (P, U, V).

    The search is block-coordinate: for each trial P the directions are found by
    alternating least squares (``best_rank_two``), and P itself is moved by
    Nelder-Mead in its 2g real coordinates.  ``iters`` counts trial points, each of
    which is scored with ``gamma00_fit``.  Explicit ``starts`` (triples
    ``(P, U, V)``) come first and are scored exactly as given before any
    refinement.  Points within 0.05 of the lattice are penalised, since P = 0
    solves the equation trivially.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    g = pm.g
    tol = default_tol(g) if tol is None else tol
    rng = make_rng(seed)
    local_budget = local_budget or 20 * g
    zero = np.zeros(g, dtype=complex)
    K0 = kummer_map(pm, zero, tol).comps
    H = kummer_hessian(pm, zero, tol)
    best = {"r": np.inf, "inst": None}
    used = 0

    def score(P, U, V):
        nonlocal used
        if used >= iters:
            raise _BudgetExhausted
        used += 1
        dist = lattice_distance(pm, P)
        if dist <= MIN_LATTICE_DISTANCE:
            return 1.0 + (MIN_LATTICE_DISTANCE - dist)
        try:
            fit = gamma00_fit(pm, P, U, V, tol)
        except DegenerateSystem:
            return 1.0
        if fit.rel_residual < best["r"]:
            best.update(r=fit.rel_residual, inst=Gamma00Instance(pm, P, fit.b * U, V, fit.c))
        return fit.rel_residual

    def refine(P, U0):
        if lattice_distance(pm, P) <= MIN_LATTICE_DISTANCE:
            return score(P, U0, U0)
        KP = kummer_map(pm, P, tol).comps
        U, V = best_rank_two(KP, K0, H, U0)
        return score(P, U, V)

    seeds = [tuple(as_cpoint(v, g) for v in s) for s in starts]
    n_starts = 0
    while used < iters:
        if seeds:
            P0, U0, V0 = seeds.pop(0)
            first = lambda: score(P0, U0, V0)  # noqa: E731
        else:
            P0 = random_cell_point(pm, rng)
            while lattice_distance(pm, P0) <= 2 * MIN_LATTICE_DISTANCE:
                P0 = random_cell_point(pm, rng)
            U0 = random_direction(g, rng)
            first = None
        n_starts += 1
        budget = min(local_budget, iters - used)
        try:
            if first is not None:
                first()
                budget -= 1
            if budget > 0:
                x0 = np.concatenate([P0.real, P0.imag])
                minimize(lambda x: refine(x[:g] + 1j * x[g:], U0), x0, method="Nelder-Mead",
                         options={"maxfev": budget, "xatol": 1e-12, "fatol": 1e-18, "adaptive": True})
        except _BudgetExhausted:
            break

    return ScanReport(pm, float(best["r"]), best["inst"], used, seed, n_starts)
