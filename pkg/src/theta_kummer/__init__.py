"""Riemann theta functions, the Kummer map of a ppav, and numerical residuals of
the Gamma_00, trisecant and theta-divisor identities."""

__version__ = "0.1.0"

from .divisor import (
    DivisorPoint,
    FlowFrame,
    TaylorQuad,
    divisor_identity_residual,
    find_divisor_point,
    tangent_direction,
    tau_u_psi,
    taylor_quad,
    upsi_residual,
)
from .errors import *  # noqa: F401,F403
from .kummer import (
    CoefficientMatrix,
    FitCoefficients,
    Gamma00Instance,
    KummerVector,
    bilinear_residual,
    gamma00_fit,
    gamma00_residual,
    gamma00_residual_full,
    kummer_dderiv,
    kummer_map,
    semidegenerate_residual,
    trisecant_residual,
)
from .scenarios import genus2_pipeline, sample_siegel, scan_min_residual
from .theta import PeriodMatrix, ThetaValue, theta_char_eval, theta_eval, truncation_radius
