"""Exception hierarchy.  Every numerical failure carries a stable class name that
the CLI reports verbatim."""

from __future__ import annotations


class ThetaKummerError(Exception):
    """Base class for all evaluation errors."""


class NotPositiveDefinite(ThetaKummerError):
    pass


class DegenerateSystem(ThetaKummerError):
    pass


class NoConvergence(ThetaKummerError):
    pass


class DerivativeVanished(ThetaKummerError):
    pass


class RadiusOverflow(ThetaKummerError):
    pass


class ArgumentOverflow(ThetaKummerError):
    """The theta value at this argument is outside double-precision range."""


class DimensionMismatch(ThetaKummerError, ValueError):
    pass


class InvalidPeriodMatrix(ThetaKummerError, ValueError):
    pass


class SingularPoint(ThetaKummerError):
    pass


class PoleAtArgument(ThetaKummerError):
    pass


class IndecomposabilityCheckFailed(ThetaKummerError):
    pass


class LatticePointError(ThetaKummerError):
    """A point that must be nonzero on the torus reduced to a lattice vector."""
