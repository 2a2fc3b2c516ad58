"""Numerical lab for quadratic twists of elliptic-curve L-functions."""

from .curve import EllipticCurve, fixture_curve
from .lfunc import CompletedLFunction, EvaluationSettings
from .twist import Classification, TwistDescriptor

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "CompletedLFunction",
    "EllipticCurve",
    "EvaluationSettings",
    "TwistDescriptor",
    "fixture_curve",
]
