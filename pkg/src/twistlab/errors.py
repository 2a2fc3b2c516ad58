"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
1 for configuration problems, 2 for numerical certification failures and
3 for twists that cannot be audited.
"""

from __future__ import annotations


class TwistLabError(Exception):
    exit_code = 2


class ConfigError(TwistLabError):
    exit_code = 1


class BadPrime(TwistLabError):
    """Point counting was asked for a prime of bad reduction."""


class AmbiguousReduction(TwistLabError):
    """The built-in classifier could not decide the reduction type."""

    exit_code = 1


class NotCoprime(TwistLabError):
    exit_code = 1


class BadD0(TwistLabError):
    exit_code = 1


class NotFound(TwistLabError):
    pass


class NonConvergence(TwistLabError):
    pass


class TruncationInsufficient(TwistLabError):
    pass


class RealityViolation(TwistLabError):
    pass


class StepUnderflow(TwistLabError):
    pass


class SignAmbiguous(TwistLabError):
    pass


class CompletenessFailure(TwistLabError):
    def __init__(self, message: str, suspect: tuple[float, float] | None = None):
        super().__init__(message)
        self.suspect = suspect


class EmptyList(TwistLabError):
    pass


class OutOfRange(TwistLabError):
    pass


class QuadratureFailure(TwistLabError):
    pass


class InsufficientCoefficients(TwistLabError):
    pass


class TailTooFat(TwistLabError):
    pass


class ContourNearZero(TwistLabError):
    exit_code = 3


class NoConsensus(TwistLabError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EmptyClass(TwistLabError):
    pass


class TooFewRecords(TwistLabError):
    pass
