"""Fundamental discriminants, Kronecker characters and twist bookkeeping."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .curve import CoefficientTable, EllipticCurve, coefficients_up_to
from .errors import BadD0, ConfigError, NotCoprime, NotFound


class Classification(str, enum.Enum):
    RANK0 = "rank0"
    RANK1 = "rank1"
    HIGHER = "higher"
    UNCLASSIFIED = "unclassified"


def _squarefree(m: int) -> bool:
    m = abs(m)
    if m == 0:
        return False
    i = 2
    while i * i <= m:
        if m % (i * i) == 0:
            return False
        i += 1
    return True


def is_fundamental(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(d)
    if d % 4 == 0:
        return (d // 4) % 4 in (2, 3) and _squarefree(d // 4)
    return False


def fundamental_discriminants(lo: int, hi: int, coprime_to: int = 1) -> list[int]:
    """Fundamental discriminants d in [lo, hi] with gcd(d, coprime_to) = 1, ascending."""
    return [d for d in range(lo, hi + 1) if is_fundamental(d) and math.gcd(d, coprime_to) == 1]


def jacobi(a: int, n: int) -> int:
    if n <= 0 or n % 2 == 0:
        raise ValueError("Jacobi symbol needs an odd positive modulus")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for any integers d, n."""
    if n == 0:
        return 1 if abs(d) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if d < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if d % 2 == 0:
            return 0
        if v % 2 and d % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * jacobi(d, n)


def kronecker_chi(d: int, n: int) -> int:
    """chi_d(n) for a fundamental discriminant d."""
    return kronecker(d, n)


@lru_cache(maxsize=4096)
def _chi_period(d: int) -> np.ndarray:
    tab = np.array([kronecker(d, n) for n in range(abs(d))], dtype=np.int8)
    tab.flags.writeable = False
    return tab


def chi_array(d: int, n_max: int) -> np.ndarray:
    """chi_d(n) for n = 0..n_max as an int8 array."""
    period = _chi_period(d)
    reps = n_max // abs(d) + 1
    return np.tile(period, reps)[: n_max + 1]


class TwistedCoefficients:
    """Lazy view a_d(n) = a(n) chi_d(n) over a shared base table."""

    def __init__(self, table: CoefficientTable, d: int):
        if math.gcd(d, table.curve.conductor) != 1:
            raise NotCoprime(f"gcd({d}, {table.curve.conductor}) > 1")
        self.base = table
        self.d = d
        self._cache: dict[int, np.ndarray] = {}

    @property
    def n_max(self) -> int:
        return self.base.n_max

    def __getitem__(self, n: int) -> float:
        return self.base.a(n) * kronecker(self.d, n)

    def classical(self, n: int) -> int:
        return self.base.A(n) * kronecker(self.d, n)

    def analytic(self, n_max: int) -> np.ndarray:
        """a_d(n) for n = 0..n_max (entry 0 is zero)."""
        if n_max > self.base.n_max:
            self.base = coefficients_up_to(self.base.curve, n_max)
        arr = self._cache.get(n_max)
        if arr is None:
            arr = self.base.analytic[: n_max + 1] * chi_array(self.d, n_max)
            self._cache = {n_max: arr}
        return arr

    def classical_array(self, n_max: int) -> np.ndarray:
        if n_max > self.base.n_max:
            self.base = coefficients_up_to(self.base.curve, n_max)
        return self.base.classical[: n_max + 1] * chi_array(self.d, n_max)


def twisted_coefficients(table: CoefficientTable, d: int) -> TwistedCoefficients:
    return TwistedCoefficients(table, d)


def twist_sign(curve: EllipticCurve, d: int) -> int:
    if math.gcd(d, curve.conductor) != 1:
        raise NotCoprime(f"gcd({d}, {curve.conductor}) > 1")
    return kronecker(d, -curve.conductor) * curve.root_number


@lru_cache(maxsize=None)
def square_residues(modulus: int) -> frozenset[int]:
    return frozenset((x * x) % modulus for x in range(modulus))


def genus_predicate(curve: EllipticCurve, d0: int, d: int) -> bool:
    """Membership of d in the odd genus family attached to d0."""
    M = curve.conductor
    if math.gcd(d0, 2 * M) != 1:
        raise BadD0(f"gcd({d0}, {2 * M}) > 1")
    if math.gcd(d, 2 * M * d0) != 1:
        return False
    if d0 * d >= 0:
        return False
    return (d0 * d) % (4 * M) in square_residues(4 * M)


@dataclass(frozen=True)
class TwistDescriptor:
    curve: EllipticCurve
    d: int
    classification: Classification = Classification.UNCLASSIFIED

    def __post_init__(self):
        if not (self.d == 1 or is_fundamental(self.d)):
            raise ConfigError(f"{self.d} is not a fundamental discriminant")
        if math.gcd(self.d, self.curve.conductor) != 1:
            raise NotCoprime(f"gcd({self.d}, {self.curve.conductor}) > 1")

    @property
    def twisted_conductor(self) -> int:
        return self.curve.conductor * self.d * self.d

    @property
    def sign(self) -> int:
        # d = 1 is the untwisted curve itself
        return self.curve.root_number if self.d == 1 else twist_sign(self.curve, self.d)

    def classified(self, c: Classification) -> "TwistDescriptor":
        if c is Classification.RANK0 and self.sign != 1:
            raise ValueError("Rank0 requires even sign")
        if c is Classification.RANK1 and self.sign != -1:
            raise ValueError("Rank1 requires odd sign")
        return TwistDescriptor(self.curve, self.d, c)


def classify(sign: int, lam0: float, lam1: float, theta0: float = 1e-3, theta1: float = 1e-4) -> Classification:
    """Central order from |Lambda(1/2)| (even) or |Lambda'(1/2)| (odd).

    Values in the band [theta/10, theta] stay Unclassified.
    """
    value, theta = (abs(lam0), theta0) if sign == 1 else (abs(lam1), theta1)
    if value > theta:
        return Classification.RANK0 if sign == 1 else Classification.RANK1
    if value < theta / 10:
        return Classification.HIGHER
    return Classification.UNCLASSIFIED


def find_d0(curve: EllipticCurve, search_bound: int = 50, theta0: float = 1e-3) -> tuple[int, float]:
    """Smallest |d0| coprime to 2M with even sign and Lambda(1/2) above theta0.

    Returns (d0, Lambda(1/2)).
    """
    from .lfunc import CompletedLFunction, numeric_sign

    if search_bound < 3:
        raise ValueError("search_bound must be at least 3")
    M = curve.conductor
    cands = [d for d in range(-search_bound, search_bound + 1) if is_fundamental(d) and math.gcd(d, 2 * M) == 1]
    cands.sort(key=lambda d: (abs(d), d))
    for d in cands:
        if twist_sign(curve, d) != 1 or numeric_sign(curve, d) != 1:
            continue
        lam = CompletedLFunction(TwistDescriptor(curve, d)).central_value()
        if abs(lam) > theta0:
            return d, lam
    raise NotFound(f"no d0 with |d0| <= {search_bound}")
