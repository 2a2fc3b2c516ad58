"""The fixed elliptic curve E/Q and its Dirichlet coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AmbiguousReduction, BadPrime, ConfigError

REDUCTION_TRACE = {
    "multiplicative_split": 1,
    "multiplicative_nonsplit": -1,
    "additive": 0,
}


def factorize(n: int) -> dict[int, int]:
    n = abs(n)
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def primes_up_to(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def smallest_prime_factor(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in primes_up_to(n):
        view = spf[p :: p]
        view[view == 0] = p
    return spf


@dataclass(frozen=True)
class EllipticCurve:
    """Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6.

    The conductor and base root number are inputs; ``bad_primes`` holds
    optional reduction-type overrides keyed by prime.
    """

    a_invariants: tuple[int, int, int, int, int]
    conductor: int
    root_number: int = 1
    bad_primes: dict[int, str] = field(default_factory=dict, hash=False, compare=False)
    label: str = ""

    def __post_init__(self):
        if len(self.a_invariants) != 5:
            raise ConfigError("a_invariants must have five entries")
        object.__setattr__(self, "a_invariants", tuple(int(a) for a in self.a_invariants))
        if self.conductor < 1:
            raise ConfigError("conductor must be a positive integer")
        if self.root_number not in (1, -1):
            raise ConfigError("root_number must be +1 or -1")
        if self.discriminant == 0:
            raise ConfigError("singular Weierstrass model (discriminant 0)")
        for p in factorize(self.conductor):
            if self.discriminant % p:
                raise ConfigError(f"conductor prime {p} does not divide the discriminant")
        for p, kind in self.bad_primes.items():
            if kind not in REDUCTION_TRACE:
                raise ConfigError(f"unknown reduction type {kind!r} for p={p}")

    @property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.a_invariants
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def conductor_primes(self) -> list[int]:
        return sorted(factorize(self.conductor))

    def key(self) -> tuple:
        return (self.a_invariants, self.conductor, tuple(sorted(self.bad_primes.items())))


def count_points_naive(curve: EllipticCurve, p: int) -> int:
    """p + 1 - #E(F_p) by enumerating every affine pair; includes singular points."""
    a1, a2, a3, a4, a6 = curve.a_invariants
    x = np.arange(p, dtype=np.int64)[:, None]
    y = np.arange(p, dtype=np.int64)[None, :]
    lhs = (y * y + a1 * x * y + a3 * y) % p
    rhs = (x**3 + a2 * x * x + a4 * x + a6) % p
    affine = int(np.count_nonzero(lhs == rhs))
    return p - affine


def _legendre_table(p: int) -> np.ndarray:
    half = np.arange((p + 1) // 2, dtype=np.int64)
    tab = np.full(p, -1, dtype=np.int8)
    tab[(half * half) % p] = 1
    tab[0] = 0
    return tab


def count_points_ap(curve: EllipticCurve, p: int) -> int:
    """Trace of Frobenius A(p) at an odd prime of good reduction.

    Completes the square to Y^2 = 4x^3 + b2 x^2 + 2 b4 x + b6 and sums
    Legendre symbols of the right-hand side.
    """
    if curve.discriminant % p == 0:
        raise BadPrime(f"p={p} divides the discriminant")
    if p == 2:
        return count_points_naive(curve, 2)
    b2, b4, b6, _ = curve.b_invariants
    x = np.arange(p, dtype=np.int64)
    if 4 * p**3 + abs(b2) * p * p + 2 * abs(b4) * p + abs(b6) < 2**62:
        f = ((4 * x + b2) * x + 2 * b4) * x + b6
        f %= p
    else:
        b2, b4, b6 = b2 % p, b4 % p, b6 % p
        f = (((4 * x + b2) % p * x + 2 * b4) % p * x + b6) % p
    ap = -int(_legendre_table(p)[f].sum(dtype=np.int64))
    assert ap * ap <= 4 * p, f"Hasse bound violated at p={p}"
    return ap


def bad_prime_trace(curve: EllipticCurve, p: int) -> int:
    """A(p) in {+1, -1, 0} at a prime dividing the conductor."""
    if curve.conductor % p:
        raise BadPrime(f"p={p} does not divide the conductor")
    if p in curve.bad_primes:
        return REDUCTION_TRACE[curve.bad_primes[p]]
    if curve.conductor % (p * p) == 0:
        return 0
    if p == 2:
        raise AmbiguousReduction("reduction type at p=2 needs a bad_primes override")
    b2, b4, b6, _ = curve.b_invariants
    # the node sits at a double root x0 of 4x^3 + b2 x^2 + 2 b4 x + b6
    for x0 in range(p):
        f = (4 * x0**3 + b2 * x0 * x0 + 2 * b4 * x0 + b6) % p
        df = (12 * x0 * x0 + 2 * b2 * x0 + 2 * b4) % p
        if f == 0 and df == 0:
            slope2 = (12 * x0 + b2) % p
            if slope2 == 0:
                break
            return 1 if pow(slope2, (p - 1) // 2, p) == 1 else -1
    raise AmbiguousReduction(f"no node found mod {p}; supply a bad_primes override")


class CoefficientTable:
    """Classical A(n) and analytic a(n) = A(n)/sqrt(n) for n <= n_max.

    Built once per curve and shared read-only between twists.
    """

    def __init__(self, curve: EllipticCurve, n_max: int):
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        self.curve = curve
        self.n_max = n_max
        self.bad_traces = {p: bad_prime_trace(curve, p) for p in curve.conductor_primes}
        primes = primes_up_to(n_max)
        self.ap: dict[int, int] = {}
        for p in primes.tolist():
            if p in self.bad_traces:
                self.ap[p] = self.bad_traces[p]
            else:
                self.ap[p] = count_points_ap(curve, p)
        self.classical = self._assemble(n_max)
        self.classical.flags.writeable = False
        n = np.arange(n_max + 1, dtype=float)
        n[0] = 1.0
        self.analytic = self.classical / np.sqrt(n)
        self.analytic[0] = 0.0
        self.analytic.flags.writeable = False

    def _assemble(self, n_max: int) -> np.ndarray:
        A = np.zeros(n_max + 1, dtype=np.int64)
        A[1] = 1
        spf = smallest_prime_factor(n_max).tolist()
        Al = A.tolist()
        ap = self.ap
        for n in range(2, n_max + 1):
            p = spf[n]
            m = n // p
            if m % p:
                # n = p * m with p not dividing m
                Al[n] = ap[p] * Al[m]
                continue
            pk = p
            rest = m
            while rest % p == 0:
                rest //= p
                pk *= p
            if rest > 1:
                Al[n] = Al[pk] * Al[rest]
            elif p in self.bad_traces:
                Al[n] = ap[p] * Al[n // p]
            else:
                Al[n] = ap[p] * Al[n // p] - p * Al[n // (p * p)]
        return np.array(Al, dtype=np.int64)

    def A(self, n: int) -> int:
        return int(self.classical[n])

    def a(self, n: int) -> float:
        return float(self.analytic[n])

    def is_good(self, p: int) -> bool:
        return self.curve.conductor % p != 0

    def satake(self, p: int) -> tuple[complex, complex]:
        """(alpha_p, beta_p) with alpha + beta = A(p)/sqrt(p), alpha beta = 1."""
        if not self.is_good(p):
            raise BadPrime(f"p={p} is a bad prime; no Satake pair")
        t = self.ap[p] / math.sqrt(p)
        disc = complex(t * t - 4.0)
        root = np.sqrt(disc)
        return (t + root) / 2.0, (t - root) / 2.0


_TABLES: dict[tuple, CoefficientTable] = {}


def coefficients_up_to(curve: EllipticCurve, n_max: int) -> CoefficientTable:
    """Coefficient table covering at least ``n_max`` terms (cached per curve)."""
    key = curve.key()
    tab = _TABLES.get(key)
    if tab is None or tab.n_max < n_max:
        grow = 2 * tab.n_max if tab is not None else 1
        tab = CoefficientTable(curve, max(n_max, grow))
        _TABLES[key] = tab
    return tab


@lru_cache(maxsize=None)
def _fixture(name: str) -> EllipticCurve:
    if name == "11a":
        return EllipticCurve((0, -1, 1, -10, -20), 11, root_number=1, label="11a")
    if name == "37a":
        return EllipticCurve((0, 0, 1, -1, 0), 37, root_number=-1, label="37a")
    raise KeyError(name)


def fixture_curve(name: str) -> EllipticCurve:
    """The two reference curves: ``"11a"`` (rank 0) and ``"37a"`` (rank 1)."""
    return _fixture(name)
