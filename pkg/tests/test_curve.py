import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.curve import (
    CoefficientTable,
    EllipticCurve,
    bad_prime_trace,
    coefficients_up_to,
    count_points_ap,
    count_points_naive,
    factorize,
    primes_up_to,
)
from twistlab.errors import AmbiguousReduction, BadPrime, ConfigError


def eta_product_11(n_max):
    """Coefficients of q prod (1 - q^n)^2 (1 - q^{11n})^2, the weight 2 newform of level 11."""
    c = np.zeros(n_max + 1, dtype=object)
    c[0] = 1
    for n in range(1, n_max + 1):
        for step, power in ((n, 2), (11 * n, 2)):
            if step > n_max:
                continue
            for _ in range(power):
                for k in range(n_max, step - 1, -1):
                    c[k] -= c[k - step]
    out = np.zeros(n_max + 1, dtype=np.int64)
    out[1:] = c[:n_max].astype(np.int64)
    return out


@pytest.fixture(scope="module")
def t11(e11):
    return coefficients_up_to(e11, 2000)


@pytest.fixture(scope="module")
def t37(e37):
    return coefficients_up_to(e37, 2000)


def test_q_expansion_11a_matches_eta_product(t11):
    ref = eta_product_11(400)
    assert np.array_equal(t11.classical[1:401], ref[1:401])


def test_small_primes(e11, e37, t11, t37):
    assert count_points_ap(e11, 3) == -1
    assert count_points_ap(e37, 3) == -3
    assert t11.A(2) == -2
    assert t11.A(4) == 2
    assert t11.A(1) == 1 and t37.A(1) == 1


def test_bad_prime_traces(e11, e37):
    # direct point counts on the nodal reductions: 11a is split at 11, 37a nonsplit at 37
    assert bad_prime_trace(e11, 11) == count_points_naive(e11, 11) == 1
    assert bad_prime_trace(e37, 37) == count_points_naive(e37, 37) == -1


def test_override_wins(e11):
    E = EllipticCurve(e11.a_invariants, 11, bad_primes={11: "additive"})
    assert bad_prime_trace(E, 11) == 0
    assert coefficients_up_to(E, 200).A(121) == 0


def test_two_needs_override():
    # y^2 + xy = x^3 - x^2 - 2x has conductor 14 (reduction at 2 undecided without data)
    E = EllipticCurve((1, 0, 1, 4, -6), 14)
    with pytest.raises(AmbiguousReduction):
        bad_prime_trace(E, 2)
    E2 = EllipticCurve((1, 0, 1, 4, -6), 14, bad_primes={2: "multiplicative_split"})
    assert bad_prime_trace(E2, 2) == 1


def test_point_count_rejects_bad_prime(e11):
    with pytest.raises(BadPrime):
        count_points_ap(e11, 11)


def test_validation():
    with pytest.raises(ConfigError):
        EllipticCurve((0, 0, 0, 0, 0), 1)
    with pytest.raises(ConfigError):
        EllipticCurve((0, -1, 1, -10, -20), 13)
    with pytest.raises(ConfigError):
        EllipticCurve((0, -1, 1, -10, -20), 11, root_number=0)


@pytest.mark.parametrize("name", ["11a", "37a"])
def test_fast_count_matches_naive(name, request):
    E = request.getfixturevalue("e" + name[:2])
    for p in primes_up_to(400).tolist():
        if p == 2 or E.conductor % p == 0:
            continue
        assert count_points_ap(E, p) == count_points_naive(E, p)


@given(st.integers(0, 1000))
def test_hasse_bound(i):
    E = EllipticCurve((0, -1, 1, -10, -20), 11)
    tab = coefficients_up_to(E, 10_000)
    ps = primes_up_to(10_000)
    p = int(ps[1 + i % (len(ps) - 1)])
    if p == 11:
        return
    assert abs(tab.A(p)) <= 2 * math.sqrt(p)


def test_multiplicativity_by_factorization(t11, t37):
    for t in (t11, t37):
        for n in range(2, 1001):
            prod = 1
            for p, k in factorize(n).items():
                prod *= t.A(p**k)
            assert t.A(n) == prod


def test_recurrence_against_satake(t11, t37):
    for t in (t11, t37):
        for p in primes_up_to(12).tolist():
            if not t.is_good(p):
                assert t.A(p**3) == t.A(p) ** 3
                continue
            al, be = t.satake(p)
            recon = (al**3 + be**3 + (al + be)) * p**1.5
            assert abs(t.A(p**3) - recon.real) <= 1e-10 * max(1, abs(t.A(p**3)))
            assert t.A(p**3) == t.A(p) * t.A(p * p) - p * t.A(p)


def test_satake_pairs(t11):
    for p in primes_up_to(1000).tolist():
        if p == 11:
            continue
        al, be = t11.satake(p)
        assert abs(al * be - 1) < 1e-12
        assert abs(al + be - t11.A(p) / math.sqrt(p)) < 1e-12


def test_divisor_bound(t37):
    n = np.arange(1, 2001)
    divisors = np.array([sum(1 for k in range(1, int(math.isqrt(m)) + 1) if m % k == 0 for _ in ((0,) if k * k == m else (0, 0))) for m in n])
    assert np.all(np.abs(t37.analytic[1:2001]) <= divisors + 1e-12)


def test_table_is_read_only(t11):
    with pytest.raises(ValueError):
        t11.classical[1] = 5
    assert isinstance(t11, CoefficientTable)


def test_table_cache_grows(e37):
    a = coefficients_up_to(e37, 100)
    b = coefficients_up_to(e37, a.n_max + 1)
    assert b.n_max >= 2 * a.n_max or b.n_max >= a.n_max + 1
    assert np.array_equal(a.classical, b.classical[: a.n_max + 1])
