import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.errors import BadD0, ConfigError, NotCoprime
from twistlab.twist import (
    Classification,
    TwistDescriptor,
    chi_array,
    classify,
    fundamental_discriminants,
    genus_predicate,
    is_fundamental,
    kronecker,
    twist_sign,
)


def squarefree(m):
    m = abs(m)
    return all(m % (k * k) for k in range(2, math.isqrt(m) + 1))


def field_discriminants(bound):
    """Discriminants of Q(sqrt m) for squarefree m != 1."""
    out = set()
    for m in range(-bound, bound + 1):
        if m in (0, 1) or not squarefree(m):
            continue
        disc = m if m % 4 == 1 else 4 * m
        if abs(disc) <= bound:
            out.add(disc)
    return out


def kronecker_oracle(d, n):
    """Completely multiplicative extension of Euler's criterion and the 2-adic rule."""
    if n == 0:
        return 1 if abs(d) == 1 else 0
    val = 1
    if n < 0:
        val = -1 if d < 0 else 1
        n = -n
    p = 2
    while n > 1:
        while n % p == 0:
            n //= p
            if p == 2:
                c = 0 if d % 2 == 0 else (1 if d % 8 in (1, 7) else -1)
            else:
                r = pow(d % p, (p - 1) // 2, p)
                c = 0 if d % p == 0 else (1 if r == 1 else -1)
            val *= c
        p += 1
    return val


def test_fundamental_enumeration_matches_fields():
    ours = set(fundamental_discriminants(-600, 600))
    assert ours == field_discriminants(600)
    assert is_fundamental(-4) and is_fundamental(8) and not is_fundamental(-12) and not is_fundamental(1)


def test_coprime_filter():
    ds = fundamental_discriminants(-200, 200, 11)
    assert all(math.gcd(d, 11) == 1 for d in ds)
    assert ds == sorted(ds)


@given(st.sampled_from(fundamental_discriminants(-300, 300)), st.integers(-400, 400))
def test_kronecker_matches_oracle(d, n):
    assert kronecker(d, n) == kronecker_oracle(d, n)


@given(st.sampled_from(fundamental_discriminants(-300, 300)), st.integers(1, 300), st.integers(1, 300))
def test_kronecker_character_properties(d, m, n):
    assert kronecker(d, m * n) == kronecker(d, m) * kronecker(d, n)
    assert kronecker(d, n + abs(d)) == kronecker(d, n)
    assert kronecker(d, -1) == (1 if d > 0 else -1)


def test_chi_array_matches_scalar():
    for d in (-19, -4, 5, 8, -103):
        arr = chi_array(d, 500)
        assert all(arr[n] == kronecker(d, n) for n in range(1, 501))


def test_twist_sign_examples(e11, e37):
    assert twist_sign(e11, -3) == 1
    assert twist_sign(e11, -19) == -1
    for d in fundamental_discriminants(-100, 100, 37):
        assert twist_sign(e37, d) == kronecker(d, -37) * (-1)


def test_genus_members_are_odd(e11, e37):
    for E, d0 in ((e11, -3), (e37, -3)):
        members = [d for d in fundamental_discriminants(-300, 300, E.conductor) if genus_predicate(E, d0, d)]
        assert members
        assert all(twist_sign(E, d) == -1 for d in members)


def test_bad_d0(e11):
    with pytest.raises(BadD0):
        genus_predicate(e11, -4, 5)


def test_descriptor_validation(e11):
    with pytest.raises(ConfigError):
        TwistDescriptor(e11, 20)
    with pytest.raises(NotCoprime):
        TwistDescriptor(e11, 33)
    td = TwistDescriptor(e11, -19)
    assert td.twisted_conductor == 11 * 361
    with pytest.raises(ValueError):
        td.classified(Classification.RANK0)


@pytest.mark.parametrize(
    "sign,l0,l1,expected",
    [
        (1, 0.5, 0.0, Classification.RANK0),
        (1, 5e-4, 0.0, Classification.UNCLASSIFIED),
        (1, 1e-6, 0.0, Classification.HIGHER),
        (-1, 0.0, 3e-4, Classification.RANK1),
        (-1, 0.0, 5e-5, Classification.UNCLASSIFIED),
        (-1, 0.0, 1e-7, Classification.HIGHER),
    ],
)
def test_classify_bands(sign, l0, l1, expected):
    assert classify(sign, l0, l1) is expected


@given(st.sampled_from([1, -1]), st.floats(0, 10), st.floats(0, 10))
def test_classification_is_sign_consistent(sign, l0, l1):
    c = classify(sign, l0, l1)
    if c is Classification.RANK0:
        assert sign == 1
    if c is Classification.RANK1:
        assert sign == -1
