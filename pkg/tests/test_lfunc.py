import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab import CompletedLFunction, EvaluationSettings, TwistDescriptor
from twistlab.curve import coefficients_up_to, primes_up_to
from twistlab.errors import ConfigError, SignAmbiguous
from twistlab.lfunc import check_twist_size, fricke_ratio, numeric_sign
from twistlab.twist import chi_array, fundamental_discriminants, kronecker, twist_sign

# L(E, 1) for 11a and L'(E, 1) for 37a, frozen from an independent high-precision computation
L11_AT_1 = 0.25384186085591068
DL37_AT_1 = 0.30599977383405230


def test_central_value_11a(l11):
    assert abs(l11.central_derivatives().L0 - L11_AT_1) < 1e-12


def test_central_derivative_37a(l37):
    cd = l37.central_derivatives()
    assert abs(cd.lam0) < 1e-10
    assert abs(cd.L1 - DL37_AT_1) < 1e-10


def euler_product(E, d, s, p_max=30_000):
    tab = coefficients_up_to(E, p_max)
    val = 1.0 + 0j
    for p in primes_up_to(p_max).tolist():
        chi = kronecker(d, p)
        ap = tab.A(p) * chi / math.sqrt(p)
        if E.conductor % p == 0 or chi == 0:
            val *= 1.0 / (1.0 - ap * p ** (-s))
        else:
            val *= 1.0 / (1.0 - ap * p ** (-s) + p ** (-2 * s))
    return val


@pytest.mark.parametrize("name,d", [("11a", 1), ("11a", -19), ("37a", 5), ("37a", -3)])
def test_matches_euler_product_at_s3(name, d, request):
    E = request.getfixturevalue("e" + name[:2])
    L = CompletedLFunction(TwistDescriptor(E, d))
    s = 3.0 + 0j
    got = L.l_at(s)
    assert abs(got - euler_product(E, d, s)) < 1e-9


TWISTS = [(n, d) for n in ("11a", "37a") for d in (-43, -19, -3, 5, 8, 13, 89)]


@pytest.fixture(scope="module")
def lfuncs(e11, e37):
    curves = {"11a": e11, "37a": e37}
    return {(n, d): CompletedLFunction(TwistDescriptor(curves[n], d)) for n, d in TWISTS if math.gcd(d, curves[n].conductor) == 1}


@given(st.integers(0, 100), st.floats(0.0, 2.0), st.floats(0, 2 * math.pi))
def test_functional_equation_in_disc(lfuncs, k, r, th):
    keys = sorted(lfuncs)
    L = lfuncs[keys[k % len(keys)]]
    s = 0.5 + r * complex(math.cos(th), math.sin(th))
    assert L.fe_residual(s) <= 1e-8


@given(st.integers(0, 100), st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_conjugate_symmetry(lfuncs, k, x, y):
    keys = sorted(lfuncs)
    L = lfuncs[keys[k % len(keys)]]
    s = complex(0.5 + x, y)
    assert L.conj_residual(s) <= 1e-9 * (1 + abs(L.lambda_at(s)))


@given(st.integers(0, 100), st.floats(-35, 35))
def test_real_on_critical_line(lfuncs, k, t):
    keys = sorted(lfuncs)
    L = lfuncs[keys[k % len(keys)]]
    L.z_real(t, check=True)
    assert L.reality_residual(t) <= 1e-8


def test_symmetric_split_check_is_not_vacuous(l11_m19):
    # with split 1 the AFE is symmetric by construction; 1.15 tests the identity
    assert l11_m19.fe_residual(0.9 + 0.2j, split=1.15) < 1e-12


def test_numeric_sign_matches_formula(e11, e37):
    for E in (e11, e37):
        for d in fundamental_discriminants(-80, 80, E.conductor):
            assert numeric_sign(E, d) == twist_sign(E, d)


def test_wrong_conductor_is_detected(e11):
    assert abs(abs(fricke_ratio(e11, -19, 1.1)) - 1) < 1e-6
    with pytest.raises(SignAmbiguous):
        numeric_sign(e11, -19, conductor=11 * 19 * 19 * 4)


def test_twist_size_limit(e37, e11):
    with pytest.raises(ConfigError):
        check_twist_size(e37, 501)
    check_twist_size(e11, 800)


def test_lambda_outside_disc_rejected(l11):
    with pytest.raises(ValueError):
        l11.lambda_at(4.0)


def test_central_value_stable_under_tighter_truncation(e11):
    base = CompletedLFunction(TwistDescriptor(e11, -43))
    tight = CompletedLFunction(TwistDescriptor(e11, -43), EvaluationSettings(target_abs_error=1e-13))
    assert tight.truncation_length > base.truncation_length
    assert abs(base.z_real(7.3) - tight.z_real(7.3)) < 1e-8
    assert abs(base.central_value() - tight.central_value()) < 1e-8


def test_odd_central_value_reported_zero(l11_m19):
    cd = l11_m19.central_derivatives()
    assert l11_m19.sign == -1
    assert abs(cd.lam0) < 1e-10
    assert cd.lam1 > 0


def test_dirichlet_coefficients_twisted(l11_m19, e11):
    tab = coefficients_up_to(e11, 50)
    a = l11_m19.coeffs.analytic(50)
    chi = chi_array(-19, 50)
    assert np.allclose(a[1:51], tab.analytic[1:51] * chi[1:51])
