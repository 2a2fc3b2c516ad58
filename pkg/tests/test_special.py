import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.special import EULER_GAMMA, digamma, expm1c, incomplete_gamma_upper, loggamma


def test_digamma_at_one():
    assert abs(digamma(1.0) + EULER_GAMMA) < 1e-14


@given(st.floats(0.05, 30), st.floats(-60, 60))
def test_digamma_matches_mpmath(x, y):
    z = complex(x, y)
    ref = complex(mpmath.digamma(mpmath.mpc(x, y)))
    assert abs(digamma(z) - ref) <= 1e-12 * max(1.0, abs(ref))


@given(st.floats(-5, 5), st.floats(-50, 50))
def test_digamma_recurrence(x, y):
    z = complex(x, y)
    if abs(z) < 0.2 or min(abs(z + k) for k in range(8)) < 0.2:
        return
    assert abs(digamma(z + 1) - digamma(z) - 1 / z) < 1e-10 * max(1.0, abs(digamma(z)))


def test_digamma_vectorised():
    z = np.array([1.0, 2.0 + 3j, 0.5 - 1j])
    out = digamma(z)
    assert out.shape == (3,)
    assert abs(out[1] - complex(mpmath.digamma(mpmath.mpc(2, 3)))) < 1e-13


@given(st.floats(-40, 40), st.floats(-40, 40))
def test_loggamma_real_part(x, y):
    if x <= 0 and abs(y) < 1:
        return
    z = complex(x, y)
    ref = float(mpmath.re(mpmath.loggamma(mpmath.mpc(x, y))))
    assert abs(float(np.real(loggamma(z))) - ref) < 1e-10 * max(1, abs(ref))


@pytest.mark.parametrize(
    "a,x",
    [
        (1.5, 0.3),
        (1.5, 20.0),
        (0.5 + 10j, 3.0),
        (-0.5 + 7j, 1.2 + 0.8j),
        (1e-9 + 0j, 0.7),
        (-2 + 1e-8j, 4.0),
        (1.0 - 30j, 0.05 + 2j),
        (2.0 + 35j, 40 * np.exp(0.1j)),
    ],
)
def test_incomplete_gamma_points(a, x):
    ref = complex(mpmath.gammainc(mpmath.mpc(complex(a)), mpmath.mpc(complex(x))))
    got = complex(incomplete_gamma_upper(a, x))
    assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref))


@given(
    st.floats(-1.5, 2.0),
    st.floats(-40, 40),
    st.floats(0.01, 60),
    st.floats(-1.4, 1.4),
)
def test_incomplete_gamma_matches_mpmath(ar, ai, r, phi):
    a = complex(ar, ai)
    x = r * complex(math.cos(phi), math.sin(phi))
    ref = complex(mpmath.gammainc(mpmath.mpc(ar, ai), mpmath.mpc(x.real, x.imag)))
    got = complex(incomplete_gamma_upper(a, x))
    assert abs(got - ref) <= 1e-9 * abs(ref)


def test_incomplete_gamma_rejects_left_half_plane():
    with pytest.raises(ValueError):
        incomplete_gamma_upper(1.0, -1.0)


def test_expm1c():
    for z in (1e-12, 1e-5 + 1e-5j, 0.3 - 2j):
        ref = complex(mpmath.expm1(mpmath.mpc(complex(z))))
        assert abs(complex(expm1c(z)) - ref) <= 1e-14 * max(abs(ref), 1e-300)
