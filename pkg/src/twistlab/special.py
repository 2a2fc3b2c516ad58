"""Digamma and the upper incomplete gamma function for complex arguments.

Both are written against numpy arrays. The incomplete gamma routine is the
work horse of the L-function evaluator, so it is vectorised over the second
argument for a fixed first argument.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sp

from .errors import NonConvergence

EULER_GAMMA = 0.57721566490153286061

# B_{2k} / (2k) for the digamma asymptotic series
_DIGAMMA_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)


def digamma(z):
    """Complex digamma psi(z) = Gamma'(z)/Gamma(z).

    Shifts Re z above 10 with psi(z) = psi(z+1) - 1/z and then sums the
    Stirling series. Reflection handles Re z < 1/2.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    out = np.zeros_like(z)

    reflect = z.real < 0.5
    if np.any(reflect):
        zr = z[reflect]
        out[reflect] = -np.pi / np.tan(np.pi * zr)
        z[reflect] = 1.0 - zr

    acc = np.zeros_like(z)
    while True:
        small = z.real < 10.0
        if not np.any(small):
            break
        acc[small] -= 1.0 / z[small]
        z[small] += 1.0

    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    for coef in reversed(_DIGAMMA_ASYMPTOTIC):
        series = series * inv2 + coef
    series *= inv2
    res = np.log(z) - 0.5 / z - series + acc
    out = out + res
    return out[0] if scalar else out


def expm1c(z):
    """exp(z) - 1 without cancellation for complex z."""
    z = np.asarray(z, dtype=complex)
    return 2.0 * np.exp(0.5 * z) * np.sinh(0.5 * z)


def _expm1_over(z):
    z = np.asarray(z, dtype=complex)
    # Taylor branch for small |z|; complex division by subnormals is unreliable
    out = np.atleast_1d(1.0 + z / 2.0 + z * z / 6.0)
    zz = np.atleast_1d(z)
    big = np.abs(zz) > 1e-5
    out[big] = expm1c(zz[big]) / zz[big]
    return out.reshape(z.shape)


_ZETA = None


def _zeta_table(n: int = 90) -> np.ndarray:
    global _ZETA
    if _ZETA is None or len(_ZETA) < n + 1:
        tab = np.zeros(n + 1)
        tab[2:] = sp.zeta(np.arange(2, n + 1), 1)
        _ZETA = tab
    return _ZETA


def _gamma_minus_pole_over_eps(eps: complex, k: int) -> complex:
    """(Gamma(-k+eps) - (-1)^k/(k! eps)) computed without cancellation.

    Writes Gamma(-k+eps) = (-1)^k/(k! eps) * exp(u) with
    u = lnGamma(1+eps) - sum_{m<=k} ln(1 - eps/m), and evaluates
    expm1(u)/eps through the power series of u/eps.
    """
    zeta = _zeta_table()
    nterms = len(zeta) - 1
    # u/eps = -gamma + sum_{j>=2} (-1)^j zeta(j) eps^(j-1)/j + sum_m sum_j eps^(j-1)/(j m^j)
    u_over = -EULER_GAMMA
    p = 1.0 + 0j
    for j in range(2, nterms + 1):
        p *= eps
        u_over += (-1) ** j * zeta[j] * p / j
    for m in range(1, k + 1):
        p = 1.0 + 0j
        for j in range(1, nterms + 1):
            u_over += p / (j * m**j)
            p *= eps
    u = u_over * eps
    val = _expm1_over(u) * u_over
    return complex((-1) ** k / math.factorial(k) * val)


def _series_near_pole(a: complex, k: int, x: np.ndarray) -> np.ndarray:
    eps = a + k
    logx = np.log(x)
    head = _gamma_minus_pole_over_eps(eps, k)
    # (x^eps - 1)/eps
    xe = logx * _expm1_over(eps * logx)
    res = np.full(x.shape, head, dtype=complex) - (-1) ** k / math.factorial(k) * xe
    xa = np.exp(a * logx)
    term_pow = xa.copy()
    fact = 1.0
    total = np.zeros_like(x)
    for j in range(0, 200):
        if j > 0:
            term_pow = term_pow * x
            fact *= j
        if j == k:
            continue
        t = (-1) ** j * term_pow / (fact * (a + j))
        total += t
        if j > k + 2 and np.all(np.abs(t) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    else:
        raise NonConvergence("incomplete gamma: near-pole series did not converge")
    return res - total


def _lower_series(a: complex, x: np.ndarray, max_iter: int) -> np.ndarray:
    # gamma(a, x) = x^a e^-x sum_k x^k / (a (a+1) ... (a+k))
    term = np.full(x.shape, 1.0 / a, dtype=complex)
    total = term.copy()
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, max_iter):
        term[active] *= x[active] / (a + k)
        total[active] += term[active]
        active &= np.abs(term) > 1e-17 * np.abs(total)
        if not np.any(active):
            break
    else:
        raise NonConvergence("incomplete gamma: power series did not converge")
    return np.exp(a * np.log(x) - x) * total


def _upper_cf(a: complex, x: np.ndarray, max_iter: int) -> np.ndarray:
    # modified Lentz on the Legendre continued fraction; the working set is
    # compacted only once at least half of it has converged
    tiny = 1e-300
    idx = np.arange(x.size)
    b = x + 1.0 - a
    c = np.full(x.shape, 1.0 / tiny, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    out = np.empty_like(h)
    for i in range(1, max_iter):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d[np.abs(d) < tiny] = tiny
        c = b + an / c
        c[np.abs(c) < tiny] = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if i % 4 == 0:
            live = np.abs(delta - 1.0) > 1e-16
            n_live = int(np.count_nonzero(live))
            if n_live == 0:
                out[idx] = h
                break
            if 2 * n_live <= idx.size:
                done = ~live
                out[idx[done]] = h[done]
                idx, b, c, d, h = idx[live], b[live], c[live], d[live], h[live]
    else:
        raise NonConvergence("incomplete gamma: continued fraction did not converge")
    return np.exp(a * np.log(x) - x) * out


def incomplete_gamma_upper(a, x, max_iter: int = 4000):
    """Upper incomplete gamma Gamma(a, x).

    ``a`` is a complex scalar, ``x`` a scalar or array with Re x > 0 (complex
    values are allowed as long as |arg x| < pi/2). The power series is used
    for |x| < |a| + 1, the continued fraction otherwise; near the poles of
    Gamma(a) at non-positive integers the series is rearranged so the pole
    cancels analytically.
    """
    a = complex(a)
    xarr = np.asarray(x, dtype=complex)
    scalar = xarr.ndim == 0
    xarr = np.atleast_1d(xarr)
    if np.any(xarr.real <= 0):
        raise ValueError("incomplete_gamma_upper needs Re x > 0")
    out = np.empty(xarr.shape, dtype=complex)

    series = np.abs(xarr) < abs(a) + 1.0
    if np.any(series):
        xs = xarr[series]
        k = -int(round(a.real))
        if k >= 0 and abs(a + k) < 0.5:
            out[series] = _series_near_pole(a, k, xs)
        else:
            out[series] = sp.gamma(a) - _lower_series(a, xs, max_iter)
    cf = ~series
    if np.any(cf):
        out[cf] = _upper_cf(a, xarr[cf], max_iter)
    return out[0] if scalar else out


def loggamma(z):
    """Principal-branch complex log Gamma."""
    return sp.loggamma(np.asarray(z, dtype=complex))
