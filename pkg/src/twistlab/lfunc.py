"""Completed twisted L-functions Lambda(s) = Q0^s Gamma(s+1/2) L(s).

Values come from the approximate functional equation with incomplete gamma
weights. Two free parameters of that identity are used:

* a split ``A``: the first sum gets Gamma(s+1/2, A x_n), the second
  Gamma(3/2-s, x_n/A). The value does not depend on A, so comparing
  A != 1 against the reflected evaluation is a genuine check of the
  functional equation (at A = 1 it holds by construction).
* a rotation ``phi`` of the incomplete gamma argument on the critical line,
  which removes the exp(pi |t| / 2) cancellation between the two sums at
  large heights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import EllipticCurve, coefficients_up_to
from .errors import (
    ConfigError,
    RealityViolation,
    SignAmbiguous,
    StepUnderflow,
    TruncationInsufficient,
)
from .special import incomplete_gamma_upper, loggamma
from .twist import TwistDescriptor, chi_array, fundamental_discriminants, twisted_coefficients

DISK_RADIUS = 1.2
# evaluation is accurate well beyond the audit disk; the Dirichlet-series check uses s = 2.5
EVAL_RADIUS = 2.5
LARGE_D_LIMIT = 500


@dataclass(frozen=True)
class EvaluationSettings:
    target_abs_error: float = 1e-9
    max_terms: int = 2_000_000
    derivative_step: float = 0.2
    derivative_levels: int = 6
    rotation_c: float = 8.0
    height_cap: float = 40.0
    split: float = 1.15
    cutoff_margin: float = 20.0

    @property
    def log_cutoff(self) -> float:
        return math.log(1.0 / self.target_abs_error) + self.cutoff_margin


def check_twist_size(curve: EllipticCurve, d: int) -> None:
    if curve.conductor >= 37 and abs(d) > LARGE_D_LIMIT:
        raise ConfigError(f"|d| > {LARGE_D_LIMIT} is not supported for conductor {curve.conductor}")


class CompletedLFunction:
    """Lambda(s, E x chi_d) with certified truncation of both sums."""

    def __init__(
        self,
        twist: TwistDescriptor,
        settings: EvaluationSettings | None = None,
        sign: int | None = None,
        conductor: int | None = None,
    ):
        check_twist_size(twist.curve, twist.d)
        self.twist = twist
        self.settings = settings or EvaluationSettings()
        self.sign = twist.sign if sign is None else sign
        base_M = twist.curve.conductor if conductor is None else conductor
        self.N_cond = base_M * twist.d * twist.d
        self.Q0 = math.sqrt(self.N_cond) / (2.0 * math.pi)
        self.log_Q0 = math.log(self.Q0)
        # enough terms for the whole disk; the critical line extends on demand
        self.truncation_length = 0
        self._ensure(self._cutoff_n(2.2, self.settings.split, 0.0))

    def _ensure(self, n_need: int) -> None:
        if n_need <= self.truncation_length:
            return
        n_need = max(n_need, int(1.5 * self.truncation_length))
        if n_need > self.settings.max_terms:
            raise TruncationInsufficient(f"needs {n_need} terms > max_terms={self.settings.max_terms}")
        table = coefficients_up_to(self.twist.curve, n_need)
        self.coeffs = twisted_coefficients(table, self.twist.d)
        a = self.coeffs.analytic(n_need)
        nz = np.nonzero(a)[0]
        self._n = nz.astype(float)
        self._a = a[nz]
        self._logn = np.log(self._n)
        self._x = self._n / self.Q0
        self.truncation_length = n_need

    # -- truncation ---------------------------------------------------------
    def _rotation(self, t: float) -> float:
        if abs(t) * (math.pi / 2) <= self.settings.rotation_c:
            return 0.0
        return math.pi / 2 - self.settings.rotation_c / abs(t)

    def _cutoff_x(self, re_a: float, scale: float, phi: float) -> float:
        # smallest x with scale*x*cos(phi) - (re_a - 1) ln(scale*x) >= log_cutoff
        c = scale * math.cos(phi)
        L = self.settings.log_cutoff
        x = L / c
        for _ in range(30):
            x = (L + max(re_a - 1.0, 0.0) * max(math.log(scale * x), 0.0)) / c
        return x

    def _cutoff_n(self, re_a: float, scale: float, phi: float) -> int:
        return int(math.ceil(self._cutoff_x(re_a, scale, phi) * self.Q0)) + 1

    def _sum(self, s: complex, z: complex) -> tuple[complex, float, float]:
        """sum_n a_n (Q0/n)^s Gamma(s+1/2, x_n z), with rounding and tail scale."""
        a_par = s + 0.5
        xcut = self._cutoff_x(a_par.real, abs(z), abs(math.atan2(z.imag, z.real)))
        if xcut * self.Q0 >= self.truncation_length:
            self._ensure(int(math.ceil(xcut * self.Q0)) + 1)
        k = int(np.searchsorted(self._x, xcut, side="right"))
        k = max(k, 1)
        ig = incomplete_gamma_upper(a_par, self._x[:k] * z)
        terms = self._a[:k] * np.exp(s * (self.log_Q0 - self._logn[:k])) * ig
        total = complex(terms.sum())
        mag = float(np.abs(terms).sum())
        return total, mag, float(abs(terms[-1]))

    def _evaluate(self, s: complex, split: float, phi: float) -> tuple[complex, float]:
        s = complex(s)
        z = split * complex(math.cos(phi), math.sin(phi))
        zr = complex(math.cos(phi), -math.sin(phi)) / split
        t1, m1, l1 = self._sum(s, z)
        t2, m2, l2 = self._sum(1.0 - s, zr)
        val = t1 + self.sign * t2
        err = 1e-15 * (m1 + m2) + 2.0 * (l1 + l2)
        return val, err

    def _phi_for(self, s: complex) -> float:
        return math.copysign(self._rotation(s.imag), s.imag) if s.imag else 0.0

    # -- public evaluation ---------------------------------------------------
    def lambda_at(self, s: complex, split: float = 1.0) -> complex:
        return self.lambda_with_error(s, split)[0]

    def lambda_with_error(self, s: complex, split: float = 1.0) -> tuple[complex, float]:
        s = complex(s)
        if abs(s - 0.5) > EVAL_RADIUS + 1e-12 and abs(s.real - 0.5) > 1e-12:
            raise ValueError(f"s must lie in |s - 1/2| <= {EVAL_RADIUS} or on the critical line")
        return self._evaluate(s, split, self._phi_for(s))

    def log_gamma_factor(self, s: complex) -> complex:
        """ln(Q0^s Gamma(s+1/2)), the difference ln Lambda - ln L."""
        s = complex(s)
        return s * self.log_Q0 + complex(loggamma(s + 0.5))

    def l_at(self, s: complex) -> complex:
        s = complex(s)
        return self.lambda_at(s) * complex(np.exp(-self.log_gamma_factor(s)))

    def fe_residual(self, s: complex, split: float | None = None) -> float:
        """|Lambda(s) - w Lambda(1-s)| / (1 + |Lambda(s)|) with a non-trivial split."""
        A = self.settings.split if split is None else split
        lhs = self._evaluate(complex(s), A, 0.0)[0]
        rhs = self._evaluate(1.0 - complex(s), A, 0.0)[0]
        return abs(lhs - self.sign * rhs) / (1.0 + abs(lhs))

    def conj_residual(self, s: complex) -> float:
        s = complex(s)
        return abs(self.lambda_at(s.conjugate()) - self.lambda_at(s).conjugate())

    # -- critical line -------------------------------------------------------
    def z_real(self, t: float, check: bool = False) -> float:
        """Real rotation of Lambda(1/2 + it): Lambda for even sign, Lambda/i for odd.

        The fast path uses the symmetric split, where the second sum is the
        conjugate of the first. With ``check=True`` both sums are evaluated
        with an asymmetric split and the imaginary residue is tested.
        """
        t = float(t)
        if abs(t) > self.settings.height_cap:
            raise ValueError(f"|t| exceeds height cap {self.settings.height_cap}")
        if check:
            return self._z_checked(t)
        at = abs(t)
        s = complex(0.5, at)
        phi = self._rotation(at)
        T, _, _ = self._sum(s, complex(math.cos(phi), math.sin(phi)))
        if self.sign == 1:
            return 2.0 * T.real
        v = 2.0 * T.imag
        return v if t >= 0 else -v

    def _z_checked(self, t: float) -> float:
        s = complex(0.5, t)
        val, err = self._evaluate(s, self.settings.split, self._phi_for(s))
        rot = val if self.sign == 1 else val / 1j
        # compare in L units so that the exponential decay of Gamma drops out
        scale = abs(complex(np.exp(self.log_gamma_factor(s))))
        resid = abs(rot.imag) / scale
        tol = 10 * self.settings.target_abs_error + 10 * err / scale
        if resid > tol:
            raise RealityViolation(f"imaginary residue {resid:.3e} at t={t} (tol {tol:.1e})")
        return rot.real

    def reality_residual(self, t: float) -> float:
        s = complex(0.5, t)
        val, _ = self._evaluate(s, self.settings.split, self._phi_for(s))
        rot = val if self.sign == 1 else val / 1j
        return abs(rot.imag) / abs(complex(np.exp(self.log_gamma_factor(s))))

    def central_value(self) -> float:
        return self.z_real(0.0) if self.sign == 1 else 0.0

    def central_derivatives(self) -> "CentralData":
        """(Lambda, Lambda', Lambda'') at 1/2 by Richardson extrapolation along t."""
        h0 = self.settings.derivative_step
        levels = self.settings.derivative_levels
        z0 = self.z_real(0.0)
        if self.sign == 1:
            # z even: z''(0) = -Lambda''(1/2)
            def diff(h):
                return 2.0 * (self.z_real(h) - z0) / (h * h)
        else:
            # z odd: z'(0) = Lambda'(1/2)
            def diff(h):
                return self.z_real(h) / h

        value, err = _richardson(diff, h0, levels, tol=1e-9)
        lam0 = z0 if self.sign == 1 else 0.0
        if self.sign == 1:
            lam1, lam2, err1, err2 = 0.0, -value, 0.0, err
        else:
            lam1, lam2, err1, err2 = value, 0.0, err, 0.0
        return CentralData(
            lam0=lam0,
            lam1=lam1,
            lam2=lam2,
            err0=10 * self.settings.target_abs_error,
            err1=err1,
            err2=err2,
            sqrt_Q0=math.sqrt(self.Q0),
        )


@dataclass(frozen=True)
class CentralData:
    lam0: float
    lam1: float
    lam2: float
    err0: float
    err1: float
    err2: float
    sqrt_Q0: float

    @property
    def L0(self) -> float:
        # Gamma(1) = 1, so L(1/2) = Lambda(1/2)/sqrt(Q0)
        return self.lam0 / self.sqrt_Q0

    @property
    def L1(self) -> float:
        # valid when Lambda(1/2) = 0, i.e. odd sign
        return self.lam1 / self.sqrt_Q0


def _richardson(diff, h0: float, levels: int, tol: float) -> tuple[float, float]:
    table: list[list[float]] = []
    h = h0
    best, best_err = None, math.inf
    for i in range(levels + 4):
        if h < 1e-5:
            break
        row = [diff(h)]
        for j in range(1, i + 1):
            f = 4.0**j
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (f - 1.0))
        if i:
            e = abs(row[i] - table[i - 1][i - 1])
            if e < best_err:
                best, best_err = row[i], e
            if i >= levels - 1 and best_err < tol:
                return best, best_err
        table.append(row)
        h /= 2.0
    if best is None or best_err > 1e-7:
        raise StepUnderflow(f"derivative did not settle (error {best_err:.2e})")
    return best, best_err


def fricke_ratio(curve: EllipticCurve, d: int, y_factor: float = 1.1, conductor: int | None = None) -> float:
    """g(1/(N y)) / (N y^2 g(y)) with g(y) = sum A_d(n) exp(-2 pi n y)."""
    M = curve.conductor if conductor is None else conductor
    N = M * d * d
    y = y_factor / math.sqrt(N)
    y_small = min(y, 1.0 / (N * y))
    n_max = int(math.ceil(45.0 / (2 * math.pi * y_small))) + 2
    table = coefficients_up_to(curve, n_max)
    A = table.classical[: n_max + 1] * chi_array(d, n_max) if d != 1 else table.classical[: n_max + 1]
    n = np.arange(n_max + 1, dtype=float)

    def g(yy):
        return float(np.sum(A * np.exp(-2 * math.pi * n * yy)))

    return g(1.0 / (N * y)) / (N * y * y * g(y))


def numeric_sign(curve: EllipticCurve, d: int, conductor: int | None = None, tol: float = 1e-4) -> int:
    """Root number read off the Fricke involution applied to the twisted form."""
    orient = fricke_orientation(curve)
    last = None
    for yf in (1.1, 1.27, 0.93, 1.45, 1.6):
        try:
            r = fricke_ratio(curve, d, yf, conductor)
        except ZeroDivisionError:
            continue
        last = r
        if abs(abs(r) - 1.0) < tol:
            return orient * (1 if r > 0 else -1)
    raise SignAmbiguous(f"Fricke ratio {last} is not close to +-1 for d={d}")


_ORIENT: dict[tuple, int] = {}


def fricke_orientation(curve: EllipticCurve) -> int:
    """Fix the sign convention of the Fricke ratio once per curve.

    Takes the first small twist with |r| near 1, evaluates it with sign r and
    keeps that orientation if the functional equation closes and, for an
    even result, the central value is nonzero.
    """
    key = curve.key()
    if key in _ORIENT:
        return _ORIENT[key]
    cands = [1] + sorted(fundamental_discriminants(-40, 40, curve.conductor), key=lambda d: (abs(d), d))
    for d in cands:
        r = fricke_ratio(curve, d)
        if abs(abs(r) - 1.0) > 1e-4:
            continue
        w = 1 if r > 0 else -1
        for orient in (1, -1):
            L = CompletedLFunction(TwistDescriptor(curve, d), sign=orient * w)
            if L.fe_residual(complex(0.8, 0.3)) > 1e-8:
                continue
            if orient * w == 1 and abs(L.central_value()) < 1e-3:
                continue
            _ORIENT[key] = orient
            return orient
    raise SignAmbiguous("could not fix the Fricke orientation")
