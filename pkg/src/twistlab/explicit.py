"""Explicit formula for twisted L-functions and its test functions.

For an even or complex test function g of compact support with
h(r) = int g(x) e^{irx} dx, the zeros 1/2 + i gamma of Lambda satisfy

    sum_gamma h(gamma) = (1/2pi) int h(r) (ln N - 2 ln 2pi + 2 Re psi(1+ir)) dr
                         - sum_n c(n)/sqrt(n) (g(ln n) + g(-ln n))

where -L'/L(s) = sum c(n) n^{-s}. The sum over zeros runs over the full
symmetric multiset, central zeros included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .curve import coefficients_up_to, primes_up_to
from .errors import InsufficientCoefficients, QuadratureFailure, TailTooFat
from .special import EULER_GAMMA, digamma
from .twist import kronecker

TWO_PI = 2.0 * math.pi


# -- test function pairs -----------------------------------------------------


@dataclass(frozen=True)
class TestFunctionPair:
    """g with support [-X, X] and its transform h(r) = int g(x) e^{irx} dx.

    ``tail_sup(T)`` bounds sup_{|r| >= T} |h(r)| and ``tail_dsup(T)`` bounds
    int_{|r| >= T} |h'(r)| dr; both feed the closure error budget.
    """

    __test__ = False

    g: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    support_X: float
    name: str
    tail_sup: Callable[[float], float]
    tail_dsup: Callable[[float], float]
    even: bool = True
    # (1 - cos(X r)) / r^2 structure lets the archimedean tail use a Fourier weight
    fejer_X: float | None = None

    def scaled(self, lam: float) -> "TestFunctionPair":
        return TestFunctionPair(
            g=lambda x: lam * self.g(x),
            h=lambda r: lam * self.h(r),
            support_X=self.support_X,
            name=f"{lam}*{self.name}",
            tail_sup=lambda T: abs(lam) * self.tail_sup(T),
            tail_dsup=lambda T: abs(lam) * self.tail_dsup(T),
            even=self.even,
            fejer_X=self.fejer_X if lam == 1 else None,
        )

    def __add__(self, other: "TestFunctionPair") -> "TestFunctionPair":
        return TestFunctionPair(
            g=lambda x: self.g(x) + other.g(x),
            h=lambda r: self.h(r) + other.h(r),
            support_X=max(self.support_X, other.support_X),
            name=f"{self.name}+{other.name}",
            tail_sup=lambda T: self.tail_sup(T) + other.tail_sup(T),
            tail_dsup=lambda T: self.tail_dsup(T) + other.tail_dsup(T),
            even=self.even and other.even,
        )


def fejer_pair(X: float) -> TestFunctionPair:
    """Triangle g(x) = max(0, 1 - |x|/X) with h(r) = X sinc^2(X r / 2)."""
    if X <= 0:
        raise ValueError("support X must be positive")

    def g(x):
        return np.maximum(0.0, 1.0 - np.abs(np.asarray(x, dtype=float)) / X)

    def h(r):
        return X * np.sinc(X * np.asarray(r, dtype=float) / TWO_PI) ** 2

    return TestFunctionPair(
        g=g,
        h=h,
        support_X=X,
        name=f"fejer:{X:g}",
        tail_sup=lambda T: 4.0 / (X * T * T),
        # |h'| <= 2/r^2 + 8/(X r^3) on each side
        tail_dsup=lambda T: 2.0 * (2.0 / T + 4.0 / (X * T * T)),
        fejer_X=X,
    )


def transform_by_quadrature(g: Callable, X: float, r: np.ndarray, nodes: int = 4001) -> np.ndarray:
    """int_{-X}^{X} g(x) e^{irx} dx by composite Gauss-Legendre on 400 panels."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    panels = max(nodes // 10, 50)
    xg, wg = np.polynomial.legendre.leggauss(10)
    edges = np.linspace(-X, X, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    gx = np.asarray(g(x), dtype=complex) * w
    out = np.empty(r.shape, dtype=complex)
    for i in range(0, r.size, 64):
        out[i : i + 64] = np.exp(1j * np.outer(r[i : i + 64], x)) @ gx
    return out


# -- the bump family -----------------------------------------------------------

_F0_NODES = 1601


@lru_cache(maxsize=1)
def _f0_grid() -> tuple[np.ndarray, np.ndarray, float, float]:
    x = np.linspace(-0.5, 0.5, _F0_NODES)
    dx = x[1] - x[0]
    inner = np.abs(x) < 0.5
    prof = np.zeros_like(x)
    prof[inner] = np.exp(-1.0 / (1.0 - 4.0 * x[inner] ** 2))
    # scale so that int f0^2 = 1/(2 pi); then f(0) = 1/(2 pi) and int fhat = 1
    C = 1.0 / math.sqrt(TWO_PI * np.sum(prof**2) * dx)
    return x, C * prof, dx, C


def f0(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    C = _f0_grid()[3]
    out = np.zeros_like(x)
    inner = np.abs(x) < 0.5
    out[inner] = C * np.exp(-1.0 / (1.0 - 4.0 * x[inner] ** 2))
    return out


def f0_hat(r) -> np.ndarray:
    # the profile is flat at both ends, so the trapezoid rule is spectrally accurate
    x, prof, dx, _ = _f0_grid()
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(r.shape)
    for i in range(0, r.size, 512):
        out[i : i + 512] = np.cos(np.outer(r[i : i + 512], x)) @ prof * dx
    return out


def f_conv(x, nodes: int = 801) -> np.ndarray:
    """f = f0 * f0 on [-1, 1] by quadrature over the overlap of the supports."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape)
    ax = np.abs(x)
    inside = ax < 1.0
    if not np.any(inside):
        return out
    xi = ax[inside]
    # overlap is [x - 1/2, 1/2] for x >= 0
    u = np.linspace(0.0, 1.0, nodes)
    lo = xi - 0.5
    y = lo[:, None] + (0.5 - lo)[:, None] * u[None, :]
    vals = f0(y) * f0(xi[:, None] - y)
    out[inside] = vals.sum(axis=1) * (0.5 - lo) / (nodes - 1)
    return out


FHAT_RMAX = 420.0


@lru_cache(maxsize=1)
def _fhat_antiderivative() -> CubicSpline:
    r = np.linspace(0.0, FHAT_RMAX, int(FHAT_RMAX / 0.01) + 1)
    fh = f0_hat(r) ** 2
    spline = CubicSpline(r, fh)
    return spline.antiderivative()


def fhat(r) -> np.ndarray:
    """Transform of f = f0 * f0, equal to f0_hat^2 and hence non-negative."""
    return f0_hat(r) ** 2


def big_g(u) -> np.ndarray:
    """G(u) = int_0^u fhat = int f(x) sin(ux)/x dx, odd, tending to +-1/2."""
    u = np.asarray(u, dtype=float)
    anti = _fhat_antiderivative()
    au = np.abs(u)
    # past FHAT_RMAX the remaining mass of fhat is below 1e-16
    vals = np.where(au >= FHAT_RMAX, 0.5, anti(np.minimum(au, FHAT_RMAX)))
    return np.sign(u) * vals


@dataclass(frozen=True)
class BumpFamily:
    """f_Q, fhat_Q, I_Q = 1_[a,b] * fhat_Q and g_Q with transform I_Q."""

    Q: float
    a: float
    b: float

    def __post_init__(self):
        if self.Q < 1.0:
            raise ValueError("Q must be at least 1")
        if not self.a < self.b:
            raise ValueError("need a < b")

    def f_Q(self, x):
        return f_conv(np.asarray(x, dtype=float) / self.Q)

    def fhat_Q(self, r):
        return self.Q * fhat(self.Q * np.asarray(r, dtype=float))

    def I_Q(self, r):
        r = np.asarray(r, dtype=float)
        return big_g(self.Q * (r - self.a)) - big_g(self.Q * (r - self.b))

    def g_Q(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=complex)).real
        fq = self.f_Q(x)
        out = np.empty(x.shape, dtype=complex)
        small = np.abs(x) < 1e-8
        xs = x[~small]
        out[~small] = (np.exp(-1j * self.a * xs) - np.exp(-1j * self.b * xs)) / (1j * xs) * fq[~small]
        # removable singularity: (b - a) f_Q(0), plus the first-order term
        out[small] = ((self.b - self.a) - 0.5j * (self.b**2 - self.a**2) * x[small]) * fq[small]
        return out

    def pair(self) -> TestFunctionPair:
        Q, a, b = self.Q, self.a, self.b

        def tail_sup(T):
            # I_Q(r) <= int_{Q(|r|-max|a|,|b|)}^inf fhat
            u = Q * (T - max(abs(a), abs(b)))
            return _fhat_tail(u)

        return TestFunctionPair(
            g=self.g_Q,
            h=self.I_Q,
            support_X=Q,
            name=f"bump:Q={Q:g},a={a:g},b={b:g}",
            tail_sup=tail_sup,
            tail_dsup=lambda T: 2.0 * tail_sup(T),
            even=(a == -b),
        )

    def check_invariants(self) -> dict:
        r = np.linspace(-60.0, 60.0, 4001)
        fh = fhat(r)
        total = float(2.0 * self._fhat_mass())
        return {
            "fhat_min": float(fh.min()),
            "fhat_integral": total,
            "f0_at_0_times_2pi": float(TWO_PI * f_conv(np.array([0.0]))[0]),
        }

    @staticmethod
    def _fhat_mass() -> float:
        return float(_fhat_antiderivative()(FHAT_RMAX))


def _fhat_tail(u: float) -> float:
    if u <= 0:
        return 1.0
    if u >= FHAT_RMAX:
        return 0.0
    anti = _fhat_antiderivative()
    return max(float(0.5 - anti(u)), 0.0)


def build_bump_family(Q: float, a: float, b: float) -> BumpFamily:
    fam = BumpFamily(Q, a, b)
    inv = fam.check_invariants()
    if inv["fhat_min"] < -1e-12 or abs(inv["fhat_integral"] - 1.0) > 1e-8:
        raise QuadratureFailure(f"bump invariants failed: {inv}")
    return fam


# -- coefficients of -L'/L -----------------------------------------------------


@dataclass
class VonMangoldtCoefficients:
    """c_d(p^k) for prime powers up to ``n_max``, keyed by n."""

    d: int
    n_max: int
    values: dict[int, float] = field(default_factory=dict)

    @classmethod
    def build(cls, table, d: int, n_max: float) -> "VonMangoldtCoefficients":
        n_max = int(math.floor(n_max))
        if n_max > table.n_max:
            table = coefficients_up_to(table.curve, n_max)
        out = cls(d, n_max)
        for p in primes_up_to(n_max).tolist():
            chi = kronecker(d, p)
            logp = math.log(p)
            if table.is_good(p):
                al, be = table.satake(p)
            else:
                ap = table.ap[p] / math.sqrt(p)
            pk, k = p, 1
            while pk <= n_max:
                if chi == 0:
                    c = 0.0
                elif table.is_good(p):
                    c = float((al**k + be**k).real) * chi**k * logp
                else:
                    c = ap**k * chi**k * logp
                out.values[pk] = c
                pk *= p
                k += 1
        return out


# -- the two sides ---------------------------------------------------------------


def arch_weight(r, N: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return math.log(N) - 2.0 * math.log(TWO_PI) + 2.0 * digamma(1.0 + 1j * r).real


def zero_density(t, N: float) -> np.ndarray:
    return arch_weight(t, N) / TWO_PI


def _quad(fn, lo, hi, **kw) -> tuple[float, float]:
    val, err = integrate.quad(fn, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-12, **kw)
    return val, err


def archimedean_digamma_r(pair: TestFunctionPair, R: float | None = None) -> tuple[float, float]:
    """(1/2pi) int h(r) 2 Re psi(1+ir) dr in r-space."""

    def w(r):
        return 2.0 * float(digamma(1.0 + 1j * r).real)

    def hre(r):
        return float(np.real(pair.h(np.array([r]))[0]))

    if pair.fejer_X is not None:
        X = pair.fejer_X
        R = 60.0 if R is None else R
        pts = np.linspace(-R, R, int(4 * R * X / math.pi) + 2)
        core, err = 0.0, 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            v, e = _quad(lambda r: hre(r) * w(r), lo, hi)
            core += v
            err += e
        # tail: h = (2/(X r^2)) (1 - cos X r), split into smooth and Fourier parts
        smooth, e1 = _quad(lambda r: w(r) * 2.0 / (X * r * r), R, np.inf)
        osc, e2 = integrate.quad(lambda r: w(r) * 2.0 / (X * r * r), R, np.inf, weight="cos", wvar=X, limlst=200)
        tail = 2.0 * (smooth - osc)
        return (core + tail) / TWO_PI, (err + e1 + e2 + 1e-12) / TWO_PI
    # smooth transforms: composite Gauss-Legendre, panels doubled until stable
    R = R if R is not None else _support_radius(pair)
    xg, wg = np.polynomial.legendre.leggauss(16)
    prev = None
    panels = int(2 * R) + 2
    for _ in range(6):
        edges = np.linspace(-R, R, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        r = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        wts = (half[:, None] * wg[None, :]).ravel()
        val = float(np.sum(wts * np.real(pair.h(r)) * 2.0 * digamma(1.0 + 1j * r).real))
        if prev is not None and abs(val - prev) < 1e-12 * max(1.0, abs(val)):
            break
        prev = val
        panels *= 2
    else:
        raise QuadratureFailure("archimedean integral did not settle under panel doubling")
    tail = pair.tail_sup(R) * 4.0 * math.log(R + 2.0) * R
    return val / TWO_PI, (abs(val - prev) + tail + 1e-14) / TWO_PI


def _support_radius(pair: TestFunctionPair) -> float:
    R = 5.0
    while pair.tail_sup(R) > 1e-17 and R < 5000:
        R *= 1.1
    return R


def archimedean_digamma_x(pair: TestFunctionPair) -> tuple[float, float]:
    """The same quantity in x-space: 2 psi(1) g(0) + int_0^inf (2g(0) - g(t) - g(-t))/(e^t - 1) dt."""
    g0 = float(np.real(pair.g(np.array([0.0]))[0]))

    def integrand(t):
        if t == 0.0:
            return 0.0
        gt = pair.g(np.array([t, -t]))
        return float(np.real(2.0 * g0 - gt[0] - gt[1])) / math.expm1(t)

    X = pair.support_X
    brk = np.linspace(0.0, X, 33)
    total, err = 0.0, 0.0
    for lo, hi in zip(brk[:-1], brk[1:]):
        v, e = _quad(integrand, lo, hi)
        total += v
        err += e
    # beyond the support only 2 g(0) remains
    total += 2.0 * g0 * -math.log(-math.expm1(-X))
    return -2.0 * EULER_GAMMA * g0 + total, err


def ef_archimedean(pair: TestFunctionPair, N: float, method: str = "r") -> tuple[float, float]:
    """(1/2pi) int h(r)(ln N - 2 ln 2pi + 2 Re psi(1+ir)) dr and its error."""
    g0 = float(np.real(pair.g(np.array([0.0]))[0]))
    const = (math.log(N) - 2.0 * math.log(TWO_PI)) * g0
    if method == "r":
        dig, err = archimedean_digamma_r(pair)
    elif method == "x":
        dig, err = archimedean_digamma_x(pair)
    else:
        raise ValueError(method)
    if not math.isfinite(dig):
        raise QuadratureFailure("archimedean integral is not finite")
    return const + dig, err


def ef_prime_sum(pair: TestFunctionPair, vm: VonMangoldtCoefficients) -> float:
    """sum_n c(n)/sqrt(n) (g(ln n) + g(-ln n)) over prime powers n <= e^X."""
    X = pair.support_X
    n_top = math.exp(X)
    if vm.n_max < math.floor(n_top):
        raise InsufficientCoefficients(f"need prime powers up to {n_top:.1f}")
    total = 0.0
    for n, c in vm.values.items():
        if n > n_top or c == 0.0:
            continue
        ln = math.log(n)
        gv = pair.g(np.array([ln, -ln]))
        total += c / math.sqrt(n) * float(np.real(gv[0] + gv[1]))
    return total


def prime_sum_bound(pair: TestFunctionPair, vm: VonMangoldtCoefficients) -> float:
    X = pair.support_X
    return sum(abs(c) / math.sqrt(n) for n, c in vm.values.items() if n <= math.exp(X))


# -- closure and smooth counts ---------------------------------------------------


def multiset(zl) -> np.ndarray:
    """Zero heights as the symmetric multiset, central zeros included."""
    h = np.asarray(zl.heights, dtype=float)
    return np.concatenate([-h[::-1], np.zeros(zl.central_multiplicity), h])


@dataclass(frozen=True)
class ClosureReport:
    pair: str
    lhs: float
    lhs_found: float
    lhs_tail: float
    archimedean: float
    prime_sum: float
    rhs: float
    residual: float
    budget: float
    tolerance: float

    @property
    def closed(self) -> bool:
        return abs(self.residual) <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "pair": self.pair,
            "lhs": self.lhs,
            "lhs_found": self.lhs_found,
            "lhs_tail": self.lhs_tail,
            "archimedean": self.archimedean,
            "prime_sum": self.prime_sum,
            "rhs": self.rhs,
            "residual": self.residual,
            "budget": self.budget,
            "tolerance": self.tolerance,
            "closed": self.closed,
        }


def _tail_model(pair: TestFunctionPair, zl, N: float) -> tuple[float, float]:
    """Expected contribution of zeros beyond the scanned height, and its bound."""
    T = zl.height_cap
    found = np.sum(np.abs(multiset(zl)) <= T)
    smooth_inside = 2.0 * _quad(lambda r: float(zero_density(r, N)), 0.0, T)[0]
    s_tot = found - smooth_inside

    def hw(r):
        rr = np.array([r, -r])
        return float(np.real(pair.h(rr)).sum() * zero_density(r, N))

    if pair.fejer_X is not None:
        X = pair.fejer_X
        smooth, _ = _quad(lambda r: float(zero_density(r, N)) * 4.0 / (X * r * r), T, np.inf)
        osc, _ = integrate.quad(
            lambda r: float(zero_density(r, N)) * 4.0 / (X * r * r), T, np.inf, weight="cos", wvar=X, limlst=200
        )
        mean = smooth - osc
    else:
        mean, _ = _quad(hw, T, T + 400.0)
    hT = 0.5 * float(np.real(pair.h(np.array([T])) + pair.h(np.array([-T])))[0])
    edge = -hT * s_tot
    s_bound = max(abs(s_tot), 1.0)
    budget = pair.tail_dsup(T) * s_bound + pair.tail_sup(T) * 0.5
    return mean + edge, budget


def ef_closure(
    zl,
    pair: TestFunctionPair,
    vm: VonMangoldtCoefficients,
    N: float,
    rel_tol: float = 1e-3,
    max_tail_bound: float = 0.5,
) -> ClosureReport:
    """sum h(gamma) over zeros versus archimedean minus prime sum.

    Zeros above the scanned height enter through their smooth density plus
    an edge correction; ``budget`` carries the worst case of the remainder.
    """
    ms = multiset(zl)
    lhs_found = float(np.real(pair.h(ms)).sum())
    tail, tail_budget = _tail_model(pair, zl, N)
    if tail_budget > max_tail_bound:
        raise TailTooFat(f"{pair.name}: discarded-zero tail bound {tail_budget:.2e} too large at T={zl.height_cap}")
    lhs = lhs_found + tail
    arch, arch_err = ef_archimedean(pair, N)
    ps = ef_prime_sum(pair, vm)
    rhs = arch - ps
    residual = lhs - rhs
    budget = tail_budget + arch_err + 1e-9 * len(ms)
    return ClosureReport(
        pair=pair.name,
        lhs=lhs,
        lhs_found=lhs_found,
        lhs_tail=tail,
        archimedean=arch,
        prime_sum=ps,
        rhs=rhs,
        residual=residual,
        budget=budget,
        tolerance=rel_tol * (1.0 + abs(lhs)),
    )


@dataclass(frozen=True)
class SmoothCount:
    direct: float
    explicit: float
    difference: float
    main_term: float
    sharp_count: int
    sharp_expected: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def smooth_count(zl, fam: BumpFamily, vm: VonMangoldtCoefficients, N: float, d: int) -> SmoothCount:
    """sum I_Q(gamma) directly and through the explicit formula."""
    ms = multiset(zl)
    direct = float(np.sum(fam.I_Q(ms)))
    pair = fam.pair()
    arch, _ = ef_archimedean(pair, N)
    explicit = arch - ef_prime_sum(pair, vm)
    main = (fam.b - fam.a) * math.log(abs(d)) / math.pi if abs(d) > 1 else 0.0
    sharp = int(np.sum((ms >= fam.a) & (ms <= fam.b)))
    sharp_expected = _quad(lambda r: float(zero_density(r, N)), fam.a, fam.b)[0]
    return SmoothCount(direct, explicit, direct - explicit, main, sharp, sharp_expected)


@dataclass(frozen=True)
class AnalysisScale:
    Q: float
    epsilon: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.Q <= 0:
            raise ValueError("Q must be positive")

    @classmethod
    def from_d(cls, d: int, epsilon: float = 0.5) -> "AnalysisScale":
        return cls(math.log(math.log(abs(d))), epsilon)

    @property
    def cut(self) -> float:
        return self.Q ** (-1.0 + self.epsilon)


@dataclass(frozen=True)
class BandReport:
    inner: float
    outer: float
    main_term: float
    cut: float

    @property
    def total(self) -> float:
        return self.inner + self.outer


def band_decomposition(zl, scale: AnalysisScale, d: int | None = None) -> BandReport:
    """Split sum_{0<|gamma|<=1} ln|gamma| at |gamma| = Q^{-1+eps}."""
    h = np.asarray(zl.heights, dtype=float)
    h = h[(h > 0) & (h <= 1.0)]
    cut = scale.cut
    inner = 2.0 * float(np.sum(np.log(h[h < cut])))
    outer = 2.0 * float(np.sum(np.log(h[h >= cut])))
    main = -(2.0 / math.pi) * math.log(abs(d)) if d not in (None, 1, -1) else 0.0
    return BandReport(inner, outer, main, cut)
