"""Jensen's formula on the unit circle around the central point.

For f = L(s) (even twists) or L(s)/(s - 1/2) (odd twists)

    ln|f(1/2)| = sum_{|gamma| <= 1} ln|gamma| + (1/2pi) int ln|L(1/2 + e^{i theta})| d theta.

L itself vanishes at s = -1/2 (the pole of Gamma(s+1/2)), which sits on the
contour. The boundary term is therefore computed from Lambda, whose
circle mean differs from that of L by (1/2) ln Q0 plus the circle mean of
ln|Gamma(1 + e^{i theta})|, and the latter is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .errors import ContourNearZero, NonConvergence
from .explicit import AnalysisScale
from .lfunc import CompletedLFunction
from .special import loggamma
from .twist import Classification

CONTOUR_FLOOR = 1e-6
REPULSION_REFERENCE = -0.25


def _contour(theta: np.ndarray) -> np.ndarray:
    return 0.5 + np.exp(1j * theta)


def _log_lambda_nodes(L: CompletedLFunction, theta: np.ndarray) -> tuple[np.ndarray, float]:
    vals = np.empty(theta.size)
    err = 0.0
    for i, th in enumerate(theta):
        s = complex(0.5 + math.cos(th), math.sin(th))
        lam, e = L.lambda_with_error(s)
        # the floor applies to |Lambda / Q0^s|, i.e. L without the Gamma factor
        mod = abs(lam) / math.exp(s.real * L.log_Q0)
        if mod < CONTOUR_FLOOR:
            raise ContourNearZero(f"|Lambda/Q0^s| = {mod:.2e} at theta={th:.4f} (d={L.twist.d})")
        vals[i] = math.log(abs(lam))
        err = max(err, e / abs(lam))
    return vals, err


def _near_zeros(zeros: np.ndarray | None, lo: float = 0.4, hi: float = 2.5) -> np.ndarray:
    if zeros is None:
        return np.zeros(0)
    g = np.abs(np.asarray(zeros, dtype=float))
    g = g[(g > lo) & (g < hi)]
    return np.concatenate([g, -g])


@dataclass(frozen=True)
class BoundaryResult:
    lambda_mean: float
    l_mean: float
    gamma_mean: float
    nodes: int
    error: float
    subtracted: int


def boundary_integral(
    L: CompletedLFunction,
    nodes: int = 256,
    zeros=None,
    tol: float = 1e-9,
    max_nodes: int = 8192,
) -> BoundaryResult:
    """(1/2pi) int_0^{2pi} ln|L(1/2 + e^{i theta})| d theta.

    Trapezoid rule on the upper half circle (conjugate symmetry gives the
    lower half), with node doubling. Zeros close to the contour are divided
    out first, ln|s - rho| has the exact circle mean ln max(1, |gamma|).
    """
    rho = _near_zeros(zeros)
    add_back = float(np.sum(np.log(np.maximum(1.0, np.abs(rho)))))
    cache: dict[float, float] = {}
    eval_err = 0.0

    def mean(n: int) -> float:
        nonlocal eval_err
        theta = np.pi * np.arange(n + 1) / n
        need = [th for th in theta if th not in cache]
        if need:
            vals, e = _log_lambda_nodes(L, np.array(need))
            eval_err = max(eval_err, e)
            cache.update(zip(need, vals))
        f = np.array([cache[th] for th in theta])
        if rho.size:
            s = _contour(theta)
            f = f - np.sum(np.log(np.abs(s[:, None] - (0.5 + 1j * rho[None, :]))), axis=1)
        w = np.full(n + 1, 1.0 / n)
        w[0] = w[-1] = 0.5 / n
        return float(np.sum(w * f))

    n = max(nodes // 2, 8)
    prev = mean(n)
    while True:
        n *= 2
        cur = mean(n)
        change = abs(cur - prev)
        if change < tol or 2 * n > max_nodes:
            break
        prev = cur
    if change > 1e-6:
        raise NonConvergence(f"boundary integral did not settle (change {change:.2e} at {2 * n} nodes)")
    lam_mean = cur + add_back
    return BoundaryResult(
        lambda_mean=lam_mean,
        l_mean=lam_mean - 0.5 * L.log_Q0,
        gamma_mean=0.0,
        nodes=2 * n,
        error=change + eval_err,
        subtracted=int(rho.size),
    )


def gamma_circle_mean(a: float = 0.0, b: float = 2 * math.pi) -> float:
    """(1/2pi) int_a^b ln|Gamma(1 + e^{i theta})| d theta (singular at theta = pi)."""

    def fn(th):
        return float(loggamma(1.0 + complex(math.cos(th), math.sin(th))).real)

    pts = [math.pi] if a < math.pi < b else None
    val, _ = integrate.quad(fn, a, b, points=pts, limit=400, epsabs=1e-12)
    return val / (2 * math.pi)


@dataclass(frozen=True)
class JensenLedger:
    d: int
    mode: str
    zero_sum: float
    boundary_integral: float
    boundary_lambda: float
    gamma_contribution: float
    center_value: float
    residual: float
    budget: float
    lowest_zero: float | None
    repulsion_exponent: float | None
    reference: float = REPULSION_REFERENCE

    def as_dict(self) -> dict:
        return asdict(self)


def close_ledger(
    zl,
    L: CompletedLFunction,
    classification: Classification | None = None,
    nodes: int = 256,
) -> JensenLedger:
    """Assemble zero sum, boundary mean and central value; report the residual."""
    if classification is None:
        classification = Classification.RANK0 if zl.central_multiplicity == 0 else Classification.RANK1
    if classification not in (Classification.RANK0, Classification.RANK1):
        raise ValueError(f"ledger needs a Rank0 or Rank1 twist, got {classification.value}")
    if zl.height_cap < 2.5:
        raise ValueError("zeros must be known up to height 2.5")
    mode = "even" if classification is Classification.RANK0 else "odd"
    h = np.asarray(zl.heights)
    inside = h[h <= 1.0]
    zero_sum = 2.0 * float(np.sum(np.log(inside)))
    bd = boundary_integral(L, nodes=nodes, zeros=h)
    cd = L.central_derivatives()
    if mode == "even":
        center_lam, center_err = cd.lam0, cd.err0
    else:
        center_lam, center_err = cd.lam1, cd.err1
    # ln|L(1/2)| = ln|Lambda(1/2)| - (1/2) ln Q0, likewise for the derivative in odd mode
    center = math.log(abs(center_lam)) - 0.5 * L.log_Q0
    residual = zero_sum + bd.l_mean - center
    budget = bd.error + center_err / abs(center_lam) + 1e-9 * (inside.size + 1)
    gd = float(h[0]) if h.size else None
    d = L.twist.d
    expo = math.log(gd) / math.log(abs(d)) if gd is not None and abs(d) > 1 else None
    return JensenLedger(
        d=d,
        mode=mode,
        zero_sum=zero_sum,
        boundary_integral=bd.l_mean,
        boundary_lambda=bd.lambda_mean,
        gamma_contribution=bd.gamma_mean,
        center_value=center,
        residual=residual,
        budget=budget,
        lowest_zero=gd,
        repulsion_exponent=expo,
    )


def synthetic_residual(zero_sum: float, boundary: float, center: float) -> float:
    return zero_sum + boundary - center


@dataclass(frozen=True)
class ProfileReport:
    regions: dict
    total: float
    reflection_max: float
    mirror_max: float
    envelope_constant: float
    cut: float

    def as_dict(self) -> dict:
        return asdict(self)


def boundary_profile(L: CompletedLFunction, scale: AnalysisScale, nodes: int = 512) -> ProfileReport:
    """Split the contour into the near-critical strip and the two semicircles.

    Region integrals of ln|L| use adaptive quadrature (the left region
    contains the trivial zero at theta = pi, an integrable singularity).
    """
    cut = scale.cut
    theta = 2 * np.pi * np.arange(nodes) / nodes
    s = _contour(theta)
    loglam, _ = _log_lambda_nodes(L, theta)
    sigma = s.real
    right = sigma - 0.5 >= cut

    def log_l(th):
        z = complex(0.5 + math.cos(th), math.sin(th))
        return math.log(abs(L.lambda_at(z))) - z.real * L.log_Q0 - float(loggamma(z + 0.5).real)

    def region(a, b, pts=None):
        val, _ = integrate.quad(log_l, a, b, points=pts, limit=200, epsabs=1e-11, epsrel=1e-11)
        return val / (2 * math.pi)

    alpha = math.acos(min(cut, 1.0))
    regions = {
        "right": region(-alpha, alpha),
        "strip": region(alpha, math.pi - alpha) + region(math.pi + alpha, 2 * math.pi - alpha),
        "left": region(math.pi - alpha, math.pi + alpha, [math.pi]),
    }
    q_part = sigma * L.log_Q0
    total = float(sum(regions.values()))

    # |Lambda(1/2 + e^{i theta})| = |Lambda(1/2 + e^{i(pi - theta)})|
    mirror_theta = np.mod(np.pi - theta, 2 * np.pi)
    mirror_vals, _ = _log_lambda_nodes(L, mirror_theta[: nodes // 4 + 1])
    reflection = np.abs(mirror_vals - loglam[: nodes // 4 + 1])

    # ln|L(s_L)| - ln|L(s_R)| = (1 - 2 sigma_L) ln Q0 + ln|Gamma(s_R + 1/2)| - ln|Gamma(s_L + 1/2)|
    idx = np.nonzero(right)[0][:16]
    mirror_err = 0.0
    for i in idx:
        sR = complex(s[i])
        sL = 1.0 - sR.conjugate()
        lL = math.log(abs(L.l_at(sL)))
        lR = math.log(abs(L.l_at(sR)))
        pred = (1.0 - 2.0 * sL.real) * L.log_Q0 + float(loggamma(sR + 0.5).real) - float(loggamma(sL + 0.5).real)
        mirror_err = max(mirror_err, abs((lL - lR) - pred))

    # fitted constant of the right-semicircle envelope (diagnostic)
    d = abs(L.twist.d) if abs(L.twist.d) > 1 else 3
    ld = math.log(d)
    env_c = 0.0
    for i in np.nonzero(right)[0]:
        sg = sigma[i]
        env = ld ** (2 - 2 * sg) / ((2 * sg - 1) * scale.Q) + scale.Q
        lnL = loglam[i] - q_part[i] - float(loggamma(s[i] + 0.5).real)
        env_c = max(env_c, lnL / env)
    return ProfileReport(
        regions=regions,
        total=total,
        reflection_max=float(reflection.max()),
        mirror_max=mirror_err,
        envelope_constant=env_c,
        cut=cut,
    )
