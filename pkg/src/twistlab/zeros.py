"""Critical-line zeros of Lambda(s, E x chi_d)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import CompletenessFailure, EmptyList, OutOfRange
from .lfunc import CompletedLFunction
from .twist import Classification, classify

BRACKET = 1e-9
MIN_GRID = 1e-5


@dataclass(frozen=True)
class ZeroList:
    d: int
    sign: int
    heights: np.ndarray
    bracket: float
    height_cap: float
    central_multiplicity: int
    certificate: dict = field(default_factory=dict)

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        h.flags.writeable = False
        object.__setattr__(self, "heights", h)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "gamma", "bracket_width"])
            for i, g in enumerate(self.heights, 1):
                w.writerow([i, f"{g:.12f}", f"{self.bracket:.1e}"])


def local_density(L: CompletedLFunction, t: float) -> float:
    from .explicit import zero_density

    return max(float(zero_density(t, L.N_cond)), 0.05)


def central_multiplicity(L: CompletedLFunction, theta0: float = 1e-3, theta1: float = 1e-4) -> tuple[int, Classification]:
    cd = L.central_derivatives()
    cls = classify(L.sign, cd.lam0, cd.lam1, theta0, theta1)
    if cls is Classification.RANK0:
        return 0, cls
    if cls is Classification.RANK1:
        return 1, cls
    if cls is Classification.HIGHER:
        return (2 if L.sign == 1 else 3), cls
    return (0 if L.sign == 1 else 1), cls


def _leading_sign(L: CompletedLFunction, m: int, step: float) -> tuple[float, float]:
    """Start point and value of z just above the central zero."""
    if m == 0:
        return 0.0, L.z_real(0.0)
    t0 = min(1e-3, step / 4)
    return t0, L.z_real(t0)


def _certify(L: CompletedLFunction, g: float) -> bool:
    lo, hi = L.z_real(g - BRACKET / 2), L.z_real(g + BRACKET / 2)
    return lo * hi < 0


def _find_root(z, a: float, b: float, za: float, zb: float) -> float:
    scale = max(abs(za), abs(zb))
    return brentq(lambda t: z(t) / scale, a, b, xtol=1e-11, rtol=4 * np.finfo(float).eps, maxiter=200)


def _dip_roots(z, a: float, c: float, b: float, zc: float) -> list[float]:
    """Look for a sign change hidden inside a dip of |z| around c."""
    s = math.copysign(1.0, zc)
    scale = abs(zc)
    res = minimize_scalar(lambda t: s * z(t) / scale, bounds=(a, b), method="bounded", options={"xatol": MIN_GRID})
    tm = float(res.x)
    zm = z(tm)
    if s * zm > 0:
        return []
    return [_find_root(z, a, tm, z(a), zm), _find_root(z, tm, b, zm, z(b))]


def scan_zeros(
    L: CompletedLFunction,
    T: float = 35.0,
    grid_k: float = 6.0,
    margin: float = 0.0,
    multiplicity: int | None = None,
    stop_after: int | None = None,
) -> ZeroList:
    """Zeros of z_real on (0, T + margin] by grid sign changes and Brent refinement.

    ``grid_k`` grid points per mean zero spacing. Local minima of |z| with no
    sign change are refined with a bounded minimiser so that close pairs are
    not lost. ``stop_after`` ends the scan once that many zeros are found.
    """
    top = T + margin
    if top > L.settings.height_cap:
        raise OutOfRange(f"height {top} above cap {L.settings.height_cap}")
    m = central_multiplicity(L)[0] if multiplicity is None else multiplicity
    z = L.z_real
    step0 = 1.0 / (grid_k * local_density(L, 0.0))
    t_prev, z_prev = _leading_sign(L, m, step0)
    z_prev2, t_prev2 = None, None
    roots: list[float] = []
    reality_every = 16
    k = 0
    while t_prev < top:
        step = 1.0 / (grid_k * local_density(L, t_prev))
        t = min(t_prev + step, top)
        zt = z(t, check=(k % reality_every == reality_every - 1))
        k += 1
        if zt == 0.0:
            roots.append(t)
        elif z_prev * zt < 0:
            roots.append(_find_root(z, t_prev, t, z_prev, zt))
        elif z_prev2 is not None and z_prev2 * z_prev > 0 and abs(z_prev) < abs(z_prev2) and abs(z_prev) < abs(zt):
            roots.extend(_dip_roots(z, t_prev2, t_prev, t, z_prev))
        z_prev2, t_prev2 = z_prev, t_prev
        t_prev, z_prev = t, zt
        if stop_after is not None and len(roots) >= stop_after:
            break
    roots = sorted(set(r for r in roots if r > 0))
    bad = [g for g in roots if not _certify(L, g)]
    if bad:
        raise CompletenessFailure(f"zero at {bad[0]:.9f} failed the sign certificate", (bad[0] - 1e-6, bad[0] + 1e-6))
    return ZeroList(
        d=L.twist.d,
        sign=L.sign,
        heights=np.array(roots),
        bracket=BRACKET,
        height_cap=top if stop_after is None else (roots[-1] if roots else top),
        central_multiplicity=m,
    )


def lowest_zero(zl: ZeroList) -> float:
    if len(zl.heights) == 0:
        raise EmptyList(f"no zeros below {zl.height_cap}")
    return float(zl.heights[0])


def count_zeros(zl: ZeroList, a: float, b: float) -> int:
    """N_d(a, b): zeros with a <= gamma <= b, counted with multiplicity."""
    cap = zl.height_cap
    if a > b or a < -cap - 1e-12 or b > cap + 1e-12:
        raise OutOfRange(f"[{a}, {b}] not inside [-{cap}, {cap}]")
    h = zl.heights
    n = int(np.sum((h >= a) & (h <= b))) + int(np.sum((-h >= a) & (-h <= b)))
    if a <= 0.0 <= b:
        n += zl.central_multiplicity
    return n


def certify_completeness(L: CompletedLFunction, zl: ZeroList, T: float, Q: float = 6.0, tol: float = 0.5) -> dict:
    """Compare the found zeros against the explicit-formula count on [-T, T].

    The smooth count sum I_Q(gamma) with [a, b] = [-T, T] is evaluated both
    directly and through the explicit formula; zeros must be known somewhat
    beyond T so that the kernel tail is captured.
    """
    from .explicit import VonMangoldtCoefficients, build_bump_family, smooth_count

    fam = build_bump_family(Q, -T, T)
    vm = VonMangoldtCoefficients.build(L.coeffs.base, L.twist.d, math.exp(Q))
    sc = smooth_count(zl, fam, vm, L.N_cond, L.twist.d)
    cert = {
        "T": T,
        "Q": Q,
        "smooth_direct": sc.direct,
        "smooth_explicit": sc.explicit,
        "smooth_difference": sc.difference,
        "sharp_count": count_zeros(zl, -T, T),
        "sharp_expected": sc.sharp_expected,
        "sharp_difference": count_zeros(zl, -T, T) - sc.sharp_expected,
        "passed": abs(sc.difference) < tol,
    }
    if not cert["passed"]:
        raise CompletenessFailure(
            f"d={L.twist.d}: smooth count {sc.direct:.3f} vs explicit {sc.explicit:.3f}",
            suspect=(-T, T),
        )
    return cert


def scan_certified(L: CompletedLFunction, T: float = 35.0, margin: float = 3.0, Q: float = 6.0) -> ZeroList:
    """scan_zeros to T + margin, retrying on a finer grid until completeness holds."""
    last = None
    for k in (6.0, 12.0, 24.0):
        zl = scan_zeros(L, T, grid_k=k, margin=margin)
        try:
            cert = certify_completeness(L, zl, T, Q)
        except CompletenessFailure as exc:
            last = exc
            continue
        return ZeroList(zl.d, zl.sign, zl.heights, zl.bracket, zl.height_cap, zl.central_multiplicity, cert)
    raise last
