"""Scans over quadratic twist families and the statistics built on them."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import optimize, special

from .curve import EllipticCurve
from .errors import EmptyClass, NoConsensus, TooFewRecords, TwistLabError
from .lfunc import CompletedLFunction, EvaluationSettings, check_twist_size, numeric_sign
from .svg import histogram_svg
from .twist import (
    Classification,
    TwistDescriptor,
    classify,
    fundamental_discriminants,
    genus_predicate,
    twist_sign,
)
from .zeros import lowest_zero, scan_zeros

REPULSION_REFERENCE = -0.25


@dataclass
class ScanOptions:
    theta0: float = 1e-3
    theta1: float = 1e-4
    d0: int | None = None
    first_zero_cap: float = 12.0
    grid_k: float = 6.0
    jobs: int = 1
    settings: EvaluationSettings = field(default_factory=EvaluationSettings)


@dataclass
class FamilyRecord:
    d: int
    sign: int
    numeric_sign: int
    classification: str
    central_L: float
    central_Lprime: float
    lambda0: float
    lambda1: float
    gamma_d: float | None
    normalized_first_zero: float | None
    repulsion_exponent: float | None
    waldspurger_v: float | None
    wald_c: int | None = None
    waldspurger_square_residual: float | None = None
    genus_member: bool = False
    error: str = ""

    @property
    def cls(self) -> Classification:
        return Classification(self.classification)


CSV_COLUMNS = [
    "d",
    "sign",
    "class",
    "L_half",
    "Lprime_half",
    "gamma_d",
    "norm_zero",
    "exponent",
    "wald_v",
    "wald_c",
    "wald_residual",
    "genus_member",
    "error",
]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def records_to_csv(records: list[FamilyRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(
            [
                _fmt(v)
                for v in (
                    r.d,
                    r.sign,
                    r.classification,
                    r.central_L,
                    r.central_Lprime,
                    r.gamma_d,
                    r.normalized_first_zero,
                    r.repulsion_exponent,
                    r.waldspurger_v,
                    r.wald_c,
                    r.waldspurger_square_residual,
                    r.genus_member,
                    r.error,
                )
            ]
        )
    return buf.getvalue()


def records_from_csv(text: str) -> list[FamilyRecord]:
    out = []

    def fl(s):
        return float(s) if s != "" else None

    for row in csv.DictReader(io.StringIO(text)):
        out.append(
            FamilyRecord(
                d=int(row["d"]),
                sign=int(row["sign"]),
                numeric_sign=int(row["sign"]),
                classification=row["class"],
                central_L=float(row["L_half"]) if row["L_half"] else 0.0,
                central_Lprime=float(row["Lprime_half"]) if row["Lprime_half"] else 0.0,
                lambda0=0.0,
                lambda1=0.0,
                gamma_d=fl(row["gamma_d"]),
                normalized_first_zero=fl(row["norm_zero"]),
                repulsion_exponent=fl(row["exponent"]),
                waldspurger_v=fl(row["wald_v"]),
                wald_c=int(row["wald_c"]) if row["wald_c"] else None,
                waldspurger_square_residual=fl(row["wald_residual"]),
                genus_member=row["genus_member"] == "1",
                error=row["error"],
            )
        )
    return out


def evaluate_twist(curve: EllipticCurve, d: int, opts: ScanOptions) -> FamilyRecord:
    """Central data, classification and lowest zero for one discriminant."""
    sign = twist_sign(curve, d)
    genus = genus_predicate(curve, opts.d0, d) if opts.d0 is not None else False
    rec = FamilyRecord(
        d=d,
        sign=sign,
        numeric_sign=0,
        classification=Classification.UNCLASSIFIED.value,
        central_L=0.0,
        central_Lprime=0.0,
        lambda0=0.0,
        lambda1=0.0,
        gamma_d=None,
        normalized_first_zero=None,
        repulsion_exponent=None,
        waldspurger_v=None,
        genus_member=genus,
    )
    try:
        rec.numeric_sign = numeric_sign(curve, d)
        if rec.numeric_sign != sign:
            rec.error = "sign mismatch"
            return rec
        L = CompletedLFunction(TwistDescriptor(curve, d), opts.settings)
        cd = L.central_derivatives()
        cls = classify(sign, cd.lam0, cd.lam1, opts.theta0, opts.theta1)
        rec.classification = cls.value
        rec.lambda0, rec.lambda1 = cd.lam0, cd.lam1
        rec.central_L = cd.L0
        rec.central_Lprime = cd.L1 if sign == -1 else 0.0
        if cls is Classification.RANK0:
            rec.waldspurger_v = cd.L0 * math.sqrt(abs(d))
        if cls in (Classification.RANK0, Classification.RANK1):
            mult = 0 if cls is Classification.RANK0 else 1
            zl = scan_zeros(L, opts.first_zero_cap, grid_k=opts.grid_k, multiplicity=mult, stop_after=1)
            g = lowest_zero(zl)
            rec.gamma_d = g
            rec.normalized_first_zero = g * math.log(abs(d))
            rec.repulsion_exponent = math.log(g) / math.log(abs(d)) if g < 1.0 else None
    except TwistLabError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _worker(args):
    curve, ds, opts = args
    return [evaluate_twist(curve, d, opts) for d in ds]


def scan_family(curve: EllipticCurve, d_lo: int, d_hi: int, options: ScanOptions | None = None) -> list[FamilyRecord]:
    """One record per fundamental discriminant in [d_lo, d_hi] coprime to M, sorted by d."""
    opts = options or ScanOptions()
    check_twist_size(curve, max(abs(d_lo), abs(d_hi)))
    ds = fundamental_discriminants(d_lo, d_hi, curve.conductor)
    jobs = max(1, opts.jobs or os.cpu_count() or 1)
    if jobs == 1 or len(ds) < 8:
        records = _worker((curve, ds, opts))
    else:
        chunks = [ds[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_worker, [(curve, c, opts) for c in chunks]))
        records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.d)
    return records


# -- Waldspurger quantisation ---------------------------------------------------


@dataclass
class WaldspurgerRecord:
    kappa_hat: float
    class_kappas: dict
    mode: str
    explained: float
    c: dict
    residuals: dict
    outliers: list
    square_tolerance: float

    def kappa_for(self, d: int) -> float:
        return self.class_kappas.get(_class_key(self.mode, d, self._modulus), self.kappa_hat)

    _modulus: int = 1


def _class_key(mode: str, d: int, modulus: int):
    if mode == "global":
        return "all"
    if mode == "sign":
        return "d<0" if d < 0 else "d>0"
    return f"{'d<0' if d < 0 else 'd>0'}:{d % modulus}"


def _fit_class(vals: np.ndarray, K: int, tol: float):
    vmin = float(vals.min())
    best = None
    for k in range(1, K + 1):
        kap = vmin / (k * k)
        ratio = vals / kap
        c = np.maximum(np.rint(np.sqrt(ratio)), 1)
        resid = np.abs(ratio - c * c) / (c * c)
        ok = resid <= tol
        score = int(ok.sum())
        if best is None or score > best[0]:
            best = (score, k, kap, ok)
    score, k, kap, ok = best
    # least-squares refinement over the explained values: v = kappa c^2
    c = np.maximum(np.rint(np.sqrt(vals / kap)), 1)
    if ok.any():
        kap = float(np.sum(vals[ok] * c[ok] ** 2) / np.sum(c[ok] ** 4))
    return kap, k, score


def kappa_candidates(vals, K: int = 4, tol: float = 5e-3) -> list[tuple[int, float, int]]:
    """(k, kappa, score) for every candidate quantum v_min/k^2."""
    vals = np.asarray(vals, dtype=float)
    vmin = float(vals.min())
    out = []
    for k in range(1, K + 1):
        kap = vmin / (k * k)
        ratio = vals / kap
        c = np.maximum(np.rint(np.sqrt(ratio)), 1)
        score = int(np.sum(np.abs(ratio - c * c) / (c * c) <= tol))
        out.append((k, kap, score))
    return out


def infer_kappa(
    records,
    K: int = 4,
    square_tolerance: float = 5e-3,
    min_explained: float = 0.9,
    modulus: int | None = None,
) -> WaldspurgerRecord:
    """Quantum kappa with v_d = kappa c^2, falling back to per-class quanta.

    ``records`` are FamilyRecords (Rank0 ones are used) or (d, v) pairs.
    Classes are tried in the order: one global quantum, one per sign of d,
    one per (sign of d, d mod ``modulus``).
    """
    pairs = []
    for r in records:
        if isinstance(r, FamilyRecord):
            if r.cls is Classification.RANK0 and r.waldspurger_v is not None and not r.error:
                pairs.append((r.d, r.waldspurger_v))
        else:
            pairs.append((int(r[0]), float(r[1])))
    if len(pairs) < 10:
        raise TooFewRecords(f"need at least 10 Rank0 records, got {len(pairs)}")
    ds = np.array([p[0] for p in pairs])
    vs = np.array([p[1] for p in pairs])
    diagnostics = {}
    for mode in ("global", "sign", "residue"):
        if mode == "residue" and modulus is None:
            continue
        keys = [_class_key(mode, int(d), modulus or 1) for d in ds]
        kappas, explained = {}, 0
        for key in sorted(set(keys)):
            mask = np.array([k == key for k in keys])
            kap, k, score = _fit_class(vs[mask], K, square_tolerance)
            kappas[key] = kap
            explained += score
        frac = explained / len(vs)
        diagnostics[mode] = {"explained": frac, "kappas": kappas}
        if frac >= min_explained:
            c, res, outl = {}, {}, []
            for d, v, key in zip(ds.tolist(), vs.tolist(), keys):
                kap = kappas[key]
                ci = max(int(round(math.sqrt(v / kap))), 1)
                c[d] = ci
                res[d] = (v / kap - ci * ci) / (ci * ci)
                if abs(res[d]) > square_tolerance:
                    outl.append(d)
            rec = WaldspurgerRecord(
                kappa_hat=min(kappas.values()),
                class_kappas=kappas,
                mode=mode,
                explained=frac,
                c=c,
                residuals=res,
                outliers=outl,
                square_tolerance=square_tolerance,
            )
            rec._modulus = modulus or 1
            return rec
    raise NoConsensus("no quantum explains enough central values", diagnostics)


def attach_waldspurger(records: list[FamilyRecord], wr: WaldspurgerRecord) -> None:
    for r in records:
        if r.d in wr.c:
            r.wald_c = wr.c[r.d]
            r.waldspurger_square_residual = wr.residuals[r.d]


# -- gaps ---------------------------------------------------------------------------


@dataclass
class GapReport:
    c0: float
    c0_d: int
    c1: float
    c1_d: int
    kappa_hat: float
    c0_ratio: float
    n_rank0: int
    n_rank1_genus: int

    def as_dict(self) -> dict:
        return asdict(self)


def gap_report(records: list[FamilyRecord], wr: WaldspurgerRecord | None = None, gap_floor: float = 1e-2) -> GapReport:
    """Minimal Rank0 v_d and minimal L'(1/2) sqrt|d| over Rank1 genus members."""
    r0 = [r for r in records if r.cls is Classification.RANK0 and not r.error and r.waldspurger_v is not None]
    r1 = [r for r in records if r.cls is Classification.RANK1 and r.genus_member and not r.error]
    if not r0:
        raise EmptyClass("no Rank0 twists in range")
    if not r1:
        raise EmptyClass("no Rank1 genus members in range")
    m0 = min(r0, key=lambda r: r.waldspurger_v)
    vals1 = [(abs(r.central_Lprime) * math.sqrt(abs(r.d)), r.d) for r in r1]
    c1, d1 = min(vals1)
    kap = wr.kappa_for(m0.d) if wr is not None else m0.waldspurger_v
    rep = GapReport(
        c0=m0.waldspurger_v,
        c0_d=m0.d,
        c1=c1,
        c1_d=d1,
        kappa_hat=kap,
        c0_ratio=m0.waldspurger_v / kap,
        n_rank0=len(r0),
        n_rank1_genus=len(r1),
    )
    if not (rep.c0 > gap_floor * kap and rep.c1 > 0):
        raise EmptyClass(f"gap not positive: c0={rep.c0}, c1={rep.c1}")
    return rep


# -- first zero histogram -----------------------------------------------------------


@dataclass
class FitResult:
    r: float
    ci_low: float
    ci_high: float
    n_fit: int
    skipped: bool = False


def _degenerate(x: np.ndarray) -> bool:
    return x.size == 0 or float(np.ptp(x)) <= 1e-12 * max(1.0, float(np.abs(x).max()))


def _truncated_power_fit(x: np.ndarray, decile: float) -> tuple[float, int]:
    """Maximum likelihood for density ~ x^r e^{-bx} restricted to the lowest decile."""
    x = np.sort(x)
    m = max(int(math.ceil(decile * x.size)), 8)
    xc = x[min(m, x.size - 1)]
    u = x[:m] / xc
    slu, su = float(np.sum(np.log(u))), float(np.sum(u))

    def nll(p):
        r, b = p
        if r <= -0.99:
            return 1e12
        # int_0^1 u^r e^{-bu} du
        z = special.hyp1f1(r + 1.0, r + 2.0, -b) / (r + 1.0)
        if not np.isfinite(z) or z <= 0:
            return 1e12
        return -(r * slu - b * su - m * math.log(z))

    res = optimize.minimize(nll, [1.0, 0.0], method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-10})
    return float(res.x[0]), m


def fit_vanishing_order(samples, decile: float = 0.1, n_boot: int = 100, seed: int = 12345) -> FitResult:
    """Order r of vanishing at 0 of the density of ``samples``.

    Over the lowest decile the density is modelled as C x^r e^{-bx}; (r, b)
    are fitted by maximum likelihood of the samples conditioned on lying
    below the decile cut. The band is a seeded percentile bootstrap.
    """
    x = np.asarray(samples, dtype=float)
    x = x[x > 0]
    n = x.size
    if n < 20 or _degenerate(x):
        return FitResult(float("nan"), float("nan"), float("nan"), n, skipped=True)
    r, m = _truncated_power_fit(x, decile)
    rng = np.random.default_rng(seed)
    boots = np.array([_truncated_power_fit(rng.choice(x, size=n, replace=True), decile)[0] for _ in range(n_boot)])
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return FitResult(r, float(lo), float(hi), m)


@dataclass
class HistogramReport:
    edges: list
    counts: list
    total: int
    fit: FitResult
    low_mass_fraction: float
    low_cut: float
    normalization: str
    single_bin: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count"])
        for i, c in enumerate(self.counts):
            w.writerow([f"{self.edges[i]:.6g}", f"{self.edges[i + 1]:.6g}", c])
        return buf.getvalue()

    def to_svg(self, title: str = "first normalized zero") -> str:
        return histogram_svg(self.edges, self.counts, title=title, xlabel=self.normalization)


def normalized_zeros(records, normalization: str = "ln_d", conductor: int | None = None) -> np.ndarray:
    out = []
    for r in records:
        if r.gamma_d is None:
            continue
        if normalization == "ln_d":
            out.append(r.gamma_d * math.log(abs(r.d)))
        elif normalization == "ln_conductor":
            if conductor is None:
                raise ValueError("ln_conductor normalization needs the curve conductor")
            out.append(r.gamma_d * math.log(conductor * r.d * r.d) / 2.0)
        else:
            raise ValueError(normalization)
    return np.array(out)


def first_zero_histogram(
    records,
    bins: int = 40,
    normalization: str = "ln_d",
    cls: Classification = Classification.RANK0,
    low_cut: float = 0.25,
    x_max: float | None = None,
    conductor: int | None = None,
    min_records: int = 50,
) -> HistogramReport:
    sel = [r for r in records if r.cls is cls and not r.error and r.gamma_d is not None]
    if len(sel) < min_records:
        raise TooFewRecords(f"{len(sel)} records of class {cls.value}, need {min_records}")
    x = normalized_zeros(sel, normalization, conductor)
    if _degenerate(x):
        edges = [float(x[0]) - 0.5, float(x[0]) + 0.5]
        fit = FitResult(float("nan"), float("nan"), float("nan"), len(x), skipped=True)
        return HistogramReport(edges, [int(len(x))], int(len(x)), fit, float(np.mean(x < low_cut)), low_cut, normalization, True)
    top = x_max if x_max is not None else float(np.ceil(x.max() * 4) / 4)
    edges = np.linspace(0.0, top, bins + 1)
    counts, _ = np.histogram(np.clip(x, 0, top), bins=edges)
    fit = fit_vanishing_order(x)
    return HistogramReport(
        edges=[float(e) for e in edges],
        counts=[int(c) for c in counts],
        total=int(counts.sum()),
        fit=fit,
        low_mass_fraction=float(np.mean(x < low_cut)),
        low_cut=low_cut,
        normalization=normalization,
    )


# -- repulsion ------------------------------------------------------------------------


@dataclass
class RepulsionReport:
    per_class: dict
    slack: float
    reference: float = REPULSION_REFERENCE

    @property
    def violations(self) -> int:
        return sum(v["violations"] for v in self.per_class.values())

    def as_dict(self) -> dict:
        return {"per_class": self.per_class, "slack": self.slack, "reference": self.reference, "violations": self.violations}


def repulsion_audit(records, slack: float = 0.35, r_fit: float | None = None) -> RepulsionReport:
    """Worst repulsion exponent ln(gamma_d)/ln|d| per class against -1/4 - slack."""
    groups = {
        "rank0": [r for r in records if r.cls is Classification.RANK0 and not r.error and r.gamma_d is not None],
        "rank1_genus": [
            r for r in records if r.cls is Classification.RANK1 and r.genus_member and not r.error and r.gamma_d is not None
        ],
    }
    out = {}
    for name, recs in groups.items():
        if not recs:
            out[name] = {"count": 0, "min_exponent": None, "min_d": None, "violations": 0, "fraction_below": 0.0}
            continue
        expo = [(math.log(r.gamma_d) / math.log(abs(r.d)), r.d) for r in recs]
        mn, md = min(expo)
        bad = sum(1 for e, _ in expo if e < REPULSION_REFERENCE - slack)
        entry = {
            "count": len(recs),
            "min_exponent": mn,
            "min_d": md,
            "violations": bad,
            "fraction_below": bad / len(recs),
        }
        if r_fit is not None and math.isfinite(r_fit) and r_fit > -1:
            D = max(abs(r.d) for r in recs)
            thresh = D ** (-1.0 / (r_fit + 1.0)) * math.log(D)
            nz = [r.gamma_d * math.log(abs(r.d)) for r in recs]
            entry["tail_threshold"] = thresh
            entry["tail_fraction"] = sum(1 for v in nz if v <= thresh) / len(nz)
        out[name] = entry
    return RepulsionReport(out, slack)


def record_fields() -> list[str]:
    return [f.name for f in fields(FamilyRecord)]
