"""Command line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical certification
failure, 3 twist not auditable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .config import RunConfig, load_config
from .curve import coefficients_up_to
from .errors import ConfigError, TwistLabError
from .explicit import (
    AnalysisScale,
    VonMangoldtCoefficients,
    band_decomposition,
    build_bump_family,
    ef_closure,
    fejer_pair,
)
from .family import (
    ScanOptions,
    attach_waldspurger,
    first_zero_histogram,
    infer_kappa,
    records_from_csv,
    records_to_csv,
    scan_family,
)
from .jensen import close_ledger
from .lfunc import CompletedLFunction
from .twist import Classification, TwistDescriptor, chi_array, find_d0
from .zeros import BRACKET, scan_certified, scan_zeros


DEFAULT_PAIR = "bump:Q=2,a=-1,b=1"


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def _val(v: float | None, budget: float | None) -> dict:
    return {"value": v, "budget": budget}


def parse_d_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"--d-range expects LO:HI, got {text!r}") from None


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def parse_pair(text: str):
    """``fejer:X`` or ``bump:Q=2,a=-1,b=1``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "fejer":
            return fejer_pair(float(rest))
        if kind == "bump":
            kw = dict(item.split("=") for item in rest.split(","))
            if set(kw) != {"Q", "a", "b"}:
                raise ValueError
            return build_bump_family(float(kw["Q"]), float(kw["a"]), float(kw["b"])).pair()
    except ValueError:
        pass
    raise ConfigError(f"bad --pair {text!r}; expected fejer:X or bump:Q=..,a=..,b=..")


def _twist_L(cfg: RunConfig, d: int | None) -> CompletedLFunction:
    if d is None:
        raise ConfigError("--d is required")
    curve = cfg.curve.build()
    return CompletedLFunction(TwistDescriptor(curve, d), cfg.precision.settings())


def _zero_height(args, cfg: RunConfig) -> float:
    return args.height if args.height is not None else 35.0


def _certified_zeros(L: CompletedLFunction, T: float):
    margin = min(3.0, L.settings.height_cap - T)
    if margin < 0:
        raise ConfigError(f"--height {T} above the height cap {L.settings.height_cap}")
    return scan_certified(L, T, margin=margin)


# -- subcommands -------------------------------------------------------------------


def cmd_coeffs(args, cfg):
    curve = cfg.curve.build()
    n = args.n_max
    table = coefficients_up_to(curve, n)
    A = table.classical[1 : n + 1].astype(np.int64)
    if args.d is not None:
        TwistDescriptor(curve, args.d)
        A = A * chi_array(args.d, n)[1 : n + 1]
    lines = ["n,A,a"]
    for i, v in enumerate(A.tolist(), 1):
        lines.append(f"{i},{v},{v / math.sqrt(i):.15g}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_eval(args, cfg):
    L = _twist_L(cfg, args.d)
    s = parse_complex(args.s)
    lam, err = L.lambda_with_error(s)
    ell = L.l_at(s)
    gam = abs(complex(np.exp(-L.log_gamma_factor(s))))
    out = {
        "d": L.twist.d,
        "s": [s.real, s.imag],
        "sign": L.sign,
        "conductor": L.N_cond,
        "Lambda": {"re": lam.real, "im": lam.imag, "budget": err},
        "L": {"re": ell.real, "im": ell.imag, "budget": err * gam},
        "fe_residual": _val(L.fe_residual(s), err),
        "truncation_length": L.truncation_length,
    }
    _emit(_json(out), args.out)
    return 0


def cmd_zeros(args, cfg):
    L = _twist_L(cfg, args.d)
    zl = _certified_zeros(L, _zero_height(args, cfg))
    if args.out:
        zl.write_csv(args.out)
    info = {
        "d": zl.d,
        "sign": zl.sign,
        "count": int(len(zl.heights)),
        "central_multiplicity": zl.central_multiplicity,
        "height_cap": zl.height_cap,
        "bracket": zl.bracket,
        "certificate": zl.certificate,
    }
    if not args.out:
        info["heights"] = [float(g) for g in zl.heights]
    sys.stdout.write(_json(info))
    return 0


def cmd_explicit(args, cfg):
    L = _twist_L(cfg, args.d)
    pair = parse_pair(args.pair or DEFAULT_PAIR)
    zl = scan_zeros(L, _zero_height(args, cfg))
    vm = VonMangoldtCoefficients.build(L.coeffs.base, L.twist.d, math.exp(pair.support_X))
    rep = ef_closure(zl, pair, vm, L.N_cond)
    out = rep.as_dict()
    out["d"] = L.twist.d
    out["height"] = zl.height_cap
    _emit(_json(out), args.out)
    return 0 if rep.closed else 2


def _mode_class(mode: str, L: CompletedLFunction, zl) -> Classification:
    if mode == "even":
        if L.sign != 1:
            raise ConfigError("even mode needs a twist with sign +1")
        return Classification.RANK0
    if mode == "odd":
        if L.sign != -1:
            raise ConfigError("odd mode needs a twist with sign -1")
        return Classification.RANK1
    return Classification.RANK0 if zl.central_multiplicity == 0 else Classification.RANK1


def cmd_jensen(args, cfg):
    L = _twist_L(cfg, args.d)
    zl = scan_zeros(L, 3.0)
    if zl.central_multiplicity > 1:
        sys.stderr.write(f"d={L.twist.d}: central order {zl.central_multiplicity} is not auditable\n")
        return 3
    ledger = close_ledger(zl, L, _mode_class(args.mode, L, zl))
    out = ledger.as_dict()
    if abs(L.twist.d) > 1:
        scale = AnalysisScale.from_d(L.twist.d, cfg.scan.epsilon) if cfg.scan.Q is None else AnalysisScale(cfg.scan.Q, cfg.scan.epsilon)
        band = band_decomposition(zl, scale, L.twist.d)
        out["bands"] = {"inner": band.inner, "outer": band.outer, "main_term": band.main_term, "cut": band.cut}
    _emit(_json(out), args.out)
    return 0


def _scan_options(args, cfg, curve) -> ScanOptions:
    d0 = args.d0 if args.d0 is not None else cfg.scan.d0
    if d0 is None:
        d0 = find_d0(curve)[0]
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    return ScanOptions(
        theta0=cfg.scan.theta0,
        theta1=cfg.scan.theta1,
        d0=d0,
        first_zero_cap=cfg.scan.first_zero_cap,
        jobs=jobs,
        settings=cfg.precision.settings(),
    )


def cmd_scan(args, cfg):
    curve = cfg.curve.build()
    lo, hi = parse_d_range(args.d_range) if args.d_range else (cfg.scan.d_lo, cfg.scan.d_hi)
    records = []
    if lo <= hi:
        records = scan_family(curve, lo, hi, _scan_options(args, cfg, curve))
    if records:
        try:
            attach_waldspurger(records, infer_kappa(records, modulus=4 * curve.conductor))
        except TwistLabError as exc:
            sys.stderr.write(f"waldspurger quantum not inferred: {exc}\n")
    _emit(records_to_csv(records), args.out or cfg.output.out)
    return 0


def cmd_histogram(args, cfg):
    if not args.in_path:
        raise ConfigError("--in is required")
    try:
        with open(args.in_path) as fh:
            records = records_from_csv(fh.read())
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read family CSV: {exc}") from None
    conductor = cfg.curve.conductor if cfg is not None else None
    rep = first_zero_histogram(
        records,
        bins=args.bins,
        normalization=args.normalization,
        cls=Classification(args.cls),
        conductor=conductor,
    )
    if args.out:
        _emit(rep.to_csv(), args.out)
    if args.svg:
        _emit(rep.to_svg(), args.svg)
    summary = {
        "total": rep.total,
        "bins": len(rep.counts),
        "single_bin": rep.single_bin,
        "low_cut": rep.low_cut,
        "low_mass_fraction": rep.low_mass_fraction,
        "fitted_vanishing_order": {
            "value": None if rep.fit.skipped else rep.fit.r,
            "band": None if rep.fit.skipped else [rep.fit.ci_low, rep.fit.ci_high],
            "skipped": rep.fit.skipped,
        },
    }
    sys.stdout.write(_json(summary))
    return 0


def cmd_report(args, cfg):
    """Every audit for one twist in a single JSON document."""
    L = _twist_L(cfg, args.d)
    d = L.twist.d
    curve = L.twist.curve
    T = _zero_height(args, cfg)
    zl = _certified_zeros(L, T)
    m = zl.central_multiplicity
    out = {"d": d, "sign": L.sign, "conductor": L.N_cond, "central_multiplicity": m}
    cert = zl.certificate
    out["zero_count"] = {
        "smooth_direct": _val(cert["smooth_direct"], 0.5),
        "smooth_explicit": cert["smooth_explicit"],
        "sharp_difference": cert["sharp_difference"],
    }

    pair = parse_pair(args.pair or DEFAULT_PAIR)
    vm = VonMangoldtCoefficients.build(L.coeffs.base, d, math.exp(pair.support_X))
    closure = ef_closure(zl, pair, vm, L.N_cond)
    out["prop5_residual"] = {"value": closure.residual, "budget": closure.budget, "pair": closure.pair, "tolerance": closure.tolerance}

    if m <= 1:
        ledger = close_ledger(zl, L)
        out["eq6_residual"] = _val(ledger.residual, ledger.budget)
    else:
        out["eq6_residual"] = {"value": None, "budget": None, "reason": f"central order {m}"}

    if len(zl.heights) and abs(d) > 1:
        g = float(zl.heights[0])
        expo = math.log(g) / math.log(abs(d))
        out["thm1_exponent"] = {"value": expo, "budget": BRACKET / (g * math.log(abs(d))), "gamma_d": g, "reference": -0.25}
    else:
        out["thm1_exponent"] = {"value": None, "budget": None, "reason": "no zero or untwisted"}

    if L.sign == 1 and m == 0:
        # the quantum of d's sign class, inferred from the configured scan range
        opts = _scan_options(args, cfg, curve)
        opts.jobs = args.jobs if args.jobs is not None else 1
        lo, hi = (min(cfg.scan.d_lo, d), -1) if d < 0 else (1, max(cfg.scan.d_hi, d))
        wr = infer_kappa(scan_family(curve, lo, hi, opts), modulus=4 * curve.conductor)
        cd = L.central_derivatives()
        v = cd.L0 * math.sqrt(abs(d))
        kap = wr.kappa_for(d)
        c = max(int(round(math.sqrt(v / kap))), 1)
        out["eq2_residual"] = {
            "value": (v / kap - c * c) / (c * c),
            # relative error of v, once for d and once through the fitted quantum
            "budget": 2.0 * cd.err0 / abs(cd.lam0),
            "kappa": kap,
            "c": c,
            "v": v,
        }
    else:
        out["eq2_residual"] = {"value": None, "budget": None, "reason": "central value vanishes"}
    _emit(_json(out), args.out)
    return 0


COMMANDS = {
    "coeffs": cmd_coeffs,
    "eval": cmd_eval,
    "zeros": cmd_zeros,
    "explicit": cmd_explicit,
    "jensen": cmd_jensen,
    "scan": cmd_scan,
    "histogram": cmd_histogram,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twistlab", description="Quadratic twist L-function lab")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--curve", default=None, help="config JSON path or fixture name (11a, 37a)")
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--d-range", default=None)
        p.add_argument("--d0", type=int, default=None)
        p.add_argument("--height", type=float, default=None)
        p.add_argument("--pair", default=None)
        p.add_argument("--mode", choices=["auto", "even", "odd"], default="auto")
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--svg", default=None)
        p.add_argument("--s", default="0.5")
        p.add_argument("--n-max", type=int, default=100)
        p.add_argument("--in", dest="in_path", default=None)
        p.add_argument("--class", dest="cls", default="rank0", choices=[c.value for c in Classification])
        p.add_argument("--bins", type=int, default=40)
        p.add_argument("--normalization", choices=["ln_d", "ln_conductor"], default="ln_d")
    return ap


def _join_negative_values(argv: list[str]) -> list[str]:
    """Let ``--d-range -300:300`` through; argparse would read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--d-range", "--d", "--d0", "--s") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
            continue
        out.append(argv[i])
        i += 1
    return out


def run(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        if args.curve is None and args.command != "histogram":
            raise ConfigError("--curve is required")
        cfg = load_config(args.curve) if args.curve else None
        return COMMANDS[args.command](args, cfg)
    except TwistLabError as exc:
        sys.stderr.write(f"twistlab {args.command}: {type(exc).__name__}: {exc}\n")
        return exc.exit_code


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
