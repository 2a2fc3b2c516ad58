#!/usr/bin/env python3
"""Explicit-formula closure and zero-count completeness over a set of twists.

    python3 scripts/closure_audit.py --curve 37a --count 10 --height 35
"""

import argparse
import math

import numpy as np

from twistlab import CompletedLFunction, TwistDescriptor, fixture_curve
from twistlab.explicit import VonMangoldtCoefficients, build_bump_family, ef_closure, fejer_pair
from twistlab.twist import fundamental_discriminants
from twistlab.zeros import scan_certified


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--curve", choices=["11a", "37a"], default="11a")
    ap.add_argument("--bound", type=int, default=200)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--height", type=float, default=35.0)
    args = ap.parse_args(argv)

    E = fixture_curve(args.curve)
    ds = fundamental_discriminants(-args.bound, args.bound, E.conductor)
    picks = [ds[i] for i in np.linspace(0, len(ds) - 1, args.count).round().astype(int)]
    pairs = [fejer_pair(1.0), fejer_pair(3.0), fejer_pair(6.0)]
    pairs += [build_bump_family(2.0, -1.0, 1.0).pair(), build_bump_family(2.0, 0.5, 2.0).pair()]

    print("d,zeros,smooth_diff," + ",".join(f"{p.name}_ratio" for p in pairs))
    for d in picks:
        L = CompletedLFunction(TwistDescriptor(E, d))
        zl = scan_certified(L, args.height, margin=3.0)
        ratios = []
        for p in pairs:
            vm = VonMangoldtCoefficients.build(L.coeffs.base, d, math.exp(p.support_X))
            rep = ef_closure(zl, p, vm, L.N_cond)
            ratios.append(abs(rep.residual) / rep.tolerance)
        row = [str(d), str(len(zl.heights)), f"{zl.certificate['smooth_difference']:.3e}"] + [f"{r:.3f}" for r in ratios]
        print(",".join(row))


if __name__ == "__main__":
    main()
