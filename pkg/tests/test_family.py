import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.errors import ConfigError, EmptyClass, NoConsensus, TooFewRecords
from twistlab.family import (
    FamilyRecord,
    ScanOptions,
    attach_waldspurger,
    first_zero_histogram,
    fit_vanishing_order,
    gap_report,
    infer_kappa,
    kappa_candidates,
    records_from_csv,
    records_to_csv,
    repulsion_audit,
    scan_family,
)
from twistlab.twist import Classification


def test_kappa_basic():
    pairs = [(-(4 * i + 3), 3.0 * c * c) for i, c in enumerate([1, 2, 3, 5] * 3)]
    wr = infer_kappa(pairs)
    assert wr.kappa_hat == pytest.approx(3.0, rel=1e-12)
    assert all(abs(r) < 1e-12 for r in wr.residuals.values())
    assert wr.outliers == []


def test_kappa_without_unit_square():
    pairs = [(-(4 * i + 3), 3.0 * c * c) for i, c in enumerate([2, 4] * 6)]
    wr = infer_kappa(pairs)
    assert any(wr.kappa_hat == pytest.approx(k) for k in (3.0, 12.0))
    cands = kappa_candidates([v for _, v in pairs])
    hit = [kap for k, kap, score in cands if k == 2]
    assert hit[0] == pytest.approx(3.0) and cands[1][2] == len(pairs)


def test_kappa_outliers_reported():
    pairs = [(-(4 * i + 3), 2.0 * c * c) for i, c in enumerate(range(1, 20))]
    pairs.append((-999, 2.0 * 2.5))
    wr = infer_kappa(pairs)
    assert -999 in wr.outliers
    assert wr.c[-999] in (1, 2)


def test_kappa_per_sign_classes():
    neg = [(-(4 * i + 3), math.sqrt(2) * c * c) for i, c in enumerate([1, 2, 3, 1, 2, 1])]
    pos = [(4 * i + 5, math.pi * c * c) for i, c in enumerate([1, 1, 2, 3, 1, 2])]
    wr = infer_kappa(neg + pos)
    assert wr.mode == "sign"
    assert wr.kappa_for(-3) == pytest.approx(math.sqrt(2))
    assert wr.kappa_for(5) == pytest.approx(math.pi)


def test_no_consensus():
    rng = np.random.default_rng(0)
    pairs = [(-(4 * i + 3), float(v)) for i, v in enumerate(rng.uniform(1, 50, 40))]
    with pytest.raises(NoConsensus) as exc:
        infer_kappa(pairs)
    assert "global" in exc.value.diagnostics


def test_too_few():
    with pytest.raises(TooFewRecords):
        infer_kappa([(-3, 1.0)] * 5)


@given(st.floats(0.1, 10), st.lists(st.integers(1, 6), min_size=10, max_size=30))
def test_kappa_recovers_quantum(kappa, cs):
    pairs = [(-(4 * i + 3), kappa * c * c) for i, c in enumerate(cs)]
    wr = infer_kappa(pairs)
    for d, v in pairs:
        c = wr.c[d]
        assert abs(v / wr.kappa_for(d) - c * c) <= wr.square_tolerance * c * c


def test_fitter_on_gamma3():
    x = np.random.default_rng(2024).gamma(3.0, size=20000)
    fit = fit_vanishing_order(x)
    assert abs(fit.r - 2.0) < 0.3
    assert fit.ci_low < fit.r < fit.ci_high


def test_fitter_skips_degenerate():
    assert fit_vanishing_order(np.ones(100)).skipped


def _rec(d, cls="rank0", gamma=1.0, sign=1, v=1.0, genus=False, lp=0.0):
    return FamilyRecord(
        d=d,
        sign=sign,
        numeric_sign=sign,
        classification=cls,
        central_L=v / math.sqrt(abs(d)) if sign == 1 else 0.0,
        central_Lprime=lp,
        lambda0=0.0,
        lambda1=0.0,
        gamma_d=gamma,
        normalized_first_zero=gamma * math.log(abs(d)),
        repulsion_exponent=None,
        waldspurger_v=v if cls == "rank0" else None,
        genus_member=genus,
    )


def test_histogram_single_bin():
    recs = [_rec(-(4 * i + 3), gamma=1.0 / math.log(4 * i + 3)) for i in range(60)]
    rep = first_zero_histogram(recs)
    assert rep.single_bin and rep.fit.skipped and rep.total == 60


def test_histogram_mass_conservation():
    rng = np.random.default_rng(3)
    recs = [_rec(-(4 * i + 3), gamma=float(g)) for i, g in enumerate(rng.uniform(0.05, 2, 120))]
    rep = first_zero_histogram(recs, bins=25)
    assert sum(rep.counts) == rep.total == 120
    assert len(rep.edges) == 26
    assert rep.to_csv().startswith("bin_lo,bin_hi,count\n")
    svg = rep.to_svg()
    assert svg.startswith("<svg") and svg.count("<rect") == 26


def test_histogram_too_few():
    with pytest.raises(TooFewRecords):
        first_zero_histogram([_rec(-3)] * 10)


def test_repulsion_never_violated_above_one():
    recs = [_rec(-(4 * i + 3), gamma=1.0 + i) for i in range(10)]
    rep = repulsion_audit(recs)
    assert rep.violations == 0
    assert rep.per_class["rank0"]["min_exponent"] >= 0
    assert rep.reference == -0.25


def test_gap_report_empty_class():
    with pytest.raises(EmptyClass):
        gap_report([_rec(-3)])


@pytest.fixture(scope="module")
def scan11(e11):
    return scan_family(e11, -200, 200, ScanOptions(d0=-3))


def test_scan_contract(scan11, e11):
    from tests.test_twist import field_discriminants

    expected = sorted(d for d in field_discriminants(200) if math.gcd(d, 11) == 1)
    assert [r.d for r in scan11] == expected
    assert not [r for r in scan11 if r.error]
    for r in scan11:
        if r.sign == -1:
            assert r.central_L <= 1e-8
        if r.cls is Classification.RANK0:
            assert r.sign == 1 and r.central_L > 0 and r.waldspurger_v > 0
        if r.cls is Classification.RANK1:
            assert r.sign == -1
        if r.repulsion_exponent is not None:
            assert r.gamma_d < 1


def test_scan_waldspurger_and_gaps(scan11):
    wr = infer_kappa(scan11, modulus=44)
    assert wr.explained >= 0.9
    attach_waldspurger(scan11, wr)
    gap = gap_report(scan11, wr)
    assert gap.c0 >= gap.kappa_hat * (1 - 5e-3)
    assert gap.c1 > 0


def test_kappa_stable_when_range_grows(scan11):
    small = [r for r in scan11 if abs(r.d) <= 100]
    a = infer_kappa(small, modulus=44)
    b = infer_kappa(scan11, modulus=44)
    for key in a.class_kappas:
        assert a.class_kappas[key] == pytest.approx(b.class_kappas[key], rel=1e-6)


def test_mean_normalized_zero_order_one(scan11):
    x = [r.normalized_first_zero for r in scan11 if r.normalized_first_zero is not None]
    assert 0.2 < float(np.mean(x)) < 5


def test_csv_round_trip(scan11):
    text = records_to_csv(scan11)
    again = records_to_csv(records_from_csv(text))
    assert text == again
    assert text.splitlines()[0] == "d,sign,class,L_half,Lprime_half,gamma_d,norm_zero,exponent,wald_v,wald_c,wald_residual,genus_member,error"


def test_scan_parallel_matches_serial(e11):
    a = scan_family(e11, -60, -3, ScanOptions(d0=-3, jobs=1))
    b = scan_family(e11, -60, -3, ScanOptions(d0=-3, jobs=2))
    assert records_to_csv(a) == records_to_csv(b)


def test_large_range_rejected_for_37(e37):
    with pytest.raises(ConfigError):
        scan_family(e37, -600, -500, ScanOptions(d0=-3))
