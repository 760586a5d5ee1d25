"""Acceptance criteria, one test per criterion, printed pass/fail lines.

Each criterion is asserted at its stated tolerance. Criterion 5 encodes the
published large-separation behaviour of the atom-mediated model with its
documented fallback; the model as implemented (validated by the commutator
sum rules and dual-path contour checks) approaches a finite plateau
instead, so that single criterion fails honestly; the assertion message
carries the measured slopes and correlations.
"""

import math

import numpy as np
import pytest

from polariton_casimir.core import (
    CouplingSpec,
    PhysParams,
    QuadSettings,
    benchmark_coupling,
    make_mode_context,
)
from polariton_casimir.dmodel import DEngine, d_casimir_energy, vacuum_energy
from polariton_casimir.hbmodel import (
    HBEngine,
    hb_casimir_energy,
    he_dual_paths,
    hx_rotated,
    mode_e_x,
    sum_rules,
)
from polariton_casimir.numerics import integrate_pv, sum_minus_integral
from polariton_casimir.reduction import GeneralCoupling, reduce_general
from polariton_casimir.spectral import MediumResponse

QS = QuadSettings()


def report(num, ok, detail):
    state = "PASS" if ok else "FAIL"
    print(f"[{state}] criterion {num}: {detail}", flush=True)
    return ok


@pytest.fixture(scope="module")
def bench():
    return MediumResponse.benchmark(1.0)


@pytest.fixture(scope="module")
def d_engine(bench):
    return DEngine(bench, QS)


@pytest.fixture(scope="module")
def hb_engine(bench):
    eng = HBEngine(bench, QS)
    eng.tables()
    return eng


def test_criterion_1_vacuum_limit():
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        for fn in (d_casimir_energy, hb_casimir_energy):
            r = fn(PhysParams(alpha=0.0), a=a)
            worst = max(worst, abs(r.energy / vacuum_energy(a) - 1.0))
    assert report(1, worst < 1e-6,
                  f"alpha=0 energy matches -pi/24a, worst rel {worst:.2e}")


def test_criterion_2_benchmark_eps_equivalence(bench):
    quad = MediumResponse.from_coupling(benchmark_coupling(), alpha=1.0,
                                        model="hb", qs=QS)
    w = np.geomspace(1e-2, 1e2, 200)
    rel = np.max(np.abs(quad.eps(w) - bench.eps(w)) / np.abs(bench.eps(w)))
    iaxis = abs(quad.eps_imag(1.0) - 5.0 / 3.0)
    ok = rel < 1e-6 and iaxis < 1e-8
    assert report(2, ok, f"quadrature eps rel {rel:.2e} on 200 log points; "
                  f"eps(i) defect {iaxis:.2e}")


def test_criterion_3_d_plateau(d_engine):
    r = d_engine.energy(40.0)
    ok = abs(r.e_medium - (-0.1618)) <= 5e-3
    assert report(3, ok, f"E1_D(40) = {r.e_medium:.5f} vs -0.1618 +- 0.005")


def test_criterion_4_d_force_decay(d_engine):
    a = np.linspace(30.0, 60.0, 7)
    f = np.array([d_engine.force(x).force_medium for x in a])
    slope = float(np.polyfit(a, np.log(np.abs(f)), 1)[0])
    ok = abs(slope - (-0.055)) <= 0.2 * 0.055
    assert report(4, ok,
                  f"ln|F1_D| slope over [30,60] = {slope:.4f} "
                  f"vs -0.055 +- 20%")


def test_criterion_5_hb_asymptotics(d_engine, hb_engine):
    a = np.geomspace(20.0, 80.0, 9)
    e = np.array([hb_engine.medium_energy(x)[0] for x in a])
    slope = float(np.polyfit(np.log(a), e, 1)[0])
    f40 = hb_engine.force(40.0)
    f80 = hb_engine.force(80.0)
    fa40 = f40.force_medium * 40.0
    fa80 = f80.force_medium * 80.0
    primary = (abs(slope - (-8.0)) <= 0.15 * 8.0
               and abs(fa80 - 6.0) <= 0.2 * 6.0)
    # fallback shape criterion for a pure convention shift
    corr = float(np.corrcoef(np.log(a), e)[0, 1])
    loglog = float(np.polyfit(
        np.log([20.0, 40.0, 80.0]),
        np.log(np.abs([hb_engine.force(20.0).force_medium,
                       f40.force_medium, f80.force_medium])), 1)[0])
    ed = d_engine.energy(40.0)
    eh = hb_engine.energy(40.0)
    headline = (abs(eh.e_medium - ed.e_medium)
                > 10.0 * (eh.err_estimate + ed.err_estimate)
                and abs(eh.e_medium) > abs(ed.e_medium))
    fallback = (corr <= -0.999 and abs(loglog - (-1.0)) <= 0.05
                and headline)
    ok = primary or fallback
    assert report(
        5, ok,
        f"E1_HB slope vs ln a = {slope:.4f} (paper -8 +- 15%), "
        f"F*a(80) = {fa80:.4f} (paper 6 +- 20%); fallback: corr = {corr:.4f}"
        f" (need <= -0.999), F log-log slope = {loglog:.3f} (need -1 +- "
        f"0.05), headline |E_HB|>|E_D| by >10x errors: {headline}. "
        "The commutator-validated model plateaus; see README.")


SUM_RULE_GRID = [(n, a, alpha) for n in (1, 3, 10) for a in (math.pi, 10.0)
                 for alpha in (0.5, 1.0)]


def test_criterion_6_sum_rules():
    worst = 0.0
    worst_norm = 0.0
    for n, a, alpha in SUM_RULE_GRID:
        resp = MediumResponse.benchmark(alpha)
        ctx = make_mode_context(PhysParams(a=a, alpha=alpha), "hb", n)
        rep = sum_rules(ctx, resp, QS)
        worst = max(worst, rep.worst)
        worst_norm = max(worst_norm, rep.normalization_defect)
    ok = worst < 1e-6 and worst_norm < 1e-4
    assert report(6, ok,
                  f"12 (n,a,alpha) combos: worst orthogonality {worst:.2e} "
                  f"(tol 1e-6), worst normalization defect {worst_norm:.2e} "
                  f"(tol 1e-4)")


DUAL_POINTS = [(1, math.pi), (2, math.pi), (1, 5.0), (3, 10.0), (2, 2.0)]


def test_criterion_7_dual_paths(bench):
    worst = 0.0
    for n, a in DUAL_POINTS:
        ctx = make_mode_context(PhysParams(a=a, alpha=1.0), "hb", n)
        ra, ro = he_dual_paths(ctx, bench, QS)
        worst = max(worst, abs(ra - ro) / abs(ra))
        direct, _ = mode_e_x(ctx, bench, QS)
        rot = hx_rotated(ctx, bench, QS)
        worst = max(worst, abs(rot - direct) / abs(direct))
    assert report(7, worst < 1e-3,
                  f"rotated-contour-with-residues vs real axis at 5 points: "
                  f"worst rel {worst:.2e} (tol 1e-3)")


def test_criterion_8_reduction_equivalence():
    b = benchmark_coupling()
    y_part = CouplingSpec(
        kind="y-part", tail_exponent=2.0, zero_exponent=2.0,
        v2=lambda w: 0.25 * (2 / np.pi) * w * w / (w * w + 1.0) ** 2)
    three = GeneralCoupling(
        v1_list=(CouplingSpec("p1", lambda w: 0.4 * b.v2(w), 2.0),
                 CouplingSpec("p2", lambda w: 0.35 * b.v2(w), 2.0)),
        v2_list=(None, None, y_part))
    eff, counterterm = reduce_general(three)
    direct = CouplingSpec(
        kind="direct", tail_exponent=2.0,
        v2=lambda w: (2 / np.pi) * (0.75 / (w * w + 1.0)
                                    + 0.25 / (w * w + 1.0) ** 2))
    r_eff = MediumResponse.from_coupling(eff, model="d", qs=QS)
    r_dir = MediumResponse.from_coupling(direct, model="d", qs=QS)
    w = np.geomspace(1e-2, 1e2, 24)
    eps_gap = np.max(np.abs(r_eff.eps(w) - r_dir.eps(w)))
    e_eff = DEngine(r_eff, QS).energy(5.0)
    e_dir = DEngine(r_dir, QS).energy(5.0)
    e_gap = abs(e_eff.e_medium - e_dir.e_medium)
    ok = eps_gap < 1e-8 and e_gap < 1e-6
    assert report(8, ok,
                  f"3-component reduction vs direct: eps gap {eps_gap:.2e} "
                  f"(tol 1e-8), E1_D gap {e_gap:.2e} (tol 1e-6), "
                  f"counterterm mu2 {counterterm:.6f}")


def test_criterion_9_numerics_oracles():
    checks = []
    r = sum_minus_integral(lambda n: np.exp(-n))
    exact = 1.0 / (np.e - 1.0) - 1.0
    checks.append((abs(r.value - exact), abs(r.value - exact)
                   <= max(3 * r.err, 1e-8)))
    r2 = sum_minus_integral(lambda n: 1.0 / (n * n + 1), tail_exponent=2)
    exact2 = (np.pi / np.tanh(np.pi) - 1.0) / 2.0 - np.pi / 2.0
    checks.append((abs(r2.value - exact2), abs(r2.value - exact2)
                   <= max(3 * r2.err, 1e-8)))
    pv = integrate_pv(lambda x: 1.0 / ((x * x + 1) * (x - 1.0)), 1.0,
                      lower=-np.inf, upper=np.inf, tail_exponent=3,
                      numerator=lambda x: 1.0 / (x * x + 1),
                      prescription="minus_i0")
    gap = abs(pv.value - (-np.pi / 2 + 1j * np.pi / 2))
    checks.append((gap, gap <= max(3 * pv.err, 1e-8)))
    worst = max(c[0] for c in checks)
    ok = all(c[1] for c in checks)
    assert report(9, ok, f"closed-form oracles reproduce to 1e-8 and error "
                  f"estimates bound the defect by <= 3x; worst {worst:.2e}")


def test_criterion_10_scaling():
    worst = 0.0
    for m in (0.5, 2.0):
        for fn in (d_casimir_energy, hb_casimir_energy):
            rm = fn(PhysParams(a=6.0, alpha=m, m=m))
            r1 = fn(PhysParams(a=6.0 * m, alpha=1.0, m=1.0))
            worst = max(worst, abs(rm.energy - m * r1.energy)
                        / max(abs(rm.energy), 1e-12))
    assert report(10, worst < 1e-9,
                  f"m-rescaling identity E(a; m) = m e(m a) for m in "
                  f"{{0.5, 2}}: worst rel {worst:.2e}")
