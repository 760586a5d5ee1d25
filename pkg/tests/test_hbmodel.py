import math

import numpy as np
import pytest

from polariton_casimir.core import PhysParams, QuadSettings, make_mode_context
from polariton_casimir.spectral import MediumResponse
import polariton_casimir.hbmodel as hb

QS = QuadSettings()


@pytest.fixture(scope="module")
def resp():
    return MediumResponse.benchmark(1.0)


@pytest.fixture(scope="module")
def ctx():
    return make_mode_context(PhysParams(a=math.pi, alpha=1.0), "hb", 1)


@pytest.fixture(scope="module")
def engine(resp):
    return hb.HBEngine(resp)


class TestInversionCoefficients:
    def test_nu0_at_resonant_point(self, resp, ctx):
        # at w = omega1 the bracket collapses to -alpha^2 w P*; with
        # eps(1) = i this gives |nu0(1)|^2 = 1/(4 pi)
        val = hb.nu0(ctx, 1.0, resp)
        assert abs(val) ** 2 == pytest.approx(1.0 / (4 * np.pi), rel=1e-12)

    def test_nu0_reduces_to_beta0_in_decoupling_limit(self):
        r = MediumResponse.benchmark(1e-4)
        cx = make_mode_context(PhysParams(a=math.pi, alpha=1e-4), "hb", 1)
        c = hb.hb_coeffs(cx, r)
        w = np.array([0.6, 1.7])
        assert np.allclose(c.nu0(w), c.beta0(w), atol=1e-7)
        assert np.allclose(c.mu0(w), c.alpha0(w), atol=1e-7)

    def test_nu0_against_defining_formula(self, resp, ctx):
        # the closed form versus the paper-style three-piece assembly
        c = hb.hb_coeffs(ctx, resp)
        for w in (0.6, 1.3):
            wc = complex(w)
            ps = complex(c.ps(w))
            eps_c = complex(resp.eps(wc))
            v1 = complex(c.v1(w))
            lam = ctx.lambda_n
            bracket = (ctx.omega1 - w
                       - (ctx.omega1 - w) * ps * w * w * (1 - np.conj(eps_c))
                       - resp.alpha ** 2 * w * ps)
            ref = 1j * v1 / (2 * lam * w) * bracket
            assert complex(c.nu0(w)) == pytest.approx(ref, rel=1e-12)

    def test_mu0_is_omega1_flip_of_nu0(self, resp, ctx):
        c = hb.hb_coeffs(ctx, resp)
        w = 0.9
        ps = complex(c.ps(w))
        eps_c = complex(resp.eps(complex(w)))
        v1 = complex(c.v1(w))
        flip = 1j * v1 / (2 * ctx.lambda_n * w) * (
            -(ctx.omega1 + w)
            + (ctx.omega1 + w) * ps * w * w * (1 - np.conj(eps_c))
            - resp.alpha ** 2 * w * ps)
        assert complex(c.mu0(w)) == pytest.approx(flip, rel=1e-12)

    def test_nu1_three_term_form(self, resp, ctx):
        c = hb.hb_coeffs(ctx, resp)
        k1n = ctx.k_1n
        for wp, w in [(0.7, 1.4), (2.1, 0.4)]:
            v1p = complex(c.v1(wp))
            v1w = complex(c.v1(w))
            ps = complex(c.ps(wp))
            t1 = -(k1n / 2) * ps * v1w * v1p / (wp + w)
            t2 = complex(-1j * (ctx.omega1 / (2 * ctx.lambda_n * wp))
                         * c.V(w) * v1p / (wp + w))
            j2 = complex(2.0 / k1n * (c.u(w) + c.u(wp)) / (w + wp))
            t3 = (1j * k1n / (4 * resp.alpha)
                  * math.sqrt(k1n * ctx.omega1) * ps * c.V(w) * v1p * j2)
            ref = t1 + t2 + t3
            assert complex(hb.nu1(ctx, wp, w, resp)) == pytest.approx(
                ref, rel=1e-12)

    def test_nu1_symmetric_point_kernel(self, resp, ctx):
        # at w = w' the pair kernel collapses to (2/k1n)(1 - eps*(w))
        c = hb.hb_coeffs(ctx, resp)
        w = 1.1
        j2 = 2.0 / ctx.k_1n * (c.u(w) + c.u(w)) / (2 * w)
        assert complex(j2) == pytest.approx(
            2.0 / ctx.k_1n * (1 - np.conj(complex(resp.eps(complex(w))))),
            rel=1e-13)

    def test_nu1_reduces_to_beta1(self):
        r = MediumResponse.benchmark(1e-4)
        cx = make_mode_context(PhysParams(a=math.pi, alpha=1e-4), "hb", 1)
        c = hb.hb_coeffs(cx, r)
        assert complex(c.nu1(0.8, 1.9)) == pytest.approx(
            complex(c.beta1(0.8, 1.9)), rel=1e-6)

    def test_nu1_envelope(self, resp, ctx):
        # |nu1|^2 bounded by C/(w+w')^2 |V(w)|^2 |V1(w')|^2 on a grid
        c = hb.hb_coeffs(ctx, resp)
        w = np.geomspace(0.2, 20, 10)
        ratios = []
        for wp in np.geomspace(0.2, 20, 10):
            num = np.abs(c.nu1(wp, w)) ** 2 * (w + wp) ** 2
            den = c.V(w) ** 2 * abs(c.v1(wp)) ** 2
            ratios.append(np.max(num / den))
        assert np.max(ratios) < 50.0

    def test_rejects_nonpositive_frequency(self, resp, ctx):
        with pytest.raises(ValueError):
            hb.nu0(ctx, -1.0, resp)


class TestExpectations:
    def test_he_zero_point_piece(self, resp, ctx):
        v, err = hb.expectation_he(ctx, resp, QS)
        assert 0.5 * (ctx.k_1n - ctx.k_n) == pytest.approx(
            (math.sqrt(2) - 1) / 2, abs=1e-12)
        # the electromagnetic integral is positive here
        assert v > 0.5 * (ctx.k_1n - ctx.k_n)

    def test_he_alpha_zero(self):
        r = MediumResponse.benchmark(0.0)
        cx = make_mode_context(PhysParams(a=math.pi, alpha=0.0), "hb", 1)
        v, _ = hb.expectation_he(cx, r, QS)
        assert v == pytest.approx(0.0, abs=1e-12)

    def test_hx_integrand_positive(self, resp, ctx):
        for w in (0.3, 1.0, 4.0):
            assert hb.hx_integrand(ctx, resp, w) >= 0.0

    def test_hx_integrand_spot(self, resp, ctx):
        # integrand at w = 1: omega1 |nu0(1)|^2 = 1/(4 pi)
        assert hb.hx_integrand(ctx, resp, 1.0) == pytest.approx(
            1.0 / (4 * np.pi), rel=1e-12)

    def test_hex_vanishes_at_alpha_zero(self):
        r = MediumResponse.benchmark(0.0)
        cx = make_mode_context(PhysParams(a=math.pi, alpha=0.0), "hb", 1)
        assert hb.expectation_hex(cx, r, QS) == (0.0, 0.0)

    def test_realness_of_crosschecks(self, resp, ctx):
        direct, reduced, diff = hb.hex_crosscheck(ctx, resp, QS)
        assert abs(direct.imag) < 1e-10 * max(1.0, abs(direct))
        assert diff < 1e-8

    def test_hxy_crosscheck(self, resp, ctx):
        direct, reduced, diff = hb.hxy_crosscheck(ctx, resp, QS)
        # the direct pairing carries its own quadrature error; agreement at
        # the percent level validates the commutator-reduced form
        assert abs(direct.imag) < 2e-2 * abs(reduced)
        assert diff < 2e-2 * abs(reduced)

    def test_hy_weight_asymmetry(self, resp, ctx):
        # weights w vs w' on |nu1(w', w)|^2 - |beta1|^2 give different
        # numbers; both must match a brute-force grid evaluation
        c = hb.hb_coeffs(ctx, resp)
        w = np.geomspace(1e-4, 300.0, 900)
        wp = np.geomspace(1e-4, 300.0, 901)
        W, WP = np.meshgrid(w, wp, indexing="ij")
        f = (np.abs(c.nu1(WP, W)) ** 2 - np.abs(c.beta1(WP, W)) ** 2)
        i_w = np.trapezoid(np.trapezoid(W * f, wp, axis=1), w)
        i_wp = np.trapezoid(np.trapezoid(WP * f, wp, axis=1), w)
        v_w, _ = hb.mode_e_y(ctx, resp, QS)
        assert abs(i_w - i_wp) > 1e-3  # genuinely asymmetric
        assert v_w == pytest.approx(i_w, rel=2e-2)


class TestSumRules:
    def test_benchmark_point(self, resp, ctx):
        rep = hb.sum_rules(ctx, resp, QS)
        assert rep.worst < 1e-8
        assert rep.normalization == pytest.approx(1.0, abs=1e-6)

    def test_alpha_small_trivial(self):
        r = MediumResponse.benchmark(1e-3)
        cx = make_mode_context(PhysParams(a=math.pi, alpha=1e-3), "hb", 1)
        rep = hb.sum_rules(cx, r, QS)
        assert rep.normalization == pytest.approx(1.0, abs=1e-6)

    def test_corrupted_response_breaks_normalization(self, resp, ctx):
        class Corrupted:
            def __init__(self, base):
                self._b = base
                self.alpha = base.alpha
                self.g2 = base.g2
                self.omega0 = base.omega0
                self.mode = base.mode
                self.coupling = base.coupling
                self.qs = base.qs

            def __getattr__(self, name):
                return getattr(self._b, name)

            def eps(self, w):
                return 1.0 + 1.01 * (self._b.eps(w) - 1.0)

        bad = Corrupted(resp)
        rep = hb.sum_rules(ctx, bad, QS)
        assert rep.normalization_defect > 1e-3


class TestDualPaths:
    POINTS = [(1, math.pi), (2, math.pi), (1, 5.0), (3, 10.0), (2, 2.0)]

    @pytest.mark.parametrize("n,a", POINTS)
    def test_he_paths_agree(self, resp, n, a):
        cx = make_mode_context(PhysParams(a=a, alpha=1.0), "hb", n)
        real_axis, rotated = hb.he_dual_paths(cx, resp, QS)
        assert rotated == pytest.approx(real_axis, rel=1e-3)

    @pytest.mark.parametrize("n,a", POINTS)
    def test_hx_rotated_with_residues(self, resp, n, a):
        cx = make_mode_context(PhysParams(a=a, alpha=1.0), "hb", n)
        direct, _ = hb.mode_e_x(cx, resp, QS)
        rotated = hb.hx_rotated(cx, resp, QS)
        assert rotated == pytest.approx(direct, rel=1e-3)


class TestModeEnergy:
    def test_breakdown_total(self, resp, ctx):
        bd = hb.hb_mode_energy(ctx, resp, QS)
        assert bd.total == pytest.approx(
            bd.e_zp + bd.e_em + bd.e_x + bd.e_y + bd.e_xy + bd.e_ex)
        assert bd.e_zp == pytest.approx((math.sqrt(2) - 1) / 2, abs=1e-12)

    def test_k_dependence_only(self, resp):
        # same k_n from different (n, a) gives identical per-mode energy
        c1 = make_mode_context(PhysParams(a=math.pi, alpha=1.0), "hb", 1)
        c2 = make_mode_context(PhysParams(a=2 * math.pi, alpha=1.0), "hb", 2)
        b1 = hb.hb_mode_energy(c1, resp, QS)
        b2 = hb.hb_mode_energy(c2, resp, QS)
        assert b1.total == pytest.approx(b2.total, rel=1e-10)

    def test_decoupling_rate(self):
        # per-mode total scales like alpha^2 as the coupling is removed
        totals = []
        for alpha in (0.05, 0.2):
            r = MediumResponse.benchmark(alpha)
            cx = make_mode_context(PhysParams(a=math.pi, alpha=alpha),
                                   "hb", 1)
            totals.append(hb.hb_mode_energy(cx, r, QS).total)
        ratio = totals[1] / totals[0]
        assert ratio == pytest.approx(16.0, rel=0.25)

    def test_alpha_zero_shortcut(self):
        r = MediumResponse.benchmark(0.0)
        cx = make_mode_context(PhysParams(a=1.0, alpha=0.0), "hb", 1)
        assert hb.hb_mode_energy(cx, r, QS).total == 0.0


class TestCasimir:
    def test_vacuum_limit(self):
        p = PhysParams(alpha=0.0)
        r = hb.hb_casimir_energy(p, a=1.0)
        assert r.energy == pytest.approx(-math.pi / 24.0, rel=1e-6)

    def test_headline_inequality(self, engine, resp):
        # with the identical dielectric function the two couplings give
        # very different Casimir energies, far beyond the error budget
        from polariton_casimir.dmodel import DEngine
        deng = DEngine(resp)
        gap_prev = 0.0
        for a in (20.0, 40.0):
            eh = engine.energy(a)
            ed = deng.energy(a)
            gap = abs(eh.e_medium - ed.e_medium)
            assert gap > 10.0 * (eh.err_estimate + ed.err_estimate)
            assert abs(eh.e_medium) > abs(ed.e_medium)
            assert gap > gap_prev
            gap_prev = gap

    def test_energy_converges(self, engine):
        r = engine.energy(10.0)
        assert r.converged
        assert r.e_medium < -0.3

    def test_force_sign_and_magnitude(self, engine):
        f = engine.force(40.0)
        assert f.converged
        # the medium force is repulsive-signed here and small
        assert abs(f.force_medium) < 1e-2

    def test_scaling_identity(self):
        for m in (0.5, 2.0):
            pm = PhysParams(a=5.0, alpha=m * 1.0, m=m)
            p1 = PhysParams(a=5.0 * m, alpha=1.0, m=1.0)
            rm = hb.hb_casimir_energy(pm)
            r1 = hb.hb_casimir_energy(p1)
            assert rm.energy == pytest.approx(m * r1.energy, rel=1e-9)


class TestStageCoefficientBundles:
    def test_stage_one_ratios_and_kernel(self, resp, ctx):
        s1 = hb.stage_one_coeffs(ctx, resp)
        w = np.array([0.4, 1.0, 3.7])
        ratio = s1.beta0(w) / s1.alpha0(w)
        assert np.allclose(ratio, (w - ctx.omega1) / (w + ctx.omega1),
                           rtol=1e-13)
        j = s1.j_kernel(w)
        expect = 2.0 * w * (1 - np.conj(resp.eps(w))) / ctx.k_1n
        assert np.allclose(j, expect, rtol=1e-13)

    def test_stage_two_ratio_and_kernels(self, resp, ctx):
        s2 = hb.stage_two_coeffs(ctx, resp)
        w = np.array([0.6, 1.9])
        ratio = s2.eta0(w) / s2.xi0(w)
        assert np.allclose(ratio, (w - ctx.k_1n) / (w + ctx.k_1n),
                           rtol=1e-13)
        # kernels are the validated closed forms
        assert complex(s2.nu0(1.0)) == pytest.approx(
            complex(hb.nu0(ctx, 1.0, resp)), rel=1e-14)
        assert complex(s2.nu1(0.7, 1.3)) == pytest.approx(
            complex(hb.nu1(ctx, 0.7, 1.3, resp)), rel=1e-14)
