import numpy as np
import pytest

from polariton_casimir.core import (
    CouplingSpec,
    benchmark_coupling,
    lorentzian_coupling,
    zero_coupling,
)
from polariton_casimir.reduction import (
    GeneralCoupling,
    reduce_general,
    reduce_y_and_ydot,
    reduce_ydot_family,
)
from polariton_casimir.spectral import MediumResponse, mu_squared

W = np.geomspace(1e-2, 1e2, 40)


def spec_scaled(base, factor):
    return CouplingSpec(kind=f"{base.kind}*{factor}",
                        v2=lambda w: factor * base.v2(w),
                        tail_exponent=base.tail_exponent,
                        zero_exponent=base.zero_exponent)


class TestYdotFamily:
    def test_two_equal_lorentzians(self):
        c = lorentzian_coupling(1.0)
        eff = reduce_ydot_family([c, c])
        assert np.allclose(eff(W), 2.0 / (W**2 + 1), rtol=1e-14)

    def test_single_is_identity(self):
        c = benchmark_coupling()
        eff = reduce_ydot_family([c])
        assert np.allclose(eff(W), c(W), rtol=0)
        assert eff.metadata["reduced_from"] == [c.kind]

    def test_empty_is_zero(self):
        eff = reduce_ydot_family([])
        assert np.all(eff(W) == 0.0)

    def test_benchmark_split_recombines(self):
        b = benchmark_coupling()
        parts = [spec_scaled(b, 0.2), spec_scaled(b, 0.5), spec_scaled(b, 0.3)]
        eff = reduce_ydot_family(parts)
        assert np.allclose(eff(W), b(W), rtol=1e-14)
        # dielectric function agreement through the full response chain
        r_eff = MediumResponse.from_coupling(eff, alpha=1.0, model="hb")
        r_dir = MediumResponse.from_coupling(b, alpha=1.0, model="hb")
        w = np.geomspace(0.1, 10.0, 7)
        assert np.max(np.abs(r_eff.eps(w) - r_dir.eps(w))) < 1e-10


class TestYAndYdot:
    def test_pure_ydot_identity(self):
        b = benchmark_coupling()
        eff, dm = reduce_y_and_ydot(b, zero_coupling())
        assert dm == 0.0
        assert np.allclose(eff(W), b(W), rtol=0)

    def test_pure_y_gives_benchmark(self):
        # v2^2 = w^2 (2/pi)/(w^2+1) folds to the benchmark density with
        # counterterm int (2/pi)/(w^2+1) = 1
        v2 = CouplingSpec(kind="y-lor", tail_exponent=0.0, zero_exponent=2.0,
                          v2=lambda w: w * w * (2 / np.pi) / (w * w + 1.0))
        eff, dm = reduce_y_and_ydot(zero_coupling(), v2)
        assert dm == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(eff(W), benchmark_coupling()(W), rtol=1e-12)
        # total mass shift equals int v_eff^2
        assert mu_squared(eff) == pytest.approx(dm, abs=1e-9)

    def test_divergent_counterterm_rejected(self):
        half = spec_scaled(benchmark_coupling(), 0.5)
        with pytest.raises(ValueError, match="diverges"):
            reduce_y_and_ydot(half, half)


class TestGeneral:
    def test_degenerate_single_pair(self):
        v2 = CouplingSpec(kind="y-q", tail_exponent=2.0, zero_exponent=2.0,
                          v2=lambda w: 0.25 * (2 / np.pi) * w * w /
                          (w * w + 1.0) ** 2)
        g = GeneralCoupling(v1_list=(benchmark_coupling(),), v2_list=(v2,))
        eff_g, dm_g = reduce_general(g)
        eff_p, dm_p = reduce_y_and_ydot(benchmark_coupling(), v2)
        assert dm_g == pytest.approx(dm_p, rel=1e-12)
        assert np.allclose(eff_g(W), eff_p(W), rtol=1e-14)
        # quarter-strength quadratic Lorentzian: counterterm = (1/8)
        assert dm_g == pytest.approx(0.125, abs=1e-9)

    def test_pure_ydot_matches_family(self):
        c1 = lorentzian_coupling(0.7)
        c2 = lorentzian_coupling(0.3, scale=2.0)
        g = GeneralCoupling(v1_list=(c1, c2))
        eff_g, dm = reduce_general(g)
        assert dm == 0.0
        eff_f = reduce_ydot_family([c1, c2])
        assert np.allclose(eff_g(W), eff_f(W), rtol=1e-14)

    def test_mixed_three_component_equivalence(self):
        # 0.4 + 0.35 ydot benchmark components plus a y-type piece whose
        # fold adds 0.25/(w^2+1)^2
        b = benchmark_coupling()
        y = CouplingSpec(kind="y-part", tail_exponent=2.0, zero_exponent=2.0,
                         v2=lambda w: 0.25 * (2 / np.pi) * w * w /
                         (w * w + 1.0) ** 2)
        g = GeneralCoupling(
            v1_list=(spec_scaled(b, 0.4), spec_scaled(b, 0.35)),
            v2_list=(None, None, y))
        eff, dm = reduce_general(g)
        direct = CouplingSpec(
            kind="direct", tail_exponent=2.0,
            v2=lambda w: (2 / np.pi) * (0.75 / (w * w + 1.0)
                                        + 0.25 / (w * w + 1.0) ** 2))
        assert np.max(np.abs(eff(W) - direct(W))) < 1e-14
        r1 = MediumResponse.from_coupling(eff, model="d")
        r2 = MediumResponse.from_coupling(direct, model="d")
        w = np.geomspace(0.1, 10, 5)
        assert np.max(np.abs(r1.eps(w) - r2.eps(w))) < 1e-8

    def test_counterterm_restores_consistency(self):
        from polariton_casimir.core import PhysParams, make_mode_context
        from polariton_casimir.spectral import check_consistency

        y = CouplingSpec(kind="y-only", tail_exponent=0.0, zero_exponent=2.0,
                         v2=lambda w: w * w * (2 / np.pi) / (w * w + 1.0))
        eff, dm = reduce_y_and_ydot(zero_coupling(), y)
        p = PhysParams(a=40.0)
        # with the counterterm: mass shift = int v_eff^2 -> passes for all n
        for n in (1, 2, 5):
            ctx = make_mode_context(p, "d", n, mu2=dm)
            assert check_consistency(eff, ctx, "d").ok
        # regression: omitting it fails at small k_n
        ctx_bad = make_mode_context(p, "d", 1, mu2=0.0)
        assert not check_consistency(eff, ctx_bad, "d").ok
