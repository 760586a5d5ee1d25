"""The atom-mediated (Huttner-Barnett) model.

The field couples to the reservoir through an intermediate atom oscillator,
diagonalized in two stages: first the matter block (atom + reservoir, giving
the response sigma and propagator Q), then the field against the dressed
matter continuum (giving eps and the mode propagator P_n). The ground-state
energy splits into the zero-point shift of the dressed mode, the
electromagnetic expectation, and four matter/interaction expectations built
from the inversion coefficients.

Phase bookkeeping: with a real coupling density every complex phase enters
through Q*, P* and eps* only, so all coefficients are written in terms of
vq(w) = V(w) Q*(w) and the bracket functions below; no independent
amplitude phases exist.

For the benchmark medium (omega0 = 0) the unsubtracted matter expectations
carry an infrared-divergent, mode-independent dressing (the zero-frequency
reservoir mode is marginal). Everything here therefore works with the
dressing-subtracted, k-dependent parts: the integrands are differenced
against their infinite-k (pure stage-1) limits pointwise, which is exactly
what survives the sum-minus-integral regularization.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .core import (
    CasimirResult,
    ModeContext,
    PhysParams,
    QuadSettings,
    make_mode_context,
)
from .modesum import ModeFunctionTable
from .numerics import (
    integrate_interval,
    differentiate_central,
    integrate_2d,
    integrate_pv,
    integrate_semi_inf,
    kahan_sum,
    residue_circle,
)
from .spectral import (
    MediumResponse,
    propagator_bar_poles,
    resonance_frequency,
    resonance_width,
)
from .dmodel import vacuum_energy

__all__ = [
    "StageOneCoeffs",
    "StageTwoCoeffs",
    "HBEnergyBreakdown",
    "SumRuleReport",
    "hb_coeffs",
    "stage_one_coeffs",
    "stage_two_coeffs",
    "nu0",
    "mu0",
    "nu1",
    "expectation_he",
    "expectation_hx",
    "expectation_hy",
    "expectation_hxy",
    "expectation_hex",
    "hxy_crosscheck",
    "hex_crosscheck",
    "sum_rules",
    "he_dual_paths",
    "hx_rotated",
    "hb_mode_energy",
    "HBEngine",
    "hb_casimir_energy",
    "hb_force",
]


# ----------------------------------------------------------------------
# coefficient functions


class HBCoeffs:
    """All diagonalization coefficients for one mode of one medium.

    Every method is vectorized over numpy arrays of positive frequencies.
    """

    def __init__(self, ctx: ModeContext, response: MediumResponse):
        if response.omega0 != 0.0 and response.mode == "benchmark":
            raise ValueError("benchmark response has omega0 = 0")
        self.ctx = ctx
        self.r = response
        self.alpha = response.alpha
        self.w1 = ctx.omega1
        self.k1n = ctx.k_1n
        self.kn = ctx.k_n

    # basic response entries -------------------------------------------
    def V(self, w):
        """Stage-1 coupling amplitude sqrt(w v^2(w)/omega1), real."""
        w = np.asarray(w, dtype=float)
        return np.sqrt(w * self.r.coupling.v2(w) / self.w1)

    def vq(self, w):
        """V(w) Q*(w): the only phase carrier of the matter dressing."""
        return self.V(w) * np.conj(self.r.q_prop(np.asarray(w,
                                                            dtype=complex)))

    def ps(self, w):
        """P_n*(w) on the real axis."""
        w = np.asarray(w, dtype=complex)
        return np.conj(1.0 / (self.kn ** 2 - self.r.eps(w) * w * w))

    def u(self, w):
        """w (1 - eps*(w)); tends to i alpha^2 at w -> 0."""
        w = np.asarray(w, dtype=complex)
        return w * (1.0 - np.conj(self.r.eps(w)))

    def ut(self, w):
        """w (1 - eps(w)) (the unstarred companion)."""
        w = np.asarray(w, dtype=complex)
        return w * (1.0 - self.r.eps(w))

    def wfac(self, w):
        """P_n*(w) w^2 (1 - eps*(w)): the recurring dressing bracket."""
        return self.ps(w) * np.asarray(w, dtype=complex) * self.u(w)

    # stage-1 coefficients ----------------------------------------------
    def alpha0(self, w):
        return -0.5 * (np.asarray(w) + self.w1) * self.vq(w)

    def beta0(self, w):
        return -0.5 * (np.asarray(w) - self.w1) * self.vq(w)

    def j_kernel(self, w):
        """J(w) = (2w/k1n)(1 - eps*(w))."""
        return 2.0 * self.u(w) / self.k1n

    # stage-2 coefficients ----------------------------------------------
    def v1(self, w):
        """V1n(w) = -i lambda_n w V(w) Q*(w)."""
        return -1j * self.ctx.lambda_n * np.asarray(w) * self.vq(w)

    def xi0(self, w):
        return -0.5 * (np.asarray(w) + self.k1n) * self.v1(w) * self.ps(w)

    def eta0(self, w):
        return -0.5 * (np.asarray(w) - self.k1n) * self.v1(w) * self.ps(w)

    # inversion coefficients ---------------------------------------------
    def nu0(self, w):
        w = np.asarray(w, dtype=float)
        br = ((self.w1 - w) * (1.0 - self.wfac(w))
              - self.alpha ** 2 * w * self.ps(w))
        return 0.5 * self.vq(w) * br

    def mu0(self, w):
        w = np.asarray(w, dtype=float)
        br = (-(self.w1 + w) * (1.0 - self.wfac(w))
              - self.alpha ** 2 * w * self.ps(w))
        return 0.5 * self.vq(w) * br

    def nu0_minus_mu0(self, w):
        return self.w1 * self.vq(w) * (1.0 - self.wfac(w))

    def nu0_plus_mu0(self, w):
        w = np.asarray(w, dtype=float)
        return self.vq(w) * w * (self.wfac(w)
                                 - self.alpha ** 2 * self.ps(w) - 1.0)

    def delta0(self, w):
        """nu0 - beta0: the k-dependent part of the atom dressing."""
        w = np.asarray(w, dtype=float)
        return 0.5 * self.vq(w) * (-(self.w1 - w) * self.wfac(w)
                                   - self.alpha ** 2 * w * self.ps(w))

    def beta1(self, wp, w):
        """Stage-1 continuum coefficient; also the infinite-k limit of nu1.
        First argument is the dressed-continuum label, second the reservoir
        label."""
        return -0.5 * self.w1 * self.V(w) * self.vq(wp) / (np.asarray(w)
                                                           + np.asarray(wp))

    def r1(self, wp, w):
        """nu1 - beta1: the k-dependent correction, carrying P_n*(w')."""
        wp = np.asarray(wp)
        w = np.asarray(w)
        num = (self.alpha ** 2 * w * self.vq(w)
               + self.V(w) * (self.u(w) + self.u(wp)))
        return 0.5 * self.w1 * self.ps(wp) * wp * self.vq(wp) * num / (w + wp)

    def nu1(self, wp, w):
        return self.beta1(wp, w) + self.r1(wp, w)

    def mu1_pole_coeff(self, wp, w):
        """A(w', w) in mu1(w', w) = delta(w'-w) + A(w', w)/(w'-w-i0)."""
        wp = np.asarray(wp)
        w = np.asarray(w)
        br = (-self.alpha ** 2 * self.ps(wp) * w * wp * np.conj(self.vq(w))
              - self.V(w)
              + self.V(w) * self.ps(wp) * wp * (self.u(wp) - self.ut(w)))
        return 0.5 * self.w1 * self.vq(wp) * br

    # limits used for the dressing subtraction ----------------------------
    def beta0_minus_alpha0(self, w):
        return self.w1 * self.vq(w)


# named coefficient bundles


@dataclass(frozen=True)
class StageOneCoeffs:
    """Matter dressing coefficients alpha0, beta0 and the kernel J."""
    alpha0: object
    beta0: object
    j_kernel: object


@dataclass(frozen=True)
class StageTwoCoeffs:
    """Field dressing coefficients xi0/eta0 and inversion kernels."""
    xi0: object
    eta0: object
    mu0: object
    nu0: object
    nu1: object
    mu1_pole_coeff: object


def hb_coeffs(ctx: ModeContext, response: MediumResponse) -> HBCoeffs:
    return HBCoeffs(ctx, response)


def stage_one_coeffs(ctx: ModeContext,
                     response: MediumResponse) -> StageOneCoeffs:
    """Matter-stage coefficient bundle: beta0/alpha0 = (w-omega1)/(w+omega1)
    pointwise and J(w) = (2w/k1n)(1 - eps*(w))."""
    c = HBCoeffs(ctx, response)
    return StageOneCoeffs(alpha0=c.alpha0, beta0=c.beta0,
                          j_kernel=c.j_kernel)


def stage_two_coeffs(ctx: ModeContext,
                     response: MediumResponse) -> StageTwoCoeffs:
    """Field-stage coefficient bundle; eta0/xi0 = (w-k1n)/(w+k1n) pointwise,
    the canonical normalization int(|xi0|^2-|eta0|^2) = 1, and the
    delta-function parts of the continuum kernels are resolved analytically
    (nu1 is regular, mu1 = delta + pole with coefficient mu1_pole_coeff)."""
    c = HBCoeffs(ctx, response)
    return StageTwoCoeffs(xi0=c.xi0, eta0=c.eta0, mu0=c.mu0, nu0=c.nu0,
                          nu1=c.nu1, mu1_pole_coeff=c.mu1_pole_coeff)


def nu0(ctx: ModeContext, omega, response: MediumResponse):
    if np.any(np.asarray(omega) <= 0):
        raise ValueError("coefficients live on omega > 0")
    return HBCoeffs(ctx, response).nu0(omega)


def mu0(ctx: ModeContext, omega, response: MediumResponse):
    if np.any(np.asarray(omega) <= 0):
        raise ValueError("coefficients live on omega > 0")
    return HBCoeffs(ctx, response).mu0(omega)


def nu1(ctx: ModeContext, omega_c, omega_r, response: MediumResponse):
    """nu1(w', w): w' labels the dressed continuum, w the reservoir."""
    return HBCoeffs(ctx, response).nu1(omega_c, omega_r)


# ----------------------------------------------------------------------
# quadrature scaffolding


def _ladder(ctx, response, span=22):
    w_r = resonance_frequency(ctx, response)
    gam = max(resonance_width(ctx, response, w_r), 1e-13)
    pts = [w_r + s * gam * 2.0 ** j for s in (-1, 1)
           for j in range(0, span, 2)]
    return w_r, [x for x in pts if x > 0]


def _matter_breakpoints(ctx, response):
    a2 = max(response.alpha ** 2, 1e-30)
    inner = ctx.k_n ** 2 / a2
    w_r, ladder = _ladder(ctx, response)
    pts = {ctx.k_n, ctx.k_1n, ctx.omega1, 1.0, w_r, *ladder}
    if inner < 1.0:
        pts |= {inner, math.sqrt(inner)}
    return sorted(p for p in pts if p > 0)


def _e_em_integrand(ctx, response, xi):
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    pos = xi > 0
    if np.any(pos):
        x = xi[pos]
        kn2 = ctx.k_n ** 2
        x2e = response.x2e_imag(x)
        p = 1.0 / (kn2 + x * x + x2e)
        p0 = 1.0 / (kn2 + x * x)
        a2 = response.alpha ** 2
        out[pos] = -(kn2 - x * x) * x2e * p * p0 + a2 * p
    return out


def mode_e_em(ctx: ModeContext, response: MediumResponse,
              qs: QuadSettings) -> tuple[float, float]:
    """Imaginary-axis electromagnetic expectation (1/2pi) int [...] dxi."""
    a2 = max(response.alpha ** 2, 1e-30)
    inner = ctx.k_n ** 2 / a2
    bp = sorted({x for x in (inner, ctx.k_n, 1.0, 10.0) if x > 0})
    r = integrate_semi_inf(lambda xi: _e_em_integrand(ctx, response, xi),
                           rel_tol=qs.rel_tol, abs_tol=qs.abs_tol,
                           max_subdivisions=qs.max_subdivisions,
                           breakpoints=bp,
                           cutoff=max(qs.omega_cutoff, 10 * ctx.k_n),
                           tail_exponent=2.0)
    return float(r.value) / (2 * math.pi), r.err / (2 * math.pi)


def expectation_he(ctx: ModeContext, response: MediumResponse,
                   qs: QuadSettings | None = None) -> tuple[float, float]:
    """Renormalized electromagnetic expectation including the zero-point
    shift: (k1n - kn)/2 + (1/2pi) int_0^inf dxi [(kn^2-xi^2)(P-P0)
    + alpha^2 P]."""
    qs = qs or QuadSettings()
    v, e = mode_e_em(ctx, response, qs)
    return 0.5 * (ctx.k_1n - ctx.k_n) + v, e


def mode_e_x(ctx: ModeContext, response: MediumResponse,
             qs: QuadSettings) -> tuple[float, float]:
    """omega1 int (|nu0|^2 - |beta0|^2) dw: the k-dependent part of the
    atom expectation (the dressing itself is infrared-divergent for
    omega0 = 0 and cancels in the mode sum)."""
    c = HBCoeffs(ctx, response)

    def f(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        pos = w > 0
        if np.any(pos):
            x = w[pos]
            b0 = c.beta0(x)
            d0 = c.delta0(x)
            out[pos] = 2.0 * (np.conj(b0) * d0).real + np.abs(d0) ** 2
        return out

    r = integrate_semi_inf(f, rel_tol=qs.rel_tol, abs_tol=qs.abs_tol,
                           max_subdivisions=qs.max_subdivisions,
                           breakpoints=_matter_breakpoints(ctx, response),
                           cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                           tail_exponent=3.0)
    return ctx.omega1 * float(r.value), ctx.omega1 * r.err


def expectation_hx(ctx: ModeContext, response: MediumResponse,
                   qs: QuadSettings | None = None) -> tuple[float, float]:
    return mode_e_x(ctx, response, qs or QuadSettings())


def hx_integrand(ctx: ModeContext, response: MediumResponse, omega: float
                 ) -> float:
    """Pointwise (unsubtracted) integrand omega1 |nu0(w)|^2 of the atom
    expectation; positive by construction."""
    c = HBCoeffs(ctx, response)
    return float(ctx.omega1 * np.abs(c.nu0(omega)) ** 2)


def _e_y_integrands(c: HBCoeffs):
    def f_y(w, wp):
        b1 = c.beta1(wp, w)
        r1 = c.r1(wp, w)
        return w * (2.0 * (np.conj(b1) * r1).real + np.abs(r1) ** 2)

    def f_xy(w, wp):
        b1 = c.beta1(wp, w)
        r1 = c.r1(wp, w)
        vqp = c.vq(wp)
        wf = c.wfac(wp)
        term = (-np.conj(b1) * vqp * wf
                + np.conj(r1) * vqp * (1.0 - wf))
        return c.V(w) * c.w1 * term.real

    return f_y, f_xy


def _mode_2d(ctx, response, qs, which) -> tuple[float, float]:
    c = HBCoeffs(ctx, response)
    f_y, f_xy = _e_y_integrands(c)
    f = f_y if which == "y" else f_xy
    ybp = _matter_breakpoints(ctx, response)
    xbp = sorted({ctx.omega1, 1.0, ctx.k_n} - {0.0})
    r = integrate_2d(f, rel_tol=max(qs.rel_tol, 1e-7), abs_tol=qs.abs_tol,
                     max_subdivisions=qs.max_subdivisions,
                     x_breakpoints=xbp, y_breakpoints=ybp,
                     x_cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                     y_cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                     x_tail_exponent=2.0, y_tail_exponent=2.0,
                     calibration_x=(0.4, 1.7, 7.0))
    return float(r.value), r.err


def mode_e_y(ctx, response, qs) -> tuple[float, float]:
    """int dw w int dw' (|nu1(w',w)|^2 - |beta1(w',w)|^2)."""
    return _mode_2d(ctx, response, qs, "y")


def expectation_hy(ctx, response, qs=None):
    return mode_e_y(ctx, response, qs or QuadSettings())


def mode_e_xy(ctx, response, qs) -> tuple[float, float]:
    """Re int dw V(w) int dw' [nu1*(nu0-mu0) - beta1*(beta0-alpha0)]."""
    return _mode_2d(ctx, response, qs, "xy")


def expectation_hxy(ctx, response, qs=None):
    return mode_e_xy(ctx, response, qs or QuadSettings())


def mode_e_ex(ctx: ModeContext, response: MediumResponse,
              qs: QuadSettings) -> tuple[float, float]:
    """lambda_n Im int eta0*(w) (mu0 + nu0)(w) dw; vanishes at alpha = 0."""
    if ctx.lambda_n == 0.0:
        return 0.0, 0.0
    c = HBCoeffs(ctx, response)

    def f(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        pos = w > 0
        if np.any(pos):
            x = w[pos]
            out[pos] = (np.conj(c.eta0(x)) * c.nu0_plus_mu0(x)).imag
        return out

    r = integrate_semi_inf(f, rel_tol=qs.rel_tol, abs_tol=qs.abs_tol,
                           max_subdivisions=qs.max_subdivisions,
                           breakpoints=_matter_breakpoints(ctx, response),
                           cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                           tail_exponent=3.0)
    return ctx.lambda_n * float(r.value), ctx.lambda_n * r.err


def expectation_hex(ctx, response, qs=None):
    return mode_e_ex(ctx, response, qs or QuadSettings())


# ----------------------------------------------------------------------
# cross-checks of the rewritten interaction expectations


def hex_crosscheck(ctx, response, qs=None):
    """Evaluate the interaction expectation both as the direct pairing
    (i/2) lambda int (xi0* - eta0*)(mu0 + nu0) and as the commutator-reduced
    imaginary-part form; returns (direct, reduced, |difference|)."""
    qs = qs or QuadSettings()
    c = HBCoeffs(ctx, response)

    def f(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w, dtype=complex)
        pos = w > 0
        if np.any(pos):
            x = w[pos]
            out[pos] = (np.conj(c.xi0(x)) - np.conj(c.eta0(x))) \
                * c.nu0_plus_mu0(x)
        return out

    r = integrate_semi_inf(f, rel_tol=qs.rel_tol, abs_tol=qs.abs_tol,
                           max_subdivisions=qs.max_subdivisions,
                           breakpoints=_matter_breakpoints(ctx, response),
                           cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                           tail_exponent=3.0)
    direct = complex(0.5j * ctx.lambda_n * r.value)
    reduced, _ = mode_e_ex(ctx, response, qs)
    return direct, reduced, abs(direct - reduced)


def hxy_crosscheck(ctx, response, qs=None, n_omega=3):
    """Compare the k-dependent interaction expectation computed from the
    direct pairing (mu0*-nu0*)(mu1-nu1) (distribution resolved analytically,
    stage-1 dressing subtracted pointwise) against the commutator-reduced
    2-D form. Returns (direct, reduced, |difference|)."""
    qs = qs or QuadSettings()
    c = HBCoeffs(ctx, response)
    w_r, ladder = _ladder(ctx, response)

    def outer(w):
        # delta terms of (mu1 - nu1) and its stage-1 limit
        dm = np.conj(c.mu0(w) - c.nu0(w)) - np.conj(c.alpha0(w) - c.beta0(w))
        out = complex(dm)
        # Sokhotski residues of the pole parts
        a2 = complex(c.mu1_pole_coeff(w, w))
        a1 = -0.5 * c.w1 * c.V(w) * complex(c.vq(w))
        res = (np.conj(c.mu0(w) - c.nu0(w)) * a2
               - np.conj(c.alpha0(w) - c.beta0(w)) * a1)
        out += 1j * math.pi * complex(res)

        def f(wp):
            wp = np.asarray(wp, dtype=float)
            pole2 = c.mu1_pole_coeff(wp, w) / (wp - w)
            pole1 = (-0.5 * c.w1 * c.V(w) * c.vq(wp)) / (wp - w)
            full = (np.conj(c.mu0(wp) - c.nu0(wp)) * (pole2 - c.nu1(wp, w))
                    - np.conj(c.alpha0(wp) - c.beta0(wp))
                    * (pole1 - c.beta1(wp, w)))
            return full

        r = integrate_pv(f, w, rel_tol=max(qs.rel_tol, 1e-8),
                         abs_tol=qs.abs_tol,
                         max_subdivisions=qs.max_subdivisions,
                         breakpoints=[b for b in ladder + [w_r, 1.0]
                                      if abs(b - w) > 1e-9],
                         cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                         tail_exponent=2.0)
        return 0.5 * c.V(w) * (out + complex(r.value))

    def outer_vec(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w, dtype=complex)
        for i, x in enumerate(w.ravel()):
            if x > 0:
                out.ravel()[i] = outer(float(x))
        return out

    r_out = integrate_semi_inf(outer_vec, rel_tol=1e-6, abs_tol=qs.abs_tol,
                               max_subdivisions=200,
                               breakpoints=(ctx.k_n, 1.0, ctx.omega1),
                               cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                               tail_exponent=2.0)
    direct = complex(r_out.value)
    reduced, _ = mode_e_xy(ctx, response, qs)
    return complex(direct), reduced, abs(direct - reduced)


# ----------------------------------------------------------------------
# sum rules


@dataclass(frozen=True)
class SumRuleEntry:
    name: str
    value: complex
    scale: float

    @property
    def normalized(self) -> float:
        return abs(self.value) / max(self.scale, 1e-300)


@dataclass(frozen=True)
class SumRuleReport:
    entries: tuple
    normalization: float
    normalization_err: float

    @property
    def worst(self) -> float:
        return max(e.normalized for e in self.entries)

    @property
    def normalization_defect(self) -> float:
        return abs(self.normalization - 1.0)


def sum_rules(ctx: ModeContext, response: MediumResponse,
              qs: QuadSettings | None = None,
              omegas=(0.7, 1.6)) -> SumRuleReport:
    """Commutator witnesses of the two-stage diagonalization.

    The operator-level identities [a, b] = [a, b^\\dagger] = 0 give two
    1-D orthogonality integrals; [b, b_w] = [b, b_w^\\dagger] = 0 give, for
    every reservoir frequency w, two more involving the continuum kernels
    (whose individually log-divergent pieces are combined pointwise before
    quadrature). The canonical normalization int (|xi0|^2 - |eta0|^2) = 1
    closes the set. Scales are L1 norms of the first product in each rule.
    """
    qs = qs or QuadSettings()
    c = HBCoeffs(ctx, response)
    bp = _matter_breakpoints(ctx, response)
    kw = dict(rel_tol=max(qs.rel_tol, 1e-9), abs_tol=qs.abs_tol,
              max_subdivisions=qs.max_subdivisions,
              cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n))

    def run(f, tail=3.0, extra_bp=()):
        pts = sorted(set(bp) | set(extra_bp))
        return integrate_semi_inf(_masked(f), breakpoints=pts,
                                  tail_exponent=tail, **kw)

    entries = []
    r1 = run(lambda w: -np.conj(c.xi0(w)) * c.nu0(w)
             + c.eta0(w) * np.conj(c.mu0(w)))
    s1 = run(lambda w: np.abs(np.conj(c.xi0(w)) * c.nu0(w)) + 0j)
    entries.append(SumRuleEntry("field-atom (a,b)", complex(r1.value),
                                float(s1.value.real)))
    r2 = run(lambda w: np.conj(c.xi0(w)) * c.mu0(w)
             - c.eta0(w) * np.conj(c.nu0(w)))
    entries.append(SumRuleEntry("field-atom (a,b+)", complex(r2.value),
                                float(s1.value.real)))

    for w0 in omegas:
        e3, e4, sc = _continuum_rules(c, float(w0), bp, qs)
        entries.append(SumRuleEntry(f"atom-reservoir (b,b_w) w={w0}", e3, sc))
        entries.append(SumRuleEntry(f"atom-reservoir (b,b_w+) w={w0}", e4,
                                    sc))

    norm = run(lambda w: (np.abs(c.xi0(w)) ** 2 - np.abs(c.eta0(w)) ** 2)
               + 0j, tail=3.0)
    return SumRuleReport(entries=tuple(entries),
                         normalization=float(norm.value.real),
                         normalization_err=norm.err)


def _masked(f):
    def g(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w, dtype=complex)
        pos = w > 0
        if np.any(pos):
            out[pos] = f(w[pos])
        return out
    return g


def _continuum_rules(c: HBCoeffs, w0: float, bp, qs):
    """The two [b, b_w] rules at reservoir frequency w0, combined
    integrands (the mu0* nu1 and nu0 mu1* pieces separately diverge
    logarithmically at the w' -> 0 endpoint and must cancel pointwise)."""
    a_diag = complex(c.mu1_pole_coeff(w0, w0))

    def f3(wp):
        return (-np.conj(c.mu0(wp)) * c.nu1(wp, w0)
                + c.nu0(wp) * np.conj(c.mu1_pole_coeff(wp, w0)) / (wp - w0))

    def f4(wp):
        return (np.conj(c.mu0(wp)) * c.mu1_pole_coeff(wp, w0) / (wp - w0)
                - c.nu0(wp) * np.conj(c.nu1(wp, w0)))

    kw = dict(rel_tol=max(qs.rel_tol, 1e-9), abs_tol=qs.abs_tol,
              max_subdivisions=qs.max_subdivisions,
              cutoff=max(qs.omega_cutoff, 10 * c.k1n),
              breakpoints=[b for b in bp if abs(b - w0) > 1e-9],
              tail_exponent=2.0)
    i3 = integrate_pv(_masked(f3), w0, **kw)
    i4 = integrate_pv(_masked(f4), w0, **kw)
    v3 = complex(c.nu0(w0)) * (1.0 - 1j * math.pi * np.conj(a_diag)) \
        + complex(i3.value)
    v4 = complex(np.conj(c.mu0(w0))) * (1.0 + 1j * math.pi * a_diag) \
        + complex(i4.value)
    # the natural scale: L1 norm of the direct product, infrared-truncated
    # at 1e-3 (the untruncated norm inherits the marginal infrared log)
    def scale_f(wp):
        return np.abs(np.conj(c.mu0(wp)) * c.nu1(wp, w0)) + 0j
    sc = integrate_interval(
        _masked(scale_f), 1e-3, max(qs.omega_cutoff, 10 * c.k1n),
        rel_tol=1e-6, abs_tol=qs.abs_tol,
        max_subdivisions=qs.max_subdivisions,
        breakpoints=list(bp))
    return v3, v4, float(sc.value.real)


# ----------------------------------------------------------------------
# dual evaluation paths


def he_dual_paths(ctx: ModeContext, response: MediumResponse,
                  qs: QuadSettings | None = None) -> tuple[float, float]:
    """The electromagnetic expectation (without the zero-point shift) from
    the real axis, (1/2pi) int (w-k1n)^2 Im P dw, and from the rotated
    contour. The rotation picks up an arc term -pi(k1n - kn) beyond the
    naive imaginary-axis integrand; both paths must agree."""
    qs = qs or QuadSettings()
    kn2 = ctx.k_n ** 2
    w_r, ladder = _ladder(ctx, response)

    def f(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        pos = w > 0
        if np.any(pos):
            x = pos
            wv = w[x].astype(complex)
            p = 1.0 / (kn2 - response.eps(wv) * wv * wv)
            out[x] = (w[x] - ctx.k_1n) ** 2 * p.imag
        return out

    r = integrate_semi_inf(f, rel_tol=max(qs.rel_tol, 1e-9),
                           abs_tol=qs.abs_tol,
                           max_subdivisions=2 * qs.max_subdivisions,
                           breakpoints=sorted({*ladder, w_r, ctx.k_n, 1.0}),
                           cutoff=max(qs.omega_cutoff, 30 * ctx.k_1n),
                           tail_exponent=3.0)
    real_axis = float(r.value) / (2 * math.pi)
    em, _ = mode_e_em(ctx, response, qs)
    rotated = em - 0.5 * (ctx.k_1n - ctx.k_n)
    return real_axis, rotated


def hx_rotated(ctx: ModeContext, response: MediumResponse,
               qs: QuadSettings | None = None) -> float:
    """Rotated-contour evaluation of the subtracted atom expectation.

    The analytic continuation F(w) of |nu0|^2 - |beta0|^2 carries
    first-quadrant poles from the conjugated factors: the quartic root
    e^{i pi/6} and the zeros of kn^2 - eps_bar w^2. The real-axis integral
    equals i int F(i xi) d xi + 2 pi i (sum of residues); only the benchmark
    closed forms support this path.
    """
    qs = qs or QuadSettings()
    if response.mode != "benchmark":
        raise NotImplementedError("rotated path needs the closed forms")
    a2 = response.alpha ** 2
    w1 = ctx.omega1
    g2 = response.g2
    kn2 = ctx.k_n ** 2

    def quartic(w):
        w2 = w * w
        return w2 * w2 - w2 + 1.0

    def bracket(w, eps_fn):
        p = 1.0 / (kn2 - eps_fn(w) * w * w)
        return (w1 - w) * (1.0 - p * w * w * (1.0 - eps_fn(w))) - a2 * w * p

    def f_cont(w):
        w = np.asarray(w, dtype=complex)
        bm = bracket(w, response.eps_bar)
        bp = bracket(w, response.eps)
        return (g2 / (4 * w1)) * (bm * bp - (w - w1) ** 2) / (w * quartic(w))

    poles = [response.pole_first_quadrant()]
    poles += propagator_bar_poles(response, ctx)
    res_sum = 0.0 + 0.0j
    for z0 in poles:
        dmin = min([abs(z0 - z1) for z1 in poles if z1 is not z0]
                   + [abs(z0.imag), abs(z0.real), 0.4])
        res_sum += residue_circle(f_cont, z0, 0.3 * dmin)

    r = integrate_semi_inf(lambda xi: f_cont(1j * np.asarray(xi)),
                           rel_tol=max(qs.rel_tol, 1e-9), abs_tol=qs.abs_tol,
                           max_subdivisions=qs.max_subdivisions,
                           breakpoints=(ctx.k_n, 1.0, ctx.k_1n),
                           cutoff=max(qs.omega_cutoff, 10 * ctx.k_1n),
                           tail_exponent=3.0)
    return float(ctx.omega1 * (1j * r.value + 2j * math.pi * res_sum).real)


# ----------------------------------------------------------------------
# per-mode assembly and the Casimir observables


@dataclass(frozen=True)
class HBEnergyBreakdown:
    """Per-mode energy pieces (all dressing-subtracted, i.e. only the
    k-dependent parts that survive the mode-sum regularization)."""
    n: int
    e_zp: float
    e_em: float
    e_x: float
    e_y: float
    e_xy: float
    e_ex: float
    err: float

    @property
    def total(self) -> float:
        return (self.e_zp + self.e_em + self.e_x + self.e_y + self.e_xy
                + self.e_ex)


def hb_mode_energy(ctx: ModeContext, response: MediumResponse,
                   qs: QuadSettings | None = None) -> HBEnergyBreakdown:
    qs = qs or QuadSettings()
    if response.alpha == 0.0:
        return HBEnergyBreakdown(ctx.n, 0, 0, 0, 0, 0, 0, 0.0)
    em, err_em = mode_e_em(ctx, response, qs)
    ex, err_x = mode_e_x(ctx, response, qs)
    ey, err_y = mode_e_y(ctx, response, qs)
    exy, err_xy = mode_e_xy(ctx, response, qs)
    eex, err_ex = mode_e_ex(ctx, response, qs)
    return HBEnergyBreakdown(
        n=ctx.n, e_zp=0.5 * (ctx.k_1n - ctx.k_n), e_em=em, e_x=ex, e_y=ey,
        e_xy=exy, e_ex=eex, err=err_em + err_x + err_y + err_xy + err_ex)


class HBEngine:
    """Casimir energy/force of the atom-mediated model.

    Two per-mode tables are built once: the cheap smooth part (zero-point
    shift + electromagnetic expectation, taken to large k) and the matter
    part (atom/reservoir/interaction expectations, 2-D quadratures, taken
    to moderate k and continued with the fitted 1/k^2 tail).
    """

    def __init__(self, response: MediumResponse,
                 qs: QuadSettings | None = None, *, k_lo=0.035, k_hi=60.0,
                 k_matter=26.0, per_decade=24, per_decade_matter=10):
        self.response = response
        self.qs = qs or QuadSettings()
        self.k_lo = k_lo
        self.k_hi = k_hi
        self.k_matter = k_matter
        self.per_decade = per_decade
        self.per_decade_matter = per_decade_matter
        self._tables = None
        self._lock = threading.Lock()

    def _ctx_for(self, k: float) -> ModeContext:
        r = self.response
        w1 = math.sqrt(r.omega0 ** 2 + r.mu2)
        k1 = math.sqrt(k * k + r.alpha ** 2)
        lam = r.alpha * math.sqrt(w1 / k1) if r.alpha else 0.0
        return ModeContext(n=1, k_n=k, k_1n=k1, omega1=w1, lambda_n=lam)

    def tables(self):
        with self._lock:
            if self._tables is None:
                qs = self.qs
                errs_s, errs_m = [], []

                def t_smooth(k):
                    ctx = self._ctx_for(k)
                    v, e = mode_e_em(ctx, self.response, qs)
                    errs_s.append(e)
                    return 0.5 * (ctx.k_1n - ctx.k_n) + v

                def t_matter(k):
                    ctx = self._ctx_for(k)
                    vx, ex_ = mode_e_x(ctx, self.response, qs)
                    vy, ey_ = mode_e_y(ctx, self.response, qs)
                    vxy, exy_ = mode_e_xy(ctx, self.response, qs)
                    vex, eex_ = mode_e_ex(ctx, self.response, qs)
                    errs_m.append(ex_ + ey_ + exy_ + eex_)
                    return vx + vy + vxy + vex

                smooth = ModeFunctionTable(t_smooth, self.k_lo, self.k_hi,
                                           per_decade=self.per_decade)
                smooth.node_err = float(np.max(errs_s))
                matter = ModeFunctionTable(t_matter, self.k_lo, self.k_matter,
                                           per_decade=self.per_decade_matter)
                matter.node_err = float(np.max(errs_m))
                self._tables = (smooth, matter)
            return self._tables

    def medium_energy(self, a: float) -> tuple[float, float, int]:
        if self.response.alpha == 0.0:
            return 0.0, 0.0, 0
        smooth, matter = self.tables()
        v1, e1, n1 = smooth.energy_difference(a, self.qs.mode_cutoff)
        v2, e2, n2 = matter.energy_difference(a, self.qs.mode_cutoff)
        return v1 + v2, e1 + e2, max(n1, n2)

    def energy(self, a: float) -> CasimirResult:
        e1, err, n = self.medium_energy(a)
        evac = vacuum_energy(a)
        return CasimirResult(energy=evac + e1, force=None, err_estimate=err,
                             n_modes_used=n, converged=err < np.inf,
                             e_vacuum=evac, e_medium=e1)

    def force(self, a: float) -> CasimirResult:
        r_tot = differentiate_central(lambda x: self.energy(x).energy, a,
                                      step=self.qs.fd_step * max(1.0, a / 8),
                                      rel_tol=self.qs.rel_tol)
        r_med = differentiate_central(lambda x: self.medium_energy(x)[0], a,
                                      step=self.qs.fd_step * max(1.0, a / 8),
                                      rel_tol=self.qs.rel_tol)
        e = self.energy(a)
        return CasimirResult(energy=e.energy, force=-float(r_tot.value),
                             err_estimate=r_tot.err + e.err_estimate,
                             n_modes_used=e.n_modes_used,
                             converged=e.converged and r_tot.converged,
                             e_vacuum=e.e_vacuum, e_medium=e.e_medium,
                             force_medium=-float(r_med.value))


_ENGINES: dict = {}
_ENGINES_LOCK = threading.Lock()


def _engine_for(params: PhysParams, qs: QuadSettings | None,
                a_hint: float) -> HBEngine:
    qs = qs or QuadSettings()
    response = MediumResponse.benchmark(params.alpha, params.g2)
    k_lo = min(0.035, math.pi / (a_hint * 1.05))
    key = ("hb", round(params.alpha, 12), round(params.g2, 12), qs.rel_tol,
           round(k_lo, 9))
    with _ENGINES_LOCK:
        eng = _ENGINES.get(key)
        if eng is None:
            eng = HBEngine(response, qs, k_lo=k_lo)
            _ENGINES[key] = eng
    return eng


def hb_casimir_energy(params: PhysParams, qs: QuadSettings | None = None,
                      a: float | None = None) -> CasimirResult:
    """Total Casimir energy of the atom-mediated benchmark model."""
    p1, scale = params.rescaled()
    a_eff = (a if a is not None else params.a) * (p1.a / params.a)
    eng = _engine_for(p1, qs, a_eff)
    r = eng.energy(a_eff)
    if scale == 1.0:
        return r
    return CasimirResult(energy=scale * r.energy, force=None,
                         err_estimate=scale * r.err_estimate,
                         n_modes_used=r.n_modes_used, converged=r.converged,
                         e_vacuum=scale * r.e_vacuum,
                         e_medium=scale * r.e_medium)


def hb_force(params: PhysParams, qs: QuadSettings | None = None,
             a: float | None = None) -> CasimirResult:
    p1, scale = params.rescaled()
    a_eff = (a if a is not None else params.a) * (p1.a / params.a)
    eng = _engine_for(p1, qs, a_eff)
    r = eng.force(a_eff)
    if scale == 1.0:
        return r
    return CasimirResult(energy=scale * r.energy,
                         force=scale ** 2 * r.force,
                         err_estimate=scale * r.err_estimate,
                         n_modes_used=r.n_modes_used, converged=r.converged,
                         e_vacuum=scale * r.e_vacuum,
                         e_medium=scale * r.e_medium,
                         force_medium=scale ** 2 * r.force_medium)
