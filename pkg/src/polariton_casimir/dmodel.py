"""Ground-state and Casimir energy for the direct-coupling model.

The renormalized per-mode energy after rotation to the imaginary axis is

    t(k) = (1/2 pi) int_0^inf dxi [ (k^2 - xi^2)(P - P0)
                                    - xi^2 (d/dw[w(eps-1)])_{w=i xi} P ]

with P = 1/(k^2 + xi^2 eps(i xi)) and P0 its empty-cavity value. The total
energy is E = -pi/(24 a) + E1(a), E1 the regularized mode sum of t, and the
force is F = -dE/da (negative values mean attraction).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .core import CasimirResult, ModeContext, PhysParams, QuadSettings
from .modesum import ModeFunctionTable
from .numerics import differentiate_central, integrate_semi_inf
from .spectral import (
    MediumResponse,
    propagator,
    resonance_frequency,
    resonance_width,
)

__all__ = [
    "DIntegrandPoint",
    "d_dispersion_derivative",
    "d_mode_integrand",
    "d_mode_energy",
    "d_mode_energy_real_axis",
    "DEngine",
    "d_casimir_energy",
    "d_force",
    "vacuum_energy",
]


def vacuum_energy(a: float) -> float:
    """Empty-cavity Casimir energy -pi/(24 a)."""
    return -math.pi / (24.0 * a)


@dataclass(frozen=True)
class DIntegrandPoint:
    """The two pieces of the imaginary-axis integrand at one (n, xi)."""
    n: int
    xi: float
    term_prop: float
    term_disp: float

    @property
    def total(self) -> float:
        return self.term_prop + self.term_disp


def d_dispersion_derivative(response: MediumResponse, xi):
    """(d/dw)[w (eps(w)-1)] at w = i xi (real on the imaginary axis)."""
    return response.ddisp_imag(xi)


def d_mode_integrand(ctx: ModeContext, response: MediumResponse, xi):
    """Vectorized integrand of the per-mode energy (before the 1/2pi)."""
    xi = np.asarray(xi, dtype=float)
    out_prop = np.zeros_like(xi)
    out_disp = np.zeros_like(xi)
    pos = xi > 0
    if np.any(pos):
        x = xi[pos]
        kn2 = ctx.k_n ** 2
        x2e = response.x2e_imag(x)
        p = 1.0 / (kn2 + x * x + x2e)
        p0 = 1.0 / (kn2 + x * x)
        out_prop[pos] = -(kn2 - x * x) * x2e * p * p0
        out_disp[pos] = -x * x * response.ddisp_imag(x) * p
    return out_prop + out_disp


def d_integrand_point(ctx: ModeContext, response: MediumResponse,
                      xi: float) -> DIntegrandPoint:
    kn2 = ctx.k_n ** 2
    x2e = float(response.x2e_imag(xi))
    p = 1.0 / (kn2 + xi * xi + x2e)
    p0 = 1.0 / (kn2 + xi * xi)
    return DIntegrandPoint(
        n=ctx.n, xi=xi,
        term_prop=-(kn2 - xi * xi) * x2e * p * p0,
        term_disp=-xi * xi * float(response.ddisp_imag(xi)) * p)


def _mode_energy_of_k(k: float, response: MediumResponse,
                      qs: QuadSettings):
    alpha2 = _alpha2_scale(response)
    ctx = ModeContext(n=1, k_n=k, k_1n=k)  # only k enters the integrand
    breakpoints = sorted({k, 1.0, 10.0} | (
        {k * k / alpha2} if 0 < k * k / max(alpha2, 1e-30) < 1.0 else set()))
    r = integrate_semi_inf(
        lambda xi: d_mode_integrand(ctx, response, xi),
        rel_tol=qs.rel_tol, abs_tol=qs.abs_tol,
        max_subdivisions=qs.max_subdivisions,
        breakpoints=breakpoints,
        cutoff=max(qs.omega_cutoff, 10.0 * k), tail_exponent=2.0)
    return float(r.value) / (2.0 * math.pi), r.err / (2.0 * math.pi)


def _alpha2_scale(response: MediumResponse) -> float:
    if response.mode == "benchmark":
        return response.alpha ** 2
    return response.mu2 if response.mode == "quad-d" else response.alpha ** 2


def d_mode_energy(ctx: ModeContext, response: MediumResponse,
                  qs: QuadSettings | None = None) -> tuple[float, float]:
    """Per-mode renormalized energy and its error estimate."""
    qs = qs or QuadSettings()
    return _mode_energy_of_k(ctx.k_n, response, qs)


def d_mode_energy_real_axis(ctx: ModeContext, response: MediumResponse,
                            qs: QuadSettings | None = None
                            ) -> tuple[float, float]:
    """Low-accuracy cross-check: the same per-mode energy from the real
    frequency axis, Im of [w^2 d/dw(w eps) + k^2] P minus its empty-cavity
    value (a zero-point delta contributing k/2). Resonant; not a
    production path."""
    qs = qs or QuadSettings()
    kn2 = ctx.k_n ** 2
    h = 1e-6

    def integrand(w):
        w = np.asarray(w, dtype=float)
        e = response.eps(w.astype(complex))
        # d/dw [w (eps-1)] by central difference along the real axis
        f_p = (w + h) * (response.eps((w + h).astype(complex)) - 1.0)
        f_m = (w - h) * (response.eps((w - h).astype(complex)) - 1.0)
        dd = (f_p - f_m) / (2 * h)
        pn = 1.0 / (kn2 - e * w * w)
        return ((w * w * (1.0 + dd) + kn2) * pn).imag

    # the empty-cavity counterpart contributes only its zero-point spike
    # pi k_n, removed analytically after the quadrature
    w_r = resonance_frequency(ctx, response)
    gam = max(resonance_width(ctx, response, w_r), 1e-12)
    ladder = [w_r + s * gam * 2.0 ** j
              for s in (-1, 1) for j in range(0, 22, 3)]
    bp = sorted({x for x in ladder + [ctx.k_n, w_r, 1.0] if x > 0})
    r = integrate_semi_inf(integrand, rel_tol=max(qs.rel_tol, 1e-7),
                           abs_tol=qs.abs_tol,
                           max_subdivisions=2 * qs.max_subdivisions,
                           breakpoints=bp,
                           cutoff=max(qs.omega_cutoff, 30.0 * ctx.k_n),
                           tail_exponent=3.0)
    value = (float(r.value) - math.pi * ctx.k_n) / (2.0 * math.pi)
    return value, r.err / (2.0 * math.pi) + 1e-8


class DEngine:
    """Casimir energy/force of the direct model for one medium.

    Builds the k-table of per-mode energies once; every separation then
    costs a spline pass. Thread-safe lazy construction.
    """

    def __init__(self, response: MediumResponse,
                 qs: QuadSettings | None = None, *, k_lo=0.004, k_hi=60.0,
                 per_decade=32):
        self.response = response
        self.qs = qs or QuadSettings()
        self.k_lo = k_lo
        self.k_hi = k_hi
        self.per_decade = per_decade
        self._table = None
        self._lock = threading.Lock()

    def table(self) -> ModeFunctionTable:
        with self._lock:
            if self._table is None:
                errs = []

                def t(k):
                    v, e = _mode_energy_of_k(k, self.response, self.qs)
                    errs.append(e)
                    return v

                self._table = ModeFunctionTable(
                    t, self.k_lo, self.k_hi, per_decade=self.per_decade)
                self._table.node_err = float(np.max(errs))
            return self._table

    def medium_energy(self, a: float) -> tuple[float, float, int]:
        """E1(a): the medium-induced part of the Casimir energy."""
        if _alpha2_scale(self.response) == 0.0:
            return 0.0, 0.0, 0
        return self.table().energy_difference(a, self.qs.mode_cutoff)

    def energy(self, a: float) -> CasimirResult:
        e1, err, n = self.medium_energy(a)
        evac = vacuum_energy(a)
        return CasimirResult(energy=evac + e1, force=None, err_estimate=err,
                             n_modes_used=n, converged=err < np.inf,
                             e_vacuum=evac, e_medium=e1)

    def force(self, a: float) -> CasimirResult:
        """F = -dE/da with Richardson refinement; also reports the
        medium-only part -dE1/da."""
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


def _engine_for(params: PhysParams, response: MediumResponse | None,
                qs: QuadSettings | None, a_hint: float) -> DEngine:
    qs = qs or QuadSettings()
    k_lo = min(0.004, math.pi / (a_hint * 1.05))
    if response is None:
        key = ("d", round(params.alpha, 12), round(params.g2, 12),
               qs.rel_tol, qs.abs_tol, round(k_lo, 9))
    else:
        key = ("d", id(response), qs.rel_tol, qs.abs_tol, round(k_lo, 9))
    with _ENGINES_LOCK:
        eng = _ENGINES.get(key)
        if eng is None:
            if response is None:
                response = MediumResponse.benchmark(params.alpha, params.g2)
            eng = DEngine(response, qs, k_lo=k_lo)
            _ENGINES[key] = eng
    return eng


def d_casimir_energy(params: PhysParams,
                     response: MediumResponse | None = None,
                     qs: QuadSettings | None = None,
                     a: float | None = None) -> CasimirResult:
    """Total Casimir energy -pi/(24 a) + E1(a) for the direct model.

    A reservoir scale m != 1 is handled by the exact rescaling
    E(a; m) = m E(m a; 1) applied to the benchmark family.
    """
    p1, scale = params.rescaled()
    if scale != 1.0 and response is not None:
        raise ValueError("explicit responses must use m = 1 units")
    a_eff = (a if a is not None else params.a) * (p1.a / params.a)
    eng = _engine_for(p1, response, qs, a_eff)
    r = eng.energy(a_eff)
    if scale == 1.0:
        return r
    return CasimirResult(
        energy=scale * r.energy, force=None,
        err_estimate=scale * r.err_estimate, n_modes_used=r.n_modes_used,
        converged=r.converged, e_vacuum=scale * r.e_vacuum,
        e_medium=scale * r.e_medium)


def d_force(params: PhysParams, response: MediumResponse | None = None,
            qs: QuadSettings | None = None,
            a: float | None = None) -> CasimirResult:
    """Casimir force F = -dE_total/da (attraction is negative)."""
    p1, scale = params.rescaled()
    if scale != 1.0 and response is not None:
        raise ValueError("explicit responses must use m = 1 units")
    a_eff = (a if a is not None else params.a) * (p1.a / params.a)
    eng = _engine_for(p1, response, qs, a_eff)
    r = eng.force(a_eff)
    if scale == 1.0:
        return r
    return CasimirResult(
        energy=scale * r.energy, force=scale ** 2 * r.force,
        err_estimate=scale * r.err_estimate, n_modes_used=r.n_modes_used,
        converged=r.converged, e_vacuum=scale * r.e_vacuum,
        e_medium=scale * r.e_medium,
        force_medium=scale ** 2 * r.force_medium)
