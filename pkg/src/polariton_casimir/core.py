"""Domain types and unit conventions.

Natural units hbar = c = 1 and reservoir scale m = 1 throughout; every
energy sweep works with the dimensionless combinations (m*a, alpha/m) and
results for m != 1 are recovered by exact rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "BENCHMARK_G2",
    "PhysParams",
    "CouplingSpec",
    "ModeContext",
    "CasimirResult",
    "QuadSettings",
    "make_mode_context",
    "benchmark_coupling",
    "lorentzian_coupling",
    "exponential_coupling",
    "tabulated_coupling",
    "zero_coupling",
]

# normalization of the benchmark coupling family v^2 = g2/(w^2 + 1); this
# value makes the closed-form dielectric function come out exactly
BENCHMARK_G2 = 2.0 / math.pi


@dataclass(frozen=True)
class PhysParams:
    """Physical inputs: geometry and coupling strengths.

    a       plate separation (units of 1/m)
    alpha   field-atom coupling (a frequency, in units of m)
    omega0  bare atom frequency (0 for the benchmark)
    m       reservoir frequency scale; kept for rescaling, engines run at 1
    g2      normalization of the benchmark coupling family
    """
    a: float = 1.0
    alpha: float = 1.0
    omega0: float = 0.0
    m: float = 1.0
    g2: float = BENCHMARK_G2

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("plate separation a must be positive")
        if self.alpha < 0:
            raise ValueError("coupling alpha must be non-negative")
        if self.omega0 < 0:
            raise ValueError("omega0 must be non-negative")
        if self.m <= 0:
            raise ValueError("reservoir scale m must be positive")
        if self.g2 < 0:
            raise ValueError("g2 must be non-negative")

    def rescaled(self) -> tuple["PhysParams", float]:
        """Equivalent m = 1 parameters and the energy scale factor.

        E(a; m, alpha) = m * E(m*a; 1, alpha/m).
        """
        if self.m == 1.0:
            return self, 1.0
        p = replace(self, a=self.m * self.a, alpha=self.alpha / self.m,
                    omega0=self.omega0 / self.m, m=1.0)
        return p, self.m


@dataclass(frozen=True)
class CouplingSpec:
    """A spectral coupling density v^2(w) >= 0 on [0, inf).

    v2 is vectorized over numpy arrays. tail_exponent p declares the decay
    v^2 ~ w^-p at infinity (None for faster-than-algebraic decay);
    zero_exponent q declares the leading power v^2 ~ w^q at w -> 0. Both are
    used for deterministic convergence decisions instead of numeric probing.
    """
    kind: str
    v2: Callable[[np.ndarray], np.ndarray]
    tail_exponent: Optional[float]
    zero_exponent: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __call__(self, w):
        return self.v2(np.asarray(w, dtype=float))


def benchmark_coupling(g2: float = BENCHMARK_G2) -> CouplingSpec:
    """The Lorentzian benchmark family v^2(w) = g2 / (w^2 + 1)."""
    return CouplingSpec(
        kind="benchmark-lorentzian",
        v2=lambda w: g2 / (w * w + 1.0),
        tail_exponent=2.0,
        zero_exponent=0.0,
        metadata={"g2": g2},
    )


def lorentzian_coupling(amplitude: float, scale: float = 1.0,
                        power: int = 1) -> CouplingSpec:
    """v^2(w) = amplitude / (w^2 + scale^2)^power."""
    if amplitude < 0 or scale <= 0 or power < 1:
        raise ValueError("need amplitude >= 0, scale > 0, power >= 1")
    return CouplingSpec(
        kind="lorentzian",
        v2=lambda w: amplitude / (w * w + scale * scale) ** power,
        tail_exponent=2.0 * power,
        zero_exponent=0.0,
        metadata={"amplitude": amplitude, "scale": scale, "power": power},
    )


def exponential_coupling(amplitude: float = 1.0,
                         rate: float = 1.0) -> CouplingSpec:
    """v^2(w) = amplitude * exp(-rate w); used as a quadrature smoke test."""
    return CouplingSpec(
        kind="exponential",
        v2=lambda w: amplitude * np.exp(-rate * w),
        tail_exponent=None,
        zero_exponent=0.0,
        metadata={"amplitude": amplitude, "rate": rate},
    )


def zero_coupling() -> CouplingSpec:
    return CouplingSpec(kind="zero", v2=lambda w: np.zeros_like(w),
                        tail_exponent=None, zero_exponent=0.0)


def tabulated_coupling(omega, v2, tail_exponent: float,
                       zero_exponent: float = 0.0) -> CouplingSpec:
    """Monotone (PCHIP) interpolation of sampled (omega, v^2) data with a
    power-law continuation v^2 ~ w^-tail_exponent beyond the last node."""
    from scipy.interpolate import PchipInterpolator

    omega = np.asarray(omega, dtype=float)
    vals = np.asarray(v2, dtype=float)
    if omega.ndim != 1 or omega.size < 4 or np.any(np.diff(omega) <= 0):
        raise ValueError("omega grid must be increasing with >= 4 nodes")
    if np.any(vals < 0):
        raise ValueError("tabulated v^2 must be non-negative")
    interp = PchipInterpolator(omega, vals, extrapolate=False)
    w_hi = omega[-1]
    c_hi = vals[-1] * w_hi ** tail_exponent
    w_lo = omega[0]

    def ev(w):
        w = np.asarray(w, dtype=float)
        out = np.empty_like(w)
        low = w < w_lo
        high = w > w_hi
        mid = ~(low | high)
        out[mid] = interp(w[mid])
        # leading-power continuation on both ends
        out[low] = vals[0] * np.where(w_lo > 0, (w[low] / w_lo), 1.0) ** zero_exponent
        out[high] = c_hi * w[high] ** (-tail_exponent)
        return np.maximum(out, 0.0)

    return CouplingSpec(kind="tabulated", v2=ev, tail_exponent=tail_exponent,
                        zero_exponent=zero_exponent,
                        metadata={"n_nodes": int(omega.size)})


@dataclass(frozen=True)
class ModeContext:
    """Per-mode data for cavity mode n: bare k_n, dressed k_1n and, for the
    atom-mediated model, the dressed atom frequency omega1 and the mode
    coupling normalization lambda_n."""
    n: int
    k_n: float
    k_1n: float
    omega1: float = 1.0
    lambda_n: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("mode index n must be >= 1")
        if self.k_1n < self.k_n:
            raise ValueError("dressed k_1n cannot lie below k_n")


def make_mode_context(params: PhysParams, model: str, n: int,
                      mu2: Optional[float] = None) -> ModeContext:
    """Build the ModeContext for mode n.

    model "d": k_1n^2 = k_n^2 + mu2 with mu2 the coupling mass shift
    (defaults to the benchmark family value pi*g2/2).
    model "hb": k_1n^2 = k_n^2 + alpha^2 (mu2 only feeds omega1 through
    omega1^2 = omega0^2 + mu2).
    """
    if n < 1:
        raise ValueError("mode index n must be >= 1")
    if model not in ("d", "hb"):
        raise ValueError(f"unknown model {model!r}")
    k_n = math.pi * n / params.a
    if mu2 is None:
        mu2 = math.pi * params.g2 / 2.0
    omega1 = math.sqrt(params.omega0 ** 2 + mu2)
    if model == "d":
        return ModeContext(n=n, k_n=k_n, k_1n=math.sqrt(k_n ** 2 + mu2),
                           omega1=omega1)
    k_1n = math.sqrt(k_n ** 2 + params.alpha ** 2)
    lam = params.alpha * math.sqrt(omega1 / k_1n) if params.alpha > 0 else 0.0
    return ModeContext(n=n, k_n=k_n, k_1n=k_1n, omega1=omega1, lambda_n=lam)


@dataclass(frozen=True)
class CasimirResult:
    """Energy or force value with its numerical diagnostics.

    e_vacuum and e_medium split the total energy into the empty-cavity part
    -pi/(24 a) and the medium-induced remainder.
    """
    energy: float
    force: Optional[float]
    err_estimate: float
    n_modes_used: int
    converged: bool
    e_vacuum: float = 0.0
    e_medium: float = 0.0
    force_medium: Optional[float] = None

    def __post_init__(self):
        if self.err_estimate < 0:
            raise ValueError("error estimate must be non-negative")


@dataclass(frozen=True)
class QuadSettings:
    """Tolerances and cutoffs governing every integral and mode sum."""
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    omega_cutoff: float = 40.0
    max_subdivisions: int = 4000
    mode_cutoff: int = 20000
    fd_step: float = 0.25

    def __post_init__(self):
        if min(self.rel_tol, self.abs_tol, self.omega_cutoff,
               self.fd_step) <= 0:
            raise ValueError("tolerances, cutoff and fd step must be positive")
        if self.rel_tol >= 1:
            raise ValueError("rel_tol must be below 1")
        if self.max_subdivisions <= 0 or self.mode_cutoff <= 0:
            raise ValueError("subdivision and mode limits must be positive")

    def with_(self, **kw) -> "QuadSettings":
        return replace(self, **kw)
