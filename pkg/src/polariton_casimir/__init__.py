"""Casimir energy of a 1-D cavity filled with an absorbing dielectric.

Two microscopic couplings of the field to the absorbing medium are
implemented: the direct field-reservoir coupling and the two-stage
atom-mediated (Huttner-Barnett) coupling. Both share the same complex
dielectric function for the benchmark medium, which makes the package a
numerical test bench for whether the Casimir effect is fixed by the
dielectric function alone.
"""

from .core import (
    BENCHMARK_G2,
    CasimirResult,
    CouplingSpec,
    ModeContext,
    PhysParams,
    QuadSettings,
    benchmark_coupling,
    exponential_coupling,
    lorentzian_coupling,
    make_mode_context,
    tabulated_coupling,
    zero_coupling,
)
from .dmodel import DEngine, d_casimir_energy, d_force, vacuum_energy
from .hbmodel import (
    HBEngine,
    HBEnergyBreakdown,
    hb_casimir_energy,
    hb_force,
    hb_mode_energy,
    sum_rules,
)
from .numerics import (
    QuadResult,
    differentiate_central,
    integrate_2d,
    integrate_pv,
    integrate_semi_inf,
    sum_minus_integral,
)
from .reduction import (
    GeneralCoupling,
    reduce_general,
    reduce_y_and_ydot,
    reduce_ydot_family,
)
from .spectral import (
    MediumResponse,
    check_consistency,
    epsilon_benchmark,
    mu_squared,
    omega1,
)

__version__ = "0.1.0"

__all__ = [
    "BENCHMARK_G2",
    "CasimirResult",
    "CouplingSpec",
    "DEngine",
    "GeneralCoupling",
    "HBEnergyBreakdown",
    "HBEngine",
    "MediumResponse",
    "ModeContext",
    "PhysParams",
    "QuadResult",
    "QuadSettings",
    "benchmark_coupling",
    "check_consistency",
    "d_casimir_energy",
    "d_force",
    "differentiate_central",
    "epsilon_benchmark",
    "exponential_coupling",
    "hb_casimir_energy",
    "hb_force",
    "hb_mode_energy",
    "integrate_2d",
    "integrate_pv",
    "integrate_semi_inf",
    "lorentzian_coupling",
    "make_mode_context",
    "mu_squared",
    "omega1",
    "reduce_general",
    "reduce_y_and_ydot",
    "reduce_ydot_family",
    "sum_minus_integral",
    "sum_rules",
    "tabulated_coupling",
    "vacuum_energy",
    "zero_coupling",
]
