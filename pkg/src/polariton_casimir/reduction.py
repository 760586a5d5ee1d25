"""Reduction of general reservoir couplings to a single effective density.

A family of velocity-type couplings (to the reservoir momenta) collapses by
a unitary rotation of the reservoir into one oscillator with
v_eff^2 = sum v_l^2. A position-type coupling (to the reservoir coordinate)
turns into a velocity-type one by a canonical rotation at the price of a
quadratic counterterm: v_eff^2 = v1^2 + v2^2/w^2 and a mass shift
Delta mu^2 = int dw v2^2/w^2 which restores the no-extra-pole condition.
Only |v|^2 ever enters downstream formulas, so reductions act on densities
directly; component phases are unobservable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import CouplingSpec, QuadSettings
from .numerics import integrate_semi_inf

__all__ = [
    "GeneralCoupling",
    "reduce_ydot_family",
    "reduce_y_and_ydot",
    "reduce_general",
]


@dataclass(frozen=True)
class GeneralCoupling:
    """N reservoir oscillators with velocity (ydot) and position (y) type
    coupling densities. Position-type densities must vanish fast enough at
    w -> 0 that int dw v2^2/w^2 converges (declared zero exponent > 1)."""
    v1_list: tuple = ()
    v2_list: tuple = ()

    @property
    def n_oscillators(self) -> int:
        return max(len(self.v1_list), len(self.v2_list))


def _sum_spec(parts: Sequence[CouplingSpec], kind: str) -> CouplingSpec:
    tails = [p.tail_exponent for p in parts]
    tail = None if any(t is None for t in tails) and all(
        t is None for t in tails) else min(
            (t for t in tails if t is not None), default=None)
    zero = min((p.zero_exponent for p in parts), default=0.0)
    fns = [p.v2 for p in parts]

    def v2(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        for fn in fns:
            out = out + fn(w)
        return out

    return CouplingSpec(kind=kind, v2=v2, tail_exponent=tail,
                        zero_exponent=zero,
                        metadata={"reduced_from": [p.kind for p in parts]})


def reduce_ydot_family(v_list: Sequence[CouplingSpec]) -> CouplingSpec:
    """Collapse velocity-type couplings: v_eff^2 = sum_l v_l^2.

    An empty family is the valid zero coupling.
    """
    if not v_list:
        return CouplingSpec(kind="zero", v2=lambda w: np.zeros_like(w),
                            tail_exponent=None, zero_exponent=0.0,
                            metadata={"reduced_from": []})
    if len(v_list) == 1:
        c = v_list[0]
        meta = dict(c.metadata)
        meta["reduced_from"] = [c.kind]
        return CouplingSpec(kind=c.kind, v2=c.v2,
                            tail_exponent=c.tail_exponent,
                            zero_exponent=c.zero_exponent, metadata=meta)
    return _sum_spec(list(v_list), kind="ydot-family")


def reduce_y_and_ydot(v1: CouplingSpec, v2: CouplingSpec,
                      qs: QuadSettings | None = None
                      ) -> tuple[CouplingSpec, float]:
    """Fold one velocity-type and one position-type coupling.

    Returns (v_eff, counterterm) with v_eff^2 = v1^2 + v2^2/w^2 and the
    counterterm mass shift Delta mu^2 = int_0^inf dw v2^2(w)/w^2; the total
    mass shift then equals int v_eff^2 as the pole-free quantization needs.
    Divergence of the counterterm (v2 nonvanishing at w -> 0) is rejected
    from the declared leading exponent, not probed numerically.
    """
    qs = qs or QuadSettings()
    if v2.zero_exponent <= 1.0 and not _is_zero(v2):
        raise ValueError(
            "position-type coupling must vanish at w -> 0 faster than w "
            f"(declared exponent {v2.zero_exponent}); the counterterm "
            "integral dw v2^2/w^2 diverges")

    folded_tail = None if v2.tail_exponent is None else v2.tail_exponent + 2.0
    folded = CouplingSpec(
        kind="y-folded",
        v2=lambda w: v2.v2(w) / np.maximum(w, 1e-300) ** 2,
        tail_exponent=folded_tail,
        zero_exponent=v2.zero_exponent - 2.0,
        metadata={"folded_from": v2.kind})

    if _is_zero(v2):
        counterterm = 0.0
    else:
        r = integrate_semi_inf(folded.v2, rel_tol=qs.rel_tol * 0.01,
                               abs_tol=qs.abs_tol,
                               max_subdivisions=qs.max_subdivisions,
                               cutoff=qs.omega_cutoff,
                               tail_exponent=folded_tail)
        if not r.converged:
            raise ValueError("counterterm integral failed to converge")
        counterterm = float(r.value)

    if _is_zero(v2):
        eff = reduce_ydot_family([v1])
        eff.metadata["counterterm_mu2"] = 0.0
        return eff, 0.0
    eff = _sum_spec([v1, folded], kind="y-ydot-folded")
    eff.metadata["counterterm_mu2"] = counterterm
    return eff, counterterm


def reduce_general(g: GeneralCoupling,
                   qs: QuadSettings | None = None
                   ) -> tuple[CouplingSpec, float]:
    """Collapse N oscillators with mixed couplings to one effective density.

    Each oscillator's pair folds first (accumulating counterterms), then the
    velocity-type family collapses unitarily; the final mass shift is
    int v_eff^2 as required for a pole-free propagator.
    """
    qs = qs or QuadSettings()
    n = g.n_oscillators
    v1s = list(g.v1_list) + [None] * (n - len(g.v1_list))
    v2s = list(g.v2_list) + [None] * (n - len(g.v2_list))
    parts = []
    counterterm = 0.0
    for j in range(n):
        v1 = v1s[j] if v1s[j] is not None else _zero()
        v2 = v2s[j] if v2s[j] is not None else _zero()
        eff_j, dm = reduce_y_and_ydot(v1, v2, qs)
        counterterm += dm
        parts.append(eff_j)
    eff = reduce_ydot_family(parts)
    eff.metadata["counterterm_mu2"] = counterterm
    eff.metadata["n_oscillators"] = n
    return eff, counterterm


def _zero() -> CouplingSpec:
    return CouplingSpec(kind="zero", v2=lambda w: np.zeros_like(w),
                        tail_exponent=None, zero_exponent=np.inf)


def _is_zero(c: CouplingSpec) -> bool:
    if c.kind == "zero":
        return True
    probe = c.v2(np.geomspace(1e-3, 1e3, 13))
    return bool(np.all(probe == 0.0))
