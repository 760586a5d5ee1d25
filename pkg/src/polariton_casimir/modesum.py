"""Mode-sum machinery shared by both models.

The per-mode energy depends on the geometry only through k = pi n / a, so a
single table of the smooth function t(k) serves every plate separation: the
regularized energy is

    E1(a) = sum_{n=1}^{N} t(pi n / a) - (a/pi) int_0^{k_N} t(k) dk + EM(N)

with the Euler-Maclaurin remainder EM(N) = -f(N)/2 - f'(N)/12 + f'''(N)/720
closing the tail (f(n) = t(pi n/a)). Near k = 0 the table is continued with
a fitted c ln k + d + e k model (the atom-mediated model is logarithmically
singular there); beyond the last node with a fitted 1/k power series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .numerics import integrate_interval, kahan_sum

__all__ = ["ModeFunctionTable"]


@dataclass
class _TailModel:
    c: np.ndarray  # coefficients of 1/k, 1/k^2, 1/k^3

    def val(self, k):
        return self.c[0] / k + self.c[1] / k**2 + self.c[2] / k**3

    def d1(self, k):
        return -self.c[0] / k**2 - 2 * self.c[1] / k**3 - 3 * self.c[2] / k**4

    def d3(self, k):
        return (-6 * self.c[0] / k**4 - 24 * self.c[1] / k**5
                - 60 * self.c[2] / k**6)

    def d5(self, k):
        return (-120 * self.c[0] / k**6 - 720 * self.c[1] / k**7
                - 2520 * self.c[2] / k**8)

    def integral(self, k_lo, k_hi):
        out = self.c[0] * math.log(k_hi / k_lo)
        out += self.c[1] * (1 / k_lo - 1 / k_hi)
        out += self.c[2] * (1 / k_lo**2 - 1 / k_hi**2) / 2
        return out


class ModeFunctionTable:
    """Interpolation table of a smooth decaying per-mode function t(k)."""

    def __init__(self, t_callable, k_lo, k_hi, *, per_decade=24,
                 node_errs=None):
        ks = np.geomspace(k_lo, k_hi, 1 + round(
            per_decade * math.log10(k_hi / k_lo)))
        vals = np.array([t_callable(k) for k in ks], dtype=float)
        self.k_lo = float(k_lo)
        self.k_hi = float(k_hi)
        self.ks = ks
        self.vals = vals
        self.node_err = float(node_errs) if np.isscalar(node_errs) else (
            float(np.max(node_errs)) if node_errs is not None else 0.0)
        self._spline = CubicSpline(np.log(ks), vals)
        self._fit_small_k()
        self._fit_tail()
        self._interp_err = self._validate(t_callable)

    @classmethod
    def from_values(cls, ks, vals, node_err=0.0):
        obj = cls.__new__(cls)
        ks = np.asarray(ks, dtype=float)
        obj.k_lo = float(ks[0])
        obj.k_hi = float(ks[-1])
        obj.ks = ks
        obj.vals = np.asarray(vals, dtype=float)
        obj.node_err = float(node_err)
        obj._spline = CubicSpline(np.log(ks), obj.vals)
        obj._fit_small_k()
        obj._fit_tail()
        obj._interp_err = 0.0
        return obj

    def _fit_small_k(self):
        m = min(10, len(self.ks))
        k = self.ks[:m]
        basis = np.stack([np.log(k), np.ones_like(k), k], axis=1)
        coef, res, *_ = np.linalg.lstsq(basis, self.vals[:m], rcond=None)
        self._small = coef
        self._small_resid = float(np.max(np.abs(basis @ coef - self.vals[:m])))

    def _fit_tail(self):
        sel = self.ks >= self.k_hi / 8.0
        k = self.ks[sel]
        basis = np.stack([1 / k, 1 / k**2, 1 / k**3], axis=1)
        coef, *_ = np.linalg.lstsq(basis, self.vals[sel], rcond=None)
        self.tail = _TailModel(coef)
        self._tail_resid = float(np.max(np.abs(basis @ coef
                                               - self.vals[sel])))

    def _validate(self, t_callable):
        # probe spline error at a few off-node midpoints
        idx = np.linspace(2, len(self.ks) - 3, 5).astype(int)
        km = np.sqrt(self.ks[idx] * self.ks[idx + 1])
        probe = np.array([t_callable(k) for k in km])
        return float(np.max(np.abs(probe - self._spline(np.log(km)))))

    # -- evaluation ------------------------------------------------------
    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        out = np.empty_like(k)
        low = k < self.k_lo
        high = k > self.k_hi
        mid = ~(low | high)
        if np.any(mid):
            out[mid] = self._spline(np.log(k[mid]))
        if np.any(low):
            c = self._small
            out[low] = c[0] * np.log(k[low]) + c[1] + c[2] * k[low]
        if np.any(high):
            out[high] = self.tail.val(k[high])
        return out

    def integral_zero_to(self, k_top: float) -> float:
        """int_0^{k_top} t(k) dk, with the fitted model below k_lo."""
        c = self._small
        head = self.k_lo * (c[0] * (math.log(self.k_lo) - 1.0) + c[1]
                            + c[2] * self.k_lo / 2.0)
        if k_top <= self.k_lo:
            raise ValueError("integration cap below the table range")
        body = integrate_interval(
            lambda k: self._spline(np.log(k)), self.k_lo,
            min(k_top, self.k_hi), rel_tol=1e-11, abs_tol=1e-14,
            max_subdivisions=4000,
            breakpoints=list(np.geomspace(self.k_lo * 4, self.k_hi / 4, 9)))
        out = head + float(body.value)
        if k_top > self.k_hi:
            out += self.tail.integral(self.k_hi, k_top)
        return out

    # -- the regularized difference ---------------------------------------
    def energy_difference(self, a: float, mode_cutoff: int = 200000):
        """sum_{n>=1} t(pi n/a) - int_0^inf t(pi n/a) dn and its error."""
        h = math.pi / a
        n_top = int(self.k_hi / h)
        if n_top < 8:
            raise ValueError(
                f"table range too short for a = {a}: only {n_top} modes")
        n_top = min(n_top, mode_cutoff)
        k_top = n_top * h
        if h < self.k_lo:
            raise ValueError("table does not reach k = pi/a; rebuild with a "
                             "smaller k_lo")
        ns = np.arange(1, n_top + 1)
        tvals = self(ns * h)
        s = kahan_sum(tvals)
        integral = self.integral_zero_to(k_top) / h
        em = (-0.5 * self.tail.val(k_top)
              - h * self.tail.d1(k_top) / 12.0
              + h**3 * self.tail.d3(k_top) / 720.0)
        em_err = abs(h**5 * self.tail.d5(k_top)) / 30240.0
        value = s - integral + em
        err = (em_err + self._tail_resid
               + (self._interp_err + self.node_err) * (1.0 + n_top / 10.0)
               + self._small_resid * self.k_lo / h)
        return value, err, n_top
