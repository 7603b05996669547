"""Potential h, energy H and the time map T(E) of the stationary oscillator.

Stationary patterns solve (1/gamma) W'' + h(W) = 0 with

    h(w) = -d_g w - c_h / w + kappa0,     H(w) = -d_g w^2/2 - c_h log w + kappa0 w,

so H' = h and z^2/2 + H(w) is conserved along w' = z, z' = -h(w).
Energies are handled internally as offsets e = E - H_min to keep the
bottom of the well well-conditioned.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import AccuracyError, BelowCriticalError, RangeError, RegimeError
from .model import DOUBLE_ROOT_RTOL, ModelParams, constant_states, theta

_QUAD_EPSREL = 1e-13
_QUAD_EPSABS = 1e-15
_NEAR_MIN = 1e-10


def _phi(r):
    """r - log(1 + r), accurate for small r."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = np.abs(r) < 0.05
    rs = r[small]
    # alternating series r^2/2 - r^3/3 + ... up to r^13
    acc = np.zeros_like(rs)
    for n in range(13, 1, -1):
        acc = acc * rs + (1.0 if n % 2 == 0 else -1.0) / n
    out[small] = acc * rs * rs
    rb = r[~small]
    out[~small] = rb - np.log1p(rb)
    return out


@dataclass(frozen=True)
class PotentialSpec:
    """Analytic objects derived from the model for the pattern problem."""

    d_g: float
    kappa0: float
    c_h: float
    theta: float
    w_minus: float
    w_plus: float
    H_min: float
    H_max: float
    dh_min: float  # h'(w_minus) > 0
    gamma0: float

    # evaluators ---------------------------------------------------------
    def h(self, w):
        return -self.d_g * w - self.c_h / w + self.kappa0

    def h_stable(self, w):
        """h(w) written around its root w_minus (no cancellation near it)."""
        w = np.asarray(w, dtype=float)
        dl = w - self.w_minus
        return dl * (self.c_h / (self.w_minus * w) - self.d_g)

    def dh(self, w):
        return -self.d_g + self.c_h / w**2

    def d2h(self, w):
        return -2 * self.c_h / w**3

    def H(self, w):
        return -0.5 * self.d_g * w**2 - self.c_h * np.log(w) + self.kappa0 * w

    def dH(self, w):
        """H(w) - H_min, accurate near the minimum."""
        w = np.asarray(w, dtype=float)
        dl = w - self.w_minus
        return -0.5 * self.d_g * dl * dl + self.c_h * _phi(dl / self.w_minus)

    def gap(self, wt, y):
        """H(wt) - H(y) for y between wt and w_minus, free of cancellation."""
        y = np.asarray(y, dtype=float)
        D = wt - y
        return D * self.h_stable(y) - 0.5 * self.d_g * D * D + self.c_h * _phi(D / y)

    def offset(self, E: float) -> float:
        return E - self.H_min


@dataclass(frozen=True)
class EnergyLevel:
    E: float
    w1E: float
    w2E: float


class Quadrature(NamedTuple):
    value: float
    error: float


def potential_spec(p: ModelParams) -> PotentialSpec:
    """Build the potential for the regime a > d_c, kappa0^2 > Theta."""
    if p.a <= p.d_c:
        raise RegimeError("a <= d_c: the trivial state is the only nonnegative stationary solution")
    th = theta(p)
    if p.kappa0**2 - th <= DOUBLE_ROOT_RTOL * th:
        raise RegimeError(
            f"kappa0^2 = {p.kappa0**2:.6g} <= Theta = {th:.6g}: "
            "the stationary problem has no positive solutions"
        )
    st = {s.kind: s for s in constant_states(p)}
    wm, wp = st["minus"].w, st["plus"].w
    c_h = p.c_h
    # h'' = -2 c_h / w^3 < 0 on (0, inf) needs c_h > 0; monotonicity of T relies on it
    assert c_h > 0, "h must be concave"
    H = lambda w: -0.5 * p.d_g * w**2 - c_h * math.log(w) + p.kappa0 * w
    dh_min = -p.d_g + c_h / wm**2
    spec = PotentialSpec(
        d_g=p.d_g, kappa0=p.kappa0, c_h=c_h, theta=th, w_minus=wm, w_plus=wp,
        H_min=H(wm), H_max=H(wp), dh_min=dh_min, gamma0=math.pi**2 / dh_min,
    )
    return spec


def w_lower(spec: PotentialSpec) -> float:
    """Point in (0, w_minus) where H equals H_max."""
    target = spec.H_max - spec.H_min
    lo = 1e-12 * spec.w_minus
    while spec.dH(lo) <= target:
        lo *= 1e-6
    return brentq(lambda w: float(spec.dH(w)) - target, lo, spec.w_minus, xtol=1e-300, rtol=8.9e-16)


def turning_points(spec: PotentialSpec, E: float) -> EnergyLevel:
    """Turning points w1E < w_minus < w2E < w_plus of the orbit at energy E."""
    e = spec.offset(E)
    emax = spec.H_max - spec.H_min
    if not 0 < e < emax:
        raise RangeError(f"energy {E!r} outside ({spec.H_min!r}, {spec.H_max!r})")
    g = lambda w: float(spec.dH(w)) - e
    w_lo = w_lower(spec)
    w1 = brentq(g, w_lo, spec.w_minus, xtol=1e-300, rtol=8.9e-16)
    w2 = brentq(g, spec.w_minus, spec.w_plus, xtol=1e-300, rtol=8.9e-16)
    return EnergyLevel(E, w1, w2)


def _half_integrals(spec, lvl, f=None):
    """Integrate f(y) dy / sqrt(2(E - H(y))) over both halves.

    Substitutes y = w1 + s^2 on the left and y = w2 - s^2 on the right.
    """
    wm = spec.w_minus
    parts = []
    for wt, sgn in ((lvl.w1E, 1.0), (lvl.w2E, -1.0)):
        smax = math.sqrt(abs(wm - wt))

        def integrand(s, wt=wt, sgn=sgn):
            if s == 0.0:
                g2 = abs(float(spec.h(wt)))  # gap ~ |h(wt)| s^2
                base = 2.0 / math.sqrt(2.0 * g2)
                y = wt
            else:
                y = wt + sgn * s * s
                gp = float(spec.gap(wt, y))
                if gp <= 0:
                    return 0.0
                base = 2.0 * s / math.sqrt(2.0 * gp)
            return base if f is None else base * f(y)

        # Round-off warnings are expected near the well bottom; callers check err.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = quad(integrand, 0.0, smax, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=400)
        parts.append((val, err))
    return parts


def time_map(spec: PotentialSpec, E: float) -> Quadrature:
    """Half-period T(E) and a quadrature error estimate."""
    e = spec.offset(E)
    if 0 < e < _NEAR_MIN * max(abs(spec.H_min), 1e-300):
        T0 = math.pi / math.sqrt(spec.dh_min)
        # first-order error of the limit value
        e_ref = _NEAR_MIN * max(abs(spec.H_min), 1e-300)
        slope = time_map_derivative(spec, spec.H_min + 1e3 * e_ref)
        return Quadrature(T0, abs(slope) * e)
    lvl = turning_points(spec, E)
    (a, ea), (b, eb) = _half_integrals(spec, lvl)
    T, err = a + b, ea + eb
    if err > 1e-9 * T:
        raise AccuracyError(f"time map quadrature error {err:.3g} at E = {E!r}", achieved=err)
    return Quadrature(T, err)


def time_map_derivative(spec: PotentialSpec, E: float) -> float:
    """dT/dE from the integral representation

        (E - H_min) T'(E) = int_{w1}^{w2} [1/2 - dH h'/h^2] dy / sqrt(2 (E - H(y))).
    """
    e = spec.offset(E)
    lvl = turning_points(spec, E)

    def bracket(y):
        hy = float(spec.h_stable(y))
        if hy == 0.0:
            return 0.0
        return 0.5 - float(spec.dH(y)) * float(spec.dh(y)) / (hy * hy)

    (a, ea), (b, eb) = _half_integrals(spec, lvl, bracket)
    val = (a + b) / e
    if ea + eb > 1e-7 * abs(a + b) and ea + eb > 1e-14:
        raise AccuracyError(f"derivative quadrature error {ea + eb:.3g} at E = {E!r}", achieved=ea + eb)
    return val


def invert_time_map(spec: PotentialSpec, T_target: float, rtol=1e-12) -> EnergyLevel:
    """Energy level whose half-period equals ``T_target`` (bisection)."""
    T_min = math.pi / math.sqrt(spec.dh_min)
    if not T_target > T_min:
        raise BelowCriticalError(f"T = {T_target!r} <= sqrt(gamma0) = {T_min!r}: no pattern")
    emax = spec.H_max - spec.H_min
    lo, hi = 0.0, None
    for j in range(1, 60):
        cand = emax * (1 - 2.0 ** (-j))
        if time_map(spec, spec.H_min + cand).value > T_target:
            hi = cand
            break
        lo = cand
    if hi is None:
        raise AccuracyError(f"could not bracket T = {T_target!r} below H_max")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        T = time_map(spec, spec.H_min + mid).value
        if abs(T - T_target) <= rtol * T_target:
            lo = hi = mid
            break
        if T < T_target:
            lo = mid
        else:
            hi = mid
    e = 0.5 * (lo + hi)
    return turning_points(spec, spec.H_min + e)
