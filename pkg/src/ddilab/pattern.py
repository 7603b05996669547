"""Stationary patterns: constants, k-mode continuous patterns and glued weak patterns.

All constructions work in the rescaled variable s = sqrt(gamma) x, where the
stationary w-equation becomes the Hamiltonian system w' = z, z' = -h(w).
A pattern is stored as a list of pieces in s, each piece being a function of
local time returning (w, dw/ds); evaluation at arbitrary x is exact up to the
ODE tolerance, so no interpolation enters downstream residuals.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from .errors import AccuracyError, BelowCriticalError, GluingInfeasibleError, PlanError, DomainError
from .model import DOUBLE_ROOT_RTOL, ModelParams, get_state, reaction_rhs, theta
from .potential import (
    EnergyLevel,
    PotentialSpec,
    invert_time_map,
    potential_spec,
    time_map,
    turning_points,
)

_RTOL = 1e-13
_ATOL = 1e-15


@dataclass
class _Piece:
    s0: float
    length: float
    kind: str  # inner | outer
    fn: Callable  # local time -> (w, dw/ds)
    reverse: bool = False


class _Evaluator:
    """Evaluate W and dW/dx from pieces laid end to end in s."""

    def __init__(self, pieces, L, flip=False):
        self.pieces = pieces
        self.L = L
        self.flip = flip
        self.starts = np.array([pc.s0 for pc in pieces])

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xx = 1.0 - x if self.flip else x
        s = np.clip(xx, 0.0, 1.0) * self.L
        idx = np.clip(np.searchsorted(self.starts, s, side="right") - 1, 0, len(self.pieces) - 1)
        W = np.empty_like(s)
        dW = np.empty_like(s)
        for j in np.unique(idx):
            pc = self.pieces[j]
            sel = idx == j
            loc = np.clip(s[sel] - pc.s0, 0.0, pc.length)
            if pc.reverse:
                w, z = pc.fn(pc.length - loc)
                z = -z
            else:
                w, z = pc.fn(loc)
            W[sel] = w
            dW[sel] = z
        dW *= self.L
        if self.flip:
            dW = -dW
        return W, dW

    def kinds(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xx = 1.0 - x if self.flip else x
        s = np.clip(xx, 0.0, 1.0) * self.L
        idx = np.clip(np.searchsorted(self.starts, s, side="right") - 1, 0, len(self.pieces) - 1)
        return np.array([self.pieces[j].kind for j in idx])


def lift_uv(p: ModelParams, W):
    """U and V determined by W off the null set."""
    W = np.asarray(W, dtype=float)
    V = p.d_c**2 * (p.d_b + p.d) / ((p.a - p.d_c) ** 2 * W)
    U = (p.a - p.d_c) / p.d_c * V
    return U, V


@dataclass
class Pattern:
    """A stationary solution sampled on a uniform grid, with an exact evaluator.

    ``k`` is the mode count (0 for constants, None for glued weak patterns).
    """

    grid: np.ndarray
    W: np.ndarray
    U: np.ndarray
    V: np.ndarray
    k: Optional[int]
    orientation: str
    gamma: float
    energy: Optional[EnergyLevel]
    continuous: bool
    null_set: list
    meta: dict = field(default_factory=dict)
    _eval: Optional[_Evaluator] = field(default=None, repr=False)
    _params: Optional[ModelParams] = field(default=None, repr=False)

    def evaluate(self, x):
        """W at arbitrary points of [0, 1]."""
        if self._eval is None:
            return np.full(np.shape(x), self.W[0], dtype=float)
        return self._eval(x)[0].reshape(np.shape(x))

    def derivative(self, x):
        """dW/dx at arbitrary points."""
        if self._eval is None:
            return np.zeros(np.shape(x))
        return self._eval(x)[1].reshape(np.shape(x))

    def in_null_set(self, x):
        x = np.asarray(x, dtype=float)
        m = np.zeros(x.shape, dtype=bool)
        for a, b in self.null_set:
            m |= (x >= a) & (x <= b)
        return m

    def fields(self, x, p: ModelParams | None = None):
        """(U, V, W) at arbitrary points, zero U and V on the null set."""
        p = p or self._params
        W = self.evaluate(x)
        U, V = lift_uv(p, W)
        ns = self.in_null_set(x)
        U = np.where(ns, 0.0, U)
        V = np.where(ns, 0.0, V)
        return U, V, W

    def to_csv(self, path):
        from .io import write_csv

        flag = self.in_null_set(self.grid).astype(int)
        write_csv(path, ["x", "W", "U", "V", "in_null_set"],
                  zip(self.grid, self.W, self.U, self.V, flag))

    def metadata(self) -> dict:
        out = {
            "k": self.k,
            "orientation": self.orientation,
            "gamma": self.gamma,
            "continuous": self.continuous,
            "null_set": [list(iv) for iv in self.null_set],
            "n_grid": int(self.grid.size),
        }
        if self.energy is not None:
            out.update(E=self.energy.E, w1E=self.energy.w1E, w2E=self.energy.w2E)
        out.update(self.meta)
        return out

    def write_metadata(self, path, extra=None):
        md = self.metadata()
        if extra:
            md.update(extra)
        with open(path, "w") as fh:
            json.dump(md, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _finish(p, pieces, L, k, orientation, energy, n_grid, null_set, meta):
    ev = _Evaluator(pieces, L, flip=(orientation == "decreasing"))
    grid = np.linspace(0.0, 1.0, n_grid)
    W = ev(grid)[0]
    pat = Pattern(grid, W, *([None] * 2), k=k, orientation=orientation, gamma=L * L,
                  energy=energy, continuous=not null_set, null_set=null_set, meta=meta,
                  _eval=ev, _params=p)
    pat.U, pat.V, _ = pat.fields(grid, p)
    return pat


def constant_pattern(p: ModelParams, kind="minus", n_grid=1024) -> Pattern:
    """The constant state of the given kind as a pattern (k = 0)."""
    st = get_state(p, kind)
    grid = np.linspace(0.0, 1.0, n_grid)
    W = np.full(n_grid, st.w)
    return Pattern(grid, W, np.full(n_grid, st.u), np.full(n_grid, st.v), 0, "increasing",
                   p.gamma, None, True, [], {"kind": kind}, None, p)


# --- continuous patterns -----------------------------------------------------


def _hamiltonian_rhs(spec):
    def rhs(t, y):
        return [y[1], -float(spec.h_stable(y[0]))]

    return rhs


def half_orbit(spec: PotentialSpec, lvl: EnergyLevel, t_max: float):
    """Integrate from (w1E, 0) to the next z = 0 crossing at w2E.

    Returns the dense solution, the crossing time and the worst first-integral drift.
    """
    ev = lambda t, y: y[1]
    ev.terminal = True
    ev.direction = -1
    sol = solve_ivp(_hamiltonian_rhs(spec), (0.0, t_max), [lvl.w1E, 0.0], method="DOP853",
                    rtol=_RTOL, atol=_ATOL, dense_output=True, events=ev)
    if sol.status != 1 or not sol.t_events[0].size:
        raise AccuracyError("half-orbit did not reach the second turning point")
    T_ode = float(sol.t_events[0][0])
    e = spec.offset(lvl.E)
    drift = float(np.max(np.abs(0.5 * sol.y[1] ** 2 + spec.dH(sol.y[0]) - e)))
    return sol.sol, T_ode, drift


def max_modes(gamma: float, gamma0: float) -> int:
    """Largest n with gamma > n^2 gamma0."""
    n = int(math.floor(math.sqrt(gamma / gamma0)))
    while n > 0 and not gamma > n * n * gamma0:
        n -= 1
    return n


def build_pattern(p: ModelParams, k: int, orientation="increasing", n_grid=1024) -> Pattern:
    """k-mode continuous pattern of length sqrt(gamma) in the rescaled variable.

    Parameters
    ----------
    k : int
        Number of monotone pieces, at least 1.
    orientation : {'increasing', 'decreasing'}
        Whether W increases on the first piece.
    """
    if k < 1:
        raise DomainError("k must be >= 1; use constant_pattern for k = 0")
    if orientation not in ("increasing", "decreasing"):
        raise DomainError(f"unknown orientation {orientation!r}")
    if n_grid < 64:
        raise DomainError("n_grid must be >= 64")
    spec = potential_spec(p)
    nmax = max_modes(p.gamma, spec.gamma0)
    if k > nmax:
        raise BelowCriticalError(
            f"gamma = {p.gamma:g} <= k^2 gamma0 = {k * k * spec.gamma0:.6g}; max feasible k is {nmax}",
            max_modes=nmax,
        )
    L = math.sqrt(p.gamma)
    T = L / k
    lvl = invert_time_map(spec, T)
    sol, T_ode, drift = half_orbit(spec, lvl, 1.5 * T + 1.0)
    if abs(T_ode - T) > 1e-8 * T:
        raise AccuracyError(f"shooting half-period {T_ode!r} disagrees with time map {T!r}")
    if drift > 1e-9:
        raise AccuracyError(f"first integral drift {drift:.3g}")
    c = T_ode / T

    def fn(tau, sol=sol, c=c):
        y = sol(np.asarray(tau) * c)
        return y[0], y[1] * c

    pieces = [_Piece(j * T, T, "inner", fn, reverse=bool(j % 2)) for j in range(k)]
    Tq = time_map(spec, lvl.E).value
    meta = {
        "T_target": T,
        "T_shoot": T_ode,
        "T_quad": Tq,
        "gamma_reconstructed": (k * Tq) ** 2,
        "energy_drift": drift,
    }
    return _finish(p, pieces, L, k, orientation, lvl, n_grid, [], meta)


# --- discontinuous patterns -------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """One arc of a gluing plan.

    ``kind`` is 'inner' (orbit of w'' = -h(w) at energy E) or 'outer' (orbit of
    w'' = d_g w - kappa0 on the null set, energy z^2/2 + kappa0 w - d_g w^2/2).
    ``skip`` counts crossings of the next junction level passed over before
    switching. ``start`` selects the initial turning point of a leading inner arc.
    """

    kind: str
    energy: float
    skip: int = 0
    start: str = "low"


def parse_plan(text: str) -> list[Segment]:
    """Parse lines ``kind energy [skip=N] [start=low|high]``."""
    segs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if line[0] not in ("inner", "outer") or len(line) < 2:
            raise PlanError(f"line {lineno}: expected 'inner|outer ENERGY [skip=N] [start=low|high]'")
        kw = {}
        for tok in line[2:]:
            if "=" not in tok:
                raise PlanError(f"line {lineno}: bad token {tok!r}")
            key, val = tok.split("=", 1)
            if key == "skip":
                kw["skip"] = int(val)
            elif key == "start":
                kw["start"] = val
            else:
                raise PlanError(f"line {lineno}: unknown option {key!r}")
        try:
            segs.append(Segment(line[0], float(line[1]), **kw))
        except ValueError:
            raise PlanError(f"line {lineno}: bad energy {line[1]!r}") from None
    if not segs:
        raise PlanError("empty plan")
    return segs


def outer_energy(spec: PotentialSpec, W, Z=0.0):
    return 0.5 * Z * Z + spec.kappa0 * W - 0.5 * spec.d_g * W * W


def inner_energy(spec: PotentialSpec, W, Z=0.0):
    return 0.5 * Z * Z + float(spec.H(W))


def outer_energy_for_junction(spec: PotentialSpec, E_inner: float, W_star: float) -> float:
    """Outer energy whose curve meets the inner orbit E_inner at W = W_star."""
    return E_inner + spec.c_h * math.log(W_star)


def junction_level(spec: PotentialSpec, E_inner: float, E_outer: float):
    """W* where the inner and outer curves meet, and Z*^2 there."""
    Ws = math.exp((E_outer - E_inner) / spec.c_h)
    z2 = 2.0 * (E_inner - float(spec.H(Ws)))
    return Ws, z2


class _OuterArc:
    """Closed-form solution of w'' = d_g w - kappa0 from (W0, Z0)."""

    def __init__(self, spec, W0, Z0):
        self.om = math.sqrt(spec.d_g)
        self.c = spec.kappa0 / spec.d_g
        self.A = W0 - self.c
        self.B = Z0 / self.om

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        ch, sh = np.cosh(self.om * tau), np.sinh(self.om * tau)
        return self.c + self.A * ch + self.B * sh, self.om * (self.A * sh + self.B * ch)

    def _pos_roots(self, P, Dv, Q):
        # P q^2 - Dv q + Q = 0, q = exp(om tau) > 1
        if P == 0:
            qs = [Q / Dv] if Dv != 0 else []
        else:
            disc = Dv * Dv - 4 * P * Q
            if disc < 0:
                return []
            r = math.sqrt(disc)
            t = 0.5 * (Dv + math.copysign(r, Dv)) if Dv != 0 else 0.5 * r
            qs = [t / P, Q / t] if t != 0 else [math.sqrt(Q / P)] if Q / P > 0 else []
        taus = sorted(math.log(q) / self.om for q in qs if q > 0 and math.isfinite(q))
        return [t for t in taus if t > 1e-12]

    def crossings(self, level):
        P, Q = 0.5 * (self.A + self.B), 0.5 * (self.A - self.B)
        return self._pos_roots(P, level - self.c, Q)

    def axis_times(self):
        P, Q = 0.5 * (self.A + self.B), 0.5 * (self.A - self.B)
        if P == 0 or Q / P <= 0:
            return []
        t = math.log(math.sqrt(Q / P)) / self.om
        return [t] if t > 1e-12 else []


def _inner_arc(spec, W0, Z0, E, level, n_needed):
    """Integrate the inner system; return (dense sol, list of level-crossing times, axis times)."""
    Thalf = time_map(spec, E).value
    horizon = 2.0 * Thalf * (n_needed + 1) + 1.0
    ev_level = (lambda t, y: y[0] - level) if level is not None else (lambda t, y: 1.0)
    ev_axis = lambda t, y: y[1]
    sol = solve_ivp(_hamiltonian_rhs(spec), (0.0, horizon), [W0, Z0], method="DOP853",
                    rtol=_RTOL, atol=_ATOL, dense_output=True, events=[ev_level, ev_axis])
    tol = 1e-9 * Thalf
    lv = [t for t in sol.t_events[0] if t > tol]
    ax = [t for t in sol.t_events[1] if t > tol]
    return sol.sol, lv, ax


def build_discontinuous_pattern(p: ModelParams, plan, n_grid=1024) -> Pattern:
    """Glue inner and outer phase-plane arcs into a weak stationary solution.

    The first arc starts on the axis z = 0 (inner: at the turning point chosen by
    ``start``; outer: at the left root of its energy), consecutive arcs switch at
    the intersection of their curves, and the last arc stops on the axis.
    The resulting length L fixes gamma = L^2.
    """
    if isinstance(plan, str):
        plan = parse_plan(plan)
    plan = list(plan)
    if not plan:
        raise PlanError("empty plan")
    spec = potential_spec(p)
    for i, seg in enumerate(plan):
        if seg.kind not in ("inner", "outer"):
            raise PlanError(f"segment {i}: unknown kind {seg.kind!r}")
        if seg.kind == "inner" and not spec.H_min < seg.energy < spec.H_max:
            raise PlanError(f"segment {i}: inner energy {seg.energy!r} outside (H_min, H_max)")
    first = plan[0]
    if first.kind == "inner":
        lvl = turning_points(spec, first.energy)
        W, Z = (lvl.w1E if first.start == "low" else lvl.w2E), 0.0
    else:
        disc = spec.kappa0**2 - 2 * spec.d_g * first.energy
        if disc <= 0:
            raise PlanError("segment 0: outer energy has no axis point")
        r = math.sqrt(disc)
        if first.start == "low":
            W = (spec.kappa0 - r) / spec.d_g
        else:
            W = (spec.kappa0 + r) / spec.d_g
        Z = 0.0
        if W <= 0:
            raise PlanError("segment 0: outer axis point is not positive")
    pieces, null_s, jumps, energies = [], [], [], []
    s0 = 0.0
    for i, seg in enumerate(plan):
        last = i == len(plan) - 1
        level = None
        if not last:
            nxt = plan[i + 1]
            if nxt.kind == seg.kind:
                raise GluingInfeasibleError(
                    f"segments {i} and {i + 1}: two {seg.kind} curves of one family never intersect")
            E_in = seg.energy if seg.kind == "inner" else nxt.energy
            E_out = seg.energy if seg.kind == "outer" else nxt.energy
            level, z2 = junction_level(spec, E_in, E_out)
            if not z2 > 0:
                raise GluingInfeasibleError(
                    f"segments {i} and {i + 1}: curves do not intersect (Z*^2 = {z2:.6g} <= 0)")
        if seg.kind == "outer":
            arc = _OuterArc(spec, W, Z)
            times = arc.crossings(level) if not last else arc.axis_times()
            fn = arc
        else:
            fn_sol, lv, ax = _inner_arc(spec, W, Z, seg.energy, level, seg.skip)
            times = lv if not last else ax

            def fn(tau, sol=fn_sol):
                y = sol(np.asarray(tau))
                return y[0], y[1]
        if len(times) <= seg.skip:
            if last:
                raise PlanError(f"segment {i}: arc does not return to the axis z = 0")
            raise GluingInfeasibleError(
                f"segments {i} and {i + 1}: arc never reaches the junction level W = {level:.6g}")
        tau = times[seg.skip]
        pieces.append(_Piece(s0, tau, seg.kind, fn))
        if seg.kind == "outer":
            null_s.append((s0, s0 + tau))
        energies.append(seg.energy)
        W, Z = (float(v) for v in fn(tau))
        if not last:
            nxt = plan[i + 1]
            E_next = nxt.energy
            if nxt.kind == "outer":
                z_curve = math.sqrt(max(2 * (E_next - outer_energy(spec, W)), 0.0))
            else:
                z_curve = math.sqrt(max(2 * (E_next - inner_energy(spec, W)), 0.0))
            jumps.append(abs(abs(Z) - z_curve))
        s0 += tau
    if abs(Z) > 1e-8:
        raise PlanError(f"plan ends off the axis (z = {Z:.3g})")
    L = s0
    null_set = [(a / L, b / L) for a, b in null_s]
    meta = {"plan": [[s.kind, s.energy, s.skip] for s in plan], "junction_jumps": jumps,
            "segment_lengths": [pc.length for pc in pieces]}
    energy = None
    k = None
    if not null_set and len(plan) == 1:
        energy = turning_points(spec, plan[0].energy)
        k = 1
    pat = _finish(p, pieces, L, k, "increasing", energy, n_grid, null_set, meta)
    return pat


# --- verification -----------------------------------------------------------


@dataclass
class PatternResidual:
    """Residuals of a stationary solution; ``relative`` divides by max |h(W)|."""

    continuous: bool
    residual: float
    scale: float
    relative: float
    boundary_derivative: float
    lift_residual: float
    weak_residual: float = float("nan")
    junction_jump: float = float("nan")
    n: int = 0


def _h_model(p: ModelParams, W):
    return -p.d_g * W - p.c_h / W + p.kappa0


def fd_residual(p: ModelParams, gamma: float, W: np.ndarray) -> np.ndarray:
    """|(1/gamma) W'' + h(W)| at interior nodes of a uniform grid.

    W'' comes from the fourth-order compact scheme
    (D_{i-1} + 10 D_i + D_{i+1})/12 = (W_{i-1} - 2 W_i + W_{i+1})/dx^2,
    closed by the even reflection implied by the Neumann condition.
    Its error constant (1/240) is well below that of the 5-point stencil (1/90).
    """
    n = W.size
    dx = 1.0 / (n - 1)
    rhs = np.empty(n)
    rhs[1:-1] = (W[2:] - 2 * W[1:-1] + W[:-2]) / dx**2
    rhs[0] = 2 * (W[1] - W[0]) / dx**2
    rhs[-1] = 2 * (W[-2] - W[-1]) / dx**2
    ab = np.empty((3, n))
    ab[0], ab[1], ab[2] = 1 / 12, 10 / 12, 1 / 12
    ab[0, 1] = ab[2, -2] = 2 / 12
    d2 = solve_banded((1, 1), ab, rhs)
    res = d2 / gamma + _h_model(p, W)
    return np.abs(res[1:-1])


def _boundary_slope(W):
    dx = 1.0 / (W.size - 1)
    c = np.array([-25, 48, -36, 16, -3]) / (12 * dx)
    return max(abs(c @ W[:5]), abs(c @ W[::-1][:5]))


def _lift_residual(p, pat):
    off = ~pat.in_null_set(pat.grid)
    if not off.any():
        return 0.0
    U, V, W = pat.U[off], pat.V[off], pat.W[off]
    f1, f2, _ = reaction_rhs(p, U, V, W)
    s1 = p.a * V / (U + V) * U + p.d_c * U
    s2 = (p.d_b + p.d) * V + U * U * W
    return float(max(np.max(np.abs(f1) / s1), np.max(np.abs(f2) / s2)))


def weak_residual(p: ModelParams, pat: Pattern, n_test=64, n_gauss=16):
    """Max weak-form residual against piecewise-linear hat functions.

    For each hat phi_j on a uniform mesh of ``n_test`` nodes,
    r_j = -(1/gamma) int W' phi_j' + int F phi_j with F the w-reaction term
    (U = V = 0 on the null set). Returned value is max_j |r_j| / int phi_j,
    divided by max |F|.
    """
    nodes = np.linspace(0.0, 1.0, n_test)
    breaks = set(nodes.tolist())
    for a, b in pat.null_set:
        breaks.update((a, b))
    if pat._eval is not None:
        L = pat._eval.L
        for pc in pat._eval.pieces:
            xb = pc.s0 / L
            breaks.add(1 - xb if pat._eval.flip else xb)
    breaks = np.array(sorted(b for b in breaks if 0 <= b <= 1))
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    r = np.zeros(n_test)
    fmax = 0.0
    h = nodes[1] - nodes[0]
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        x = 0.5 * (a + b) + 0.5 * (b - a) * gx
        wq = 0.5 * (b - a) * gw
        # interior quadrature points never hit a null-set boundary exactly
        U, V, W = pat.fields(x, p)
        dW = pat.derivative(x)
        F = -p.d_g * W - U * U * W + p.d * V + p.kappa0
        fmax = max(fmax, float(np.max(np.abs(F))))
        j = min(int(np.floor(0.5 * (a + b) / h)), n_test - 2)
        # hats j (descending) and j+1 (ascending) live on [nodes[j], nodes[j+1]]
        t = (x - nodes[j]) / h
        r[j] += np.sum(wq * (-(dW / pat.gamma) * (-1 / h) + F * (1 - t)))
        r[j + 1] += np.sum(wq * (-(dW / pat.gamma) * (1 / h) + F * t))
    mass = np.full(n_test, h)
    mass[[0, -1]] = h / 2
    return float(np.max(np.abs(r) / mass) / max(fmax, 1e-300))


def verify_pattern(p: ModelParams, pat: Pattern) -> PatternResidual:
    """Residual report for a continuous or weak stationary pattern."""
    if pat.continuous:
        res = fd_residual(p, pat.gamma, pat.W)
        scale = float(np.max(np.abs(_h_model(p, pat.W))))
        r = float(np.max(res)) if res.size else 0.0
        rel = r / scale if scale > 0 else (0.0 if r == 0 else math.inf)
        return PatternResidual(True, r, scale, rel, _boundary_slope(pat.W), _lift_residual(p, pat),
                               n=pat.W.size)
    wr = weak_residual(p, pat)
    jump = 0.0
    ev = pat._eval
    for j in range(1, len(ev.pieces)):
        prev, cur = ev.pieces[j - 1], ev.pieces[j]
        w0, z0 = (float(v) for v in prev.fn(prev.length))
        w1, z1 = (float(v) for v in cur.fn(0.0))
        jump = max(jump, abs(w0 - w1), abs(z0 - z1))
    jump = max([jump] + list(pat.meta.get("junction_jumps", [])))
    dW = pat.derivative(np.array([0.0, 1.0]))
    return PatternResidual(False, float("nan"), float("nan"), float("nan"), float(np.max(np.abs(dW))),
                           _lift_residual(p, pat), weak_residual=wr, junction_jump=jump, n=pat.W.size)


def mode_identity_residual(pat: Pattern, n_samples=2001) -> float:
    """Largest violation of the k-mode translation and mirror identities.

    For every j with 2j + 2 <= k: W(x) = W(x - 2j/k) on [2j/k, (2j+1)/k] and
    W(x) = W((2j+2)/k - x) on [(2j+1)/k, (2j+2)/k]. Evaluated exactly.
    """
    k = pat.k
    if not k:
        return 0.0
    worst = 0.0
    s = np.linspace(0.0, 1.0, n_samples)
    j = 0
    while 2 * j + 2 <= k:
        x = (2 * j + s) / k
        worst = max(worst, float(np.max(np.abs(pat.evaluate(x) - pat.evaluate(x - 2 * j / k)))))
        x = (2 * j + 1 + s) / k
        worst = max(worst, float(np.max(np.abs(pat.evaluate(x) - pat.evaluate((2 * j + 2) / k - x)))))
        j += 1
    return worst


# --- regime classification --------------------------------------------------


@dataclass
class RegimeReport:
    regime: str  # only-trivial | no-positive | only-constants | patterns-exist
    max_modes: int
    gamma0: Optional[float]
    note: str = ""


def nonexistence_guard(p: ModelParams) -> RegimeReport:
    """Which stationary solutions can exist for these parameters."""
    if p.a <= p.d_c:
        return RegimeReport("only-trivial", 0, None, "a <= d_c")
    th = theta(p)
    if p.kappa0**2 - th < -DOUBLE_ROOT_RTOL * th:
        return RegimeReport("no-positive", 0, None, "kappa0^2 < Theta")
    if abs(p.kappa0**2 - th) <= DOUBLE_ROOT_RTOL * th:
        return RegimeReport("only-constants", 0, None, "kappa0^2 = Theta")
    spec = potential_spec(p)
    n = max_modes(p.gamma, spec.gamma0)
    if n == 0:
        return RegimeReport("only-constants", 0, spec.gamma0, "gamma <= gamma0")
    return RegimeReport("patterns-exist", n, spec.gamma0)
