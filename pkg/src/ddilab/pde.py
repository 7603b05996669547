"""Method-of-lines simulator for the three-field model with Neumann conditions.

u and v have no diffusion and advance node by node. w carries (1/gamma) w_xx,
discretised with ghost-point Neumann rows and treated implicitly.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowUpError, DomainError, SolverError
from .io import write_csv, write_kv
from .model import ModelParams, reaction_rhs

CLIP_TOL = 1e-13
SCHEMES = ("imex1", "imex2")


@dataclass
class SimConfig:
    """Run settings.

    ``dt=None`` selects 0.25 * min(1, stability bound) from the initial data.
    """

    n_grid: int = 512
    dt: Optional[float] = None
    t_end: float = 10.0
    scheme: str = "imex2"
    record_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if int(self.n_grid) != self.n_grid or self.n_grid < 64:
            raise DomainError(f"n_grid must be an integer >= 64, got {self.n_grid}")
        self.n_grid = int(self.n_grid)
        if self.dt is not None and not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise DomainError(f"t_end must be positive, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise DomainError("record_every must be a positive integer")
        self.record_every = int(self.record_every)


@dataclass
class SimState:
    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def copy(self) -> "SimState":
        return SimState(self.t, self.u.copy(), self.v.copy(), self.w.copy())


def grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def trapezoid_weights(n: int) -> np.ndarray:
    wts = np.full(n, 1.0 / (n - 1))
    wts[0] = wts[-1] = 0.5 / (n - 1)
    return wts


def integral(f: np.ndarray) -> float:
    return float(trapezoid_weights(f.size) @ f)


def rate_bound(p: ModelParams, u, v, w) -> float:
    """max over nodes of the row-sum norm of the reaction Jacobian.

    The u-row uses its bounded one-sided limits where u = v = 0.
    """
    s = u + v
    rv = np.divide(v, s, out=np.zeros_like(s), where=s > 0)
    ru = np.divide(u, s, out=np.zeros_like(s), where=s > 0)
    row1 = np.abs(p.a * rv**2 - p.d_c) + p.a * ru**2
    row2 = 2 * u * w + p.d_b + p.d + u * u
    row3 = 2 * u * w + p.d + p.d_g + u * u
    return float(np.max(np.maximum(row1, np.maximum(row2, row3))))


def default_dt(p: ModelParams, s: SimState) -> float:
    return 0.25 * min(1.0, 0.5 / rate_bound(p, s.u, s.v, s.w))


def neumann_laplacian_banded(n: int, c: float) -> np.ndarray:
    """Banded form of I - c*L, L the ghost-point Neumann Laplacian on n nodes."""
    r = c * (n - 1) ** 2
    ab = np.zeros((3, n))
    ab[0, 1:] = -r
    ab[1, :] = 1 + 2 * r
    ab[2, :-1] = -r
    ab[0, 1] = -2 * r
    ab[2, n - 2] = -2 * r
    return ab


def apply_laplacian(w: np.ndarray) -> np.ndarray:
    n = w.size
    out = np.empty_like(w)
    out[1:-1] = w[:-2] - 2 * w[1:-1] + w[2:]
    out[0] = 2 * (w[1] - w[0])
    out[-1] = 2 * (w[-2] - w[-1])
    return out * (n - 1) ** 2


def _check_dominant(ab: np.ndarray):
    rows = np.zeros(ab.shape[1])
    rows[:-1] += np.abs(ab[0, 1:])
    rows[1:] += np.abs(ab[2, :-1])
    if not np.all(np.isfinite(ab)) or not np.all(ab[1] >= rows):
        raise SolverError("tridiagonal system is not diagonally dominant; check dt")


def _u_flow(p: ModelParams, u, v, tau: float):
    """u' = (a v/(u+v) - d_c) u with v frozen; exponential Heun, so u stays >= 0
    and never exceeds u*exp((a - d_c) tau)."""

    def rate(u):
        s = u + v
        return p.a * np.divide(v, s, out=np.zeros_like(s), where=s > 0) - p.d_c

    r0 = rate(u)
    r1 = rate(u * np.exp(tau * r0))
    return u * np.exp(0.5 * tau * (r0 + r1))


def _vw_flow(p: ModelParams, u, v, w, tau: float):
    """Exact flow of the (v, w) pair with u frozen.

    y' = A y + (0, kappa0) with A = [[-D, u^2], [d, -(d_g + u^2)]]. A is Metzler
    with negative eigenvalues m +- s, so exp(tau A) is nonnegative and the
    u^2 w exchange is conserved exactly, however large u^2 tau is.
    """
    D = p.d_b + p.d
    uu = u * u
    a11, a12, a21, a22 = -D, uu, p.d, -(p.d_g + uu)
    m = 0.5 * (a11 + a22)
    s = np.sqrt(0.25 * (a11 - a22) ** 2 + a12 * a21)
    e1, e2 = np.exp((m + s) * tau), np.exp((m - s) * tau)
    ch = 0.5 * (e1 + e2)  # exp(m tau) cosh(s tau)
    st = s * tau
    small = st < 1e-4
    sh = np.where(small, np.exp(m * tau) * tau * (1 + st * st / 6),
                  0.5 * (e1 - e2) / np.where(small, 1.0, s))  # exp(m tau) sinh(s tau)/s
    E11, E12 = ch + sh * (a11 - m), sh * a12
    E21, E22 = sh * a21, ch + sh * (a22 - m)
    # Forced part A^{-1}(exp(tau A) - I)(0, kappa0).
    det = a11 * a22 - a12 * a21
    g1, g2 = E12 * p.kappa0, (E22 - 1) * p.kappa0
    fv = (a22 * g1 - a12 * g2) / det
    fw = (-a21 * g1 + a11 * g2) / det
    return (np.maximum(E11 * v + E12 * w + fv, 0.0),
            np.maximum(E21 * v + E22 * w + fw, 0.0))


def reaction_flow(p: ModelParams, u, v, w, tau: float):
    """Second-order positive reaction update over tau.

    Strang splitting of u (with v frozen) against the linear (v, w) pair (with u
    frozen): half u step, exact (v, w) step, half u step.
    """
    u = _u_flow(p, u, v, tau / 2)
    v, w = _vw_flow(p, u, v, w, tau)
    return _u_flow(p, u, v, tau / 2), v, w


def _clip(name, f):
    bad = f < 0
    if np.any(bad):
        scale = max(1.0, float(np.max(np.abs(f))))
        if np.min(f) < -CLIP_TOL * scale:
            raise SolverError(f"{name} became negative ({np.min(f):.3e}) beyond round-off")
        f = np.where(bad, 0.0, f)
    return f


class Stepper:
    """Advances a SimState; caches the factor-free banded matrices per dt."""

    def __init__(self, p: ModelParams, n: int, dt: float, scheme: str):
        if not (dt > 0):
            raise SolverError(f"non-positive time step {dt}")
        self.p, self.n, self.dt, self.scheme = p, n, dt, scheme
        c = dt / p.gamma if scheme == "imex1" else dt / (2 * p.gamma)
        self.ab = neumann_laplacian_banded(n, c)
        _check_dominant(self.ab)
        self.c = c
        # Start-up: the first CN step is replaced by four backward-Euler quarter
        # steps, which damps rough initial data that CN would leave oscillating.
        self.ab_start = neumann_laplacian_banded(n, dt / (4 * p.gamma))
        self.started = False

    def _diffuse_cn(self, w):
        if not self.started:
            for _ in range(4):
                w = solve_banded((1, 1), self.ab_start, w, check_finite=False)
            self.started = True
            return w
        rhs = w + self.c * apply_laplacian(w)
        return solve_banded((1, 1), self.ab, rhs, check_finite=False)

    def __call__(self, s: SimState) -> SimState:
        p, dt = self.p, self.dt
        if self.scheme == "imex1":
            f1, f2, f3 = reaction_rhs(p, s.u, s.v, s.w)
            u = s.u + dt * f1
            v = s.v + dt * f2
            w = solve_banded((1, 1), self.ab, s.w + dt * f3, check_finite=False)
        else:
            u, v, w = reaction_flow(p, s.u, s.v, s.w, dt / 2)
            w = _clip("w", self._diffuse_cn(w))
            u, v, w = reaction_flow(p, u, v, w, dt / 2)
        t = s.t + dt
        for f in (u, v, w):
            if not np.all(np.isfinite(f)):
                raise BlowUpError(f"non-finite values at t = {t:.6g}; dt = {dt:g} is too large")
        return SimState(t, _clip("u", u), _clip("v", v), _clip("w", w))


def step(p: ModelParams, s: SimState, cfg: SimConfig) -> SimState:
    """One time step with ``cfg.dt`` (or the default dt)."""
    _check_state(s)
    dt = cfg.dt if cfg.dt is not None else default_dt(p, s)
    return Stepper(p, s.u.size, dt, cfg.scheme)(s)


def _check_state(s: SimState):
    for name in ("u", "v", "w"):
        f = np.asarray(getattr(s, name), dtype=float)
        if f.ndim != 1 or not np.all(np.isfinite(f)):
            raise DomainError(f"{name} must be a finite 1-D array")
        if np.any(f < 0):
            raise DomainError(f"{name} must be nonnegative")
    if not (s.u.size == s.v.size == s.w.size):
        raise DomainError("u, v, w must share one grid")


# -- diagnostics ---------------------------------------------------------------


def heat_kernel_constant(n: int, gamma: float, t_end: float, n_times=200) -> float:
    """sup over t in (0, t_end] of sqrt(t) * max_x density of exp(t L / gamma).

    Density means the kernel divided by the trapezoid weight of the source node,
    so that int B(x, y, t) v(y) dy <= density * ||v||_1. The sup over the source
    node is attained on the diagonal, and the eigenpairs of the ghost-point
    Laplacian are cos(k pi j/(n-1)) with eigenvalues -(2(n-1) sin(k pi/(2(n-1))))^2.
    """
    m = n - 1
    k = np.arange(n)
    lam = -(2 * m * np.sin(k * np.pi / (2 * m))) ** 2
    norms = np.full(n, 0.5)
    norms[0] = norms[-1] = 1.0  # sum_j wts_j cos^2 in units of the total length
    C2 = np.cos(np.outer(np.arange(n), k) * np.pi / m) ** 2 / norms  # node x mode
    best = 0.0
    times = np.geomspace(1e-6 * gamma, t_end, n_times)
    for t in times:
        dens = C2 @ np.exp(t * lam / gamma)
        best = max(best, math.sqrt(t) * float(np.max(dens)))
    return best


def neumann_defect(w: np.ndarray) -> float:
    """Largest fourth-order one-sided boundary slope of w, relative to max|w|.

    For a ghost-point Neumann solution the smooth interpolant is even about both
    ends, so this vanishes to O(dx^5).
    """
    n = w.size
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) * (n - 1) / 12
    left = c @ w[:5]
    right = c @ w[::-1][:5]
    scale = max(float(np.max(np.abs(w))), 1e-300)
    return max(abs(left), abs(right)) / scale


def w_sup_bound(p: ModelParams, s0: SimState, C: float) -> float:
    mu = min(p.d_g, p.d_b)
    return float(np.max(s0.w)) + C * p.d * (2 + 1 / p.d_g) * (
        integral(s0.v) + integral(s0.w) + p.kappa0 / mu)


@dataclass
class Trajectory:
    x: np.ndarray
    steps: list = field(default_factory=list)
    t: list = field(default_factory=list)
    u: list = field(default_factory=list)
    v: list = field(default_factory=list)
    w: list = field(default_factory=list)

    def append(self, k: int, s: SimState):
        self.steps.append(k)
        self.t.append(s.t)
        self.u.append(s.u.copy())
        self.v.append(s.v.copy())
        self.w.append(s.w.copy())

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> SimState:
        return SimState(self.t[i], self.u[i], self.v[i], self.w[i])

    @property
    def final(self) -> SimState:
        return self.state(-1)


@dataclass
class Diagnostics:
    t: np.ndarray
    mass_u: np.ndarray
    mass_v: np.ndarray
    sup_w: np.ndarray
    deviation: np.ndarray
    dt: float
    stability_bound: float
    C: float
    w_bound: float
    w_bound_ok: bool
    neumann_max: float
    warnings: list

    def rows(self):
        return np.column_stack([self.t, self.mass_u, self.mass_v, self.sup_w, self.deviation])


def deviation_norm(s: SimState, ref: SimState) -> float:
    """L2 distance over the three fields, each scaled by the reference sup-norm."""
    total = 0.0
    for a, b in ((s.u, ref.u), (s.v, ref.v), (s.w, ref.w)):
        scale = float(np.max(np.abs(b))) or 1.0
        total += integral(((a - b) / scale) ** 2)
    return math.sqrt(total)


def run(p: ModelParams, init: SimState, cfg: SimConfig, reference: SimState | None = None,
        out_dir=None) -> tuple[Trajectory, Diagnostics]:
    """Integrate to ``cfg.t_end``; snapshots every ``cfg.record_every`` steps.

    With ``out_dir``, snapshot CSVs are written as they are taken, followed by
    the diagnostics CSV and a metadata file.
    """
    _check_state(init)
    if init.u.size != cfg.n_grid:
        raise DomainError(f"initial fields have {init.u.size} nodes, config says {cfg.n_grid}")
    s = SimState(0.0, *(np.asarray(f, dtype=float).copy() for f in (init.u, init.v, init.w)))
    rho = rate_bound(p, s.u, s.v, s.w)
    bound = 0.5 / rho
    dt = cfg.dt if cfg.dt is not None else 0.25 * min(1.0, bound)
    notes = []
    if dt > bound:
        msg = f"dt = {dt:g} exceeds the explicit reaction bound {bound:g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    n_steps = max(1, int(math.ceil(cfg.t_end / dt - 1e-9)))
    dt = cfg.t_end / n_steps
    stepper = Stepper(p, cfg.n_grid, dt, cfg.scheme)
    C = heat_kernel_constant(cfg.n_grid, p.gamma, cfg.t_end)
    wb = w_sup_bound(p, s, C)
    x = grid(cfg.n_grid)
    traj = Trajectory(x)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    diag = np.empty((n_steps + 1, 5))
    nd_max = 0.0
    ok = True

    def record(k, s):
        nonlocal nd_max
        traj.append(k, s)
        nd_max = max(nd_max, neumann_defect(s.w))
        if out_dir is not None:
            write_csv(os.path.join(out_dir, f"snap_{k}.csv"), ["x", "u", "v", "w"],
                      np.column_stack([x, s.u, s.v, s.w]))

    def diag_row(k, s):
        nonlocal ok
        sw = float(np.max(s.w))
        ok = ok and sw <= wb
        dev = deviation_norm(s, reference) if reference is not None else math.nan
        diag[k] = (s.t, integral(s.u), integral(s.v), sw, dev)

    record(0, s)
    diag_row(0, s)
    for k in range(1, n_steps + 1):
        s = stepper(s)
        diag_row(k, s)
        if k % cfg.record_every == 0 or k == n_steps:
            record(k, s)
    d = Diagnostics(*diag.T, dt=dt, stability_bound=bound, C=C, w_bound=wb, w_bound_ok=ok,
                    neumann_max=nd_max, warnings=notes)
    if out_dir is not None:
        write_csv(os.path.join(out_dir, "diagnostics.csv"),
                  ["t", "mass_u", "mass_v", "sup_w", "deviation"], d.rows())
        meta = {f"param.{k}": v for k, v in asdict(p).items()}
        meta.update({f"sim.{k}": v for k, v in asdict(cfg).items() if k != "dt"})
        meta.update({"sim.dt": dt, "stability_bound": bound, "heat_kernel_C": C,
                     "w_bound": wb, "w_bound_ok": ok, "neumann_defect_max": nd_max,
                     "seed": cfg.seed, "n_steps": n_steps})
        write_kv(os.path.join(out_dir, "metadata.txt"), meta)
    return traj, d


# -- experiments ---------------------------------------------------------------


@dataclass
class MassReport:
    tail_u: float
    tail_v: float
    tail_w: float
    bound_u: float
    bound_v: float
    bound_w: float
    slack: float
    horizon_ok: bool
    note: str

    @property
    def ok_u(self):
        return self.tail_u <= self.bound_u * (1 + self.slack)

    @property
    def ok_v(self):
        return self.tail_v <= self.bound_v * (1 + self.slack)

    @property
    def ok_w(self):
        return self.tail_w <= self.bound_w * (1 + self.slack)

    @property
    def ok(self):
        return self.ok_u and self.ok_v and self.ok_w


def mass_diagnostics(p: ModelParams, diag: Diagnostics, slack=0.05) -> MassReport:
    """Tail maxima (final 25%) of the masses and of max w against their limsup bounds."""
    mu = min(p.d_g, p.d_b)
    t_end = float(diag.t[-1])
    tail = diag.t >= 0.75 * t_end
    horizon_ok = t_end >= 20 / mu
    note = "" if horizon_ok else f"insufficient horizon: t_end = {t_end:g} < 20/mu = {20 / mu:g}"
    bu = min(p.kappa0 / mu, p.a * p.kappa0 / (p.d_c * mu))
    bw = p.kappa0 * (diag.C * p.d / (mu * math.sqrt(p.d_g)) + 1 / p.d_g)
    return MassReport(float(np.max(diag.mass_u[tail])), float(np.max(diag.mass_v[tail])),
                      float(np.max(diag.sup_w[tail])), bu, p.kappa0 / mu, bw, slack, horizon_ok, note)


def as_m_threshold(p: ModelParams) -> float:
    """Largest admissible M*K_w: (d_b+d)(d_c/a)^2/(1+d_c/a)^2 = (d_b+d)(d_c/(a+d_c))^2."""
    return (p.d_b + p.d) * (p.d_c / (p.a + p.d_c)) ** 2


def as_m_holds(p: ModelParams, M: float, K_w: float) -> bool:
    # A few ulps of slack so that a product sitting on the threshold is accepted.
    return M * K_w <= as_m_threshold(p) * (1 + 4 * np.finfo(float).eps)


@dataclass
class ExtinctionVerdict:
    verdict: str
    hypothesis_met: bool
    threshold: float
    caps_ok: bool
    w_cap_ok: bool
    extinct: bool
    max_uv_final: float
    t_u: float
    t_v: float
    together: bool
    note: str = ""


def extinction_check(p: ModelParams, init: SimState, K_w: float, M: float, cfg: SimConfig,
                     level=1e-8) -> ExtinctionVerdict:
    """Check the smallness hypotheses, simulate, and report uniform extinction.

    ``t_u`` and ``t_v`` are the first recorded times at which max u (max v) falls
    below ``level``; both finite or both infinite means they vanished together.
    """
    if p.a <= p.d_c:
        raise DomainError("extinction_check needs a > d_c")
    hyp = as_m_holds(p, M, K_w)
    caps = bool(np.all(init.u <= M) and np.all(init.v < (p.d_c / p.a) ** 2 * M))
    traj, diag = run(p, init, cfg)
    w_ok = all(float(np.max(w)) <= K_w for w in traj.w)
    mu_ = np.array([np.max(u) for u in traj.u])
    mv_ = np.array([np.max(v) for v in traj.v])
    ts = np.asarray(traj.t)

    def first(m):
        idx = np.nonzero(m < level)[0]
        return float(ts[idx[0]]) if idx.size and np.all(m[idx[0]:] < level) else math.inf

    t_u, t_v = first(mu_), first(mv_)
    final = float(max(mu_[-1], mv_[-1]))
    extinct = final < level
    met = hyp and caps and w_ok
    verdict = ("extinct" if extinct else "not-extinct") if met else "hypothesis-not-met"
    note = "" if met else (
        "outcome informational: " + ("extinct" if extinct else "not extinct")
        + ("" if hyp else "; M*K_w above threshold") + ("" if caps else "; initial caps violated")
        + ("" if w_ok else "; w exceeded K_w"))
    return ExtinctionVerdict(verdict, met, as_m_threshold(p), caps, w_ok, extinct, final, t_u, t_v,
                             math.isinf(t_u) == math.isinf(t_v), note)


@dataclass
class GrowthFit:
    rate: float
    predicted: float
    grew: bool
    t_start: float
    t_stop: float
    n_points: int
    d0: float
    note: str = ""

    @property
    def relative_error(self) -> float:
        return abs(self.rate - self.predicted) / abs(self.predicted)


def fit_growth(t, dev, d0, lo=3.0, hi=100.0):
    """Least-squares slope of log(dev) on the first stretch with dev in [lo*d0, hi*d0]."""
    t, dev = np.asarray(t), np.asarray(dev)
    above = np.nonzero(dev >= lo * d0)[0]
    if above.size == 0:
        return None
    i0 = above[0]
    beyond = np.nonzero(dev[i0:] > hi * d0)[0]
    i1 = i0 + (beyond[0] if beyond.size else dev.size - i0)
    if i1 - i0 < 3:
        return None
    slope = np.polyfit(t[i0:i1], np.log(dev[i0:i1]), 1)[0]
    return float(slope), float(t[i0]), float(t[i1 - 1]), int(i1 - i0)


def decay_fit(t, dev):
    """Slope of log(dev) over the second half of the run (used for decaying probes)."""
    t, dev = np.asarray(t), np.asarray(dev)
    sel = (t >= 0.5 * t[-1]) & (dev > 0)
    return float(np.polyfit(t[sel], np.log(dev[sel]), 1)[0])


def perturbed_state(p: ModelParams, pat, x, n_probe: int, amplitude: float,
                    components=("u", "v", "w")) -> tuple[SimState, SimState]:
    """Pattern fields on ``x`` and the probe-perturbed copy."""
    U, V, W = pat.fields(x, p)
    ref = SimState(0.0, U, V, W)
    prof = amplitude * np.cos(n_probe * np.pi * x)
    mask = ~pat.in_null_set(x)
    out = ref.copy()
    if "u" in components:
        out.u = np.maximum(U + prof * mask, 0.0)
    if "v" in components:
        out.v = np.maximum(V + prof * mask, 0.0)
    if "w" in components:
        out.w = np.maximum(W + prof, 0.0)
    return ref, out


def instability_experiment(p: ModelParams, pat, n_probe: int, amplitude: float, cfg: SimConfig,
                           predicted: float | None = None, components=("u", "v", "w")) -> GrowthFit:
    """Perturb a stationary pattern by a cosine probe and fit the growth rate.

    The deviation window is [3, 100] times the initial deviation. ``predicted``
    defaults to the spectral prediction for index ``n_probe`` (constant patterns
    use the closed-form ladder).
    """
    if not (1e-6 <= amplitude <= 1e-3):
        raise DomainError("amplitude must lie in [1e-6, 1e-3]")
    if predicted is None:
        predicted = _predict(p, pat, n_probe)
    x = grid(cfg.n_grid)
    ref, init = perturbed_state(p, pat, x, n_probe, amplitude, components)
    _, diag = run(p, init, cfg, reference=ref)
    d0 = float(diag.deviation[0])
    fit = fit_growth(diag.t, diag.deviation, d0)
    if fit is None:
        rate = decay_fit(diag.t, diag.deviation) if d0 > 0 else math.nan
        return GrowthFit(rate, predicted, False, math.nan, math.nan, 0, d0,
                         "deviation never reached 3x its initial value")
    rate, t0, t1, n = fit
    return GrowthFit(rate, predicted, True, t0, t1, n, d0)


def _predict(p: ModelParams, pat, n: int) -> float:
    from .spectral import constant_case_lambda, find_unstable_eigenvalues

    if n == 0:
        return math.nan
    if pat.k == 0:
        lam = constant_case_lambda(p, p.gamma, n)
        return math.nan if lam is None else lam
    rep = find_unstable_eigenvalues(p, pat, [n])
    e = rep.entries[0]
    return e.lam if e.found else math.nan
