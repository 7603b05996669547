"""Space-homogeneous kinetic system, its (u, X, Y) transform and equilibrium analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegratorError
from .model import DOUBLE_ROOT_RTOL, ModelParams, theta
from .ode import dopri45


@dataclass(frozen=True)
class KineticState:
    u: float
    v: float
    w: float
    t: float = 0.0


@dataclass(frozen=True)
class TransformedState:
    u: float
    X: float
    Y: float
    t: float = 0.0


@dataclass
class KineticTrajectory:
    """Accepted steps of a kinetic integration."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __len__(self):
        return self.t.size

    def __getitem__(self, i) -> KineticState:
        return KineticState(float(self.u[i]), float(self.v[i]), float(self.w[i]), float(self.t[i]))

    @property
    def final(self) -> KineticState:
        return self[-1]

    def transformed(self):
        """Arrays (X, Y) = (v/u, u w); nan where u == 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            X = np.where(self.u > 0, self.v / self.u, np.nan)
        return X, self.u * self.w

    def to_csv(self, path, with_xy=False):
        from .io import write_csv

        cols = [self.t, self.u, self.v, self.w]
        header = ["t", "u", "v", "w"]
        if with_xy:
            X, Y = self.transformed()
            cols += [X, Y]
            header += ["X", "Y"]
        write_csv(path, header, np.column_stack(cols))


def kinetic_rhs(p: ModelParams, y):
    """Right-hand side for the kinetic ODE, tolerant of tiny negative stage values.

    Uses the regularized ratio v/(|u|+|v|) which equals v/(u+v) on the nonnegative cone.
    """
    u, v, w = y
    s = abs(u) + abs(v)
    ratio = v / s if s > 0 else 0.0
    uuw = u * u * w
    return np.array(
        [
            (p.a * ratio - p.d_c) * u,
            -(p.d_b + p.d) * v + uuw,
            -p.d_g * w - uuw + p.d * v + p.kappa0,
        ]
    )


def transformed_rhs(p: ModelParams, y):
    """Right-hand side of the (u, X, Y) system."""
    u, X, Y = y
    D = p.d_b + p.d
    g = p.a * X / (1 + X) - p.d_c
    return np.array(
        [
            g * u,
            -D * X + Y - g * X,
            g * Y - p.d_g * Y - u * Y * u + p.d * X * u * u + p.kappa0 * u,
        ]
    )


def transformed_jacobian(p: ModelParams, u, X, Y) -> np.ndarray:
    """Jacobian of the (u, X, Y) system at a general point."""
    D = p.d_b + p.d
    g = p.a * X / (1 + X) - p.d_c
    gx = p.a / (1 + X) ** 2
    return np.array(
        [
            [g, gx * u, 0.0],
            [0.0, -D - g - gx * X, 1.0],
            [-2 * u * Y + 2 * p.d * X * u + p.kappa0, gx * Y + p.d * u * u, g - p.d_g - u * u],
        ]
    )


def _make_clipper(rel_tol, scale):
    def clip(t, y):
        np.maximum(scale, np.abs(y), out=scale)
        neg = y < 0
        if not neg.any():
            return y
        if np.any(y[neg] < -10 * rel_tol * scale[neg]):
            raise IntegratorError(f"negative component beyond round-off at t = {t:.17g}: {y}")
        y = y.copy()
        y[neg] = 0.0
        return y

    return clip


def integrate_kinetics(p: ModelParams, init: KineticState, t_end: float, rel_tol=1e-10, atol=1e-30):
    """Integrate the kinetic system from ``init`` up to ``t_end``.

    Negative round-off down to -10*rel_tol*scale is clipped to zero, where the
    scale of a component is its running maximum magnitude.
    """
    if not 1e-12 <= rel_tol <= 1e-3:
        raise DomainError(f"rel_tol must lie in [1e-12, 1e-3], got {rel_tol}")
    y0 = np.array([init.u, init.v, init.w], dtype=float)
    if np.any(y0 < 0) or not np.all(np.isfinite(y0)):
        raise DomainError("initial state must be finite and nonnegative")
    scale = np.maximum(np.abs(y0), 1e-300)
    sol = dopri45(lambda t, y: kinetic_rhs(p, y), init.t, y0, t_end, rtol=rel_tol, atol=atol,
                  post_step=_make_clipper(rel_tol, scale))
    return KineticTrajectory(sol.t, sol.y[:, 0], sol.y[:, 1], sol.y[:, 2])


def integrate_transformed(p: ModelParams, init: TransformedState, t_end: float, rel_tol=1e-10, atol=1e-30):
    """Integrate the (u, X, Y) system; returns (t, states) with states of shape (n, 3)."""
    y0 = np.array([init.u, init.X, init.Y], dtype=float)
    scale = np.maximum(np.abs(y0), 1e-300)
    sol = dopri45(lambda t, y: transformed_rhs(p, y), init.t, y0, t_end, rtol=rel_tol, atol=atol,
                  post_step=_make_clipper(rel_tol, scale))
    return sol.t, sol.y


def transform_xy(s: KineticState) -> TransformedState:
    if not s.u > 0:
        raise DomainError("transform needs u > 0")
    return TransformedState(s.u, s.v / s.u, s.u * s.w, s.t)


# --- equilibria -------------------------------------------------------------


def cubic_roots(c2: float, c1: float, c0: float) -> np.ndarray:
    """Roots of x^3 + c2 x^2 + c1 x + c0.

    A real root is found by safeguarded Newton iteration, the remaining quadratic
    is deflated and solved in closed form.
    """
    # Cauchy bound brackets every real root
    R = 1 + max(abs(c2), abs(c1), abs(c0))
    f = lambda x: ((x + c2) * x + c1) * x + c0
    lo, hi = -R, R
    x = 0.0
    for _ in range(200):
        fx = f(x)
        if fx == 0:
            break
        if fx < 0:
            lo = x
        else:
            hi = x
        dfx = (3 * x + 2 * c2) * x + c1
        xn = x - fx / dfx if dfx != 0 else 0.5 * (lo + hi)
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 4e-16 * max(1.0, abs(x)):
            x = xn
            break
        x = xn
    r = x
    # deflate: x^3 + c2 x^2 + c1 x + c0 = (x - r)(x^2 + b x + c)
    b = c2 + r
    c = c1 + r * b
    disc = b * b - 4 * c
    if disc >= 0:
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        r2 = q
        r3 = c / q if q != 0 else 0.0
        roots = [r, r2, r3]
    else:
        re, im = -0.5 * b, 0.5 * math.sqrt(-disc)
        roots = [r, complex(re, im), complex(re, -im)]
    return np.array(sorted(roots, key=lambda z: (z.real, z.imag)), dtype=complex)


def eig3(M) -> np.ndarray:
    """Eigenvalues of a real 3x3 matrix via its characteristic polynomial."""
    M = np.asarray(M, dtype=float)
    tr = M[0, 0] + M[1, 1] + M[2, 2]
    minors = (
        M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
        + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    )
    det = float(np.linalg.det(M))
    return cubic_roots(-tr, minors, -det)


def jacobian_origin(p: ModelParams) -> np.ndarray:
    """Jacobian of the (u, X, Y) system at (0, 0, 0)."""
    D = p.d_b + p.d
    return np.array(
        [
            [-p.d_c, 0.0, 0.0],
            [0.0, p.d_c - D, 1.0],
            [p.kappa0, 0.0, -p.d_c - p.d_g],
        ]
    )


def jacobian_e1(p: ModelParams) -> np.ndarray:
    """Jacobian at E1 = (0, X1, 0), X1 = (d_c - D)/(D + a - d_c)."""
    D = p.d_b + p.d
    s = D + p.a - p.d_c
    return np.array(
        [
            [-D, 0.0, 0.0],
            [0.0, s * (D - p.d_c) / p.a, 1.0],
            [p.kappa0, 0.0, -D - p.d_g],
        ]
    )


def positive_equilibria_uxy(p: ModelParams):
    """(u, X, Y) coordinates of the constant states with u > 0, keyed by kind."""
    from .model import constant_states

    out = {}
    for s in constant_states(p):
        if s.u > 0:
            out[s.kind] = (s.u, s.v / s.u, s.u * s.w)
    return out


def jacobian_positive(p: ModelParams, sign: str) -> np.ndarray:
    """Closed-form Jacobian at (u, X, Y)_-/+ ; ``sign`` is 'minus' or 'plus'."""
    u = positive_equilibria_uxy(p)[sign][0]
    th = theta(p)
    root = math.sqrt(max(p.kappa0**2 - th, 0.0))
    r31 = -root if sign == "minus" else root
    D = p.d_b + p.d
    X = p.d_c / (p.a - p.d_c)
    gx = (p.a - p.d_c) ** 2 / p.a
    return np.array(
        [
            [0.0, gx * u, 0.0],
            [0.0, -D - gx * X, 1.0],
            [r31, gx * p.K + p.d * u * u, -p.d_g - u * u],
        ]
    )


@dataclass
class EquilibriumReport:
    name: str
    location: tuple
    coordinates: str
    eigenvalues: np.ndarray
    verdict: str
    notes: list = field(default_factory=list)


def verdict_from_eigenvalues(ev, band=1e-10) -> str:
    re = np.real(ev)
    if np.all(re < -band):
        return "stable"
    if np.any(re > band):
        return "unstable"
    return "marginal"


def classify_equilibria(p: ModelParams) -> list[EquilibriumReport]:
    """Stability of the kinetic equilibria in (u, X, Y) coordinates."""
    reps = []
    ev = eig3(jacobian_origin(p))
    reps.append(EquilibriumReport("origin", (0.0, 0.0, 0.0), "uXY", ev, verdict_from_eigenvalues(ev)))
    D = p.d_b + p.d
    if p.d_c > D and D + p.a - p.d_c > 0:
        X1 = (p.d_c - D) / (D + p.a - p.d_c)
        ev = eig3(jacobian_e1(p))
        reps.append(EquilibriumReport("E1", (0.0, X1, 0.0), "uXY", ev, verdict_from_eigenvalues(ev)))
    if p.a > p.d_c:
        th = theta(p)
        if p.kappa0**2 - th > DOUBLE_ROOT_RTOL * th:
            for kind in ("minus", "plus"):
                loc = positive_equilibria_uxy(p)[kind]
                ev = eig3(jacobian_positive(p, kind))
                reps.append(EquilibriumReport(kind, loc, "uXY", ev, verdict_from_eigenvalues(ev)))
    return reps


# --- asymptotic ratios ------------------------------------------------------


@dataclass
class RatioEstimate:
    """Observed limit of v/u and the branch predicted by the appendix theorems."""

    estimate: float
    tail_value: float
    converged: bool
    extinct: bool
    classification: str  # extinct | non-extinct
    branch: str
    predicted: float | None
    candidates: dict = field(default_factory=dict)
    matches: list = field(default_factory=list)


def ratio_branch(p: ModelParams, u0: float):
    """Theorem branch and predicted limit of v/u (None when no prediction)."""
    D = p.d_b + p.d
    a, dc = p.a, p.d_c
    cands = {}
    if a < dc:
        if dc < D:
            return "A.1: d_c < d_b+d, v/u -> 0", 0.0, cands
        if dc > D and a > dc - D:
            cands = {"theorem": dc * D / (D + a - dc), "E1": (dc - D) / (D + a - dc)}
            return "A.1: d_c > d_b+d, a > d_c-(d_b+d), finite limit", None, cands
        if dc > D and a < dc - D:
            return "A.1: d_c > d_b+d, a < d_c-(d_b+d), v/u -> inf", math.inf, cands
        return "unclassified", None, cands
    if a == dc:
        if a < D:
            return "A.2: a < d_b+d, v/u -> 0", 0.0, cands
        if a > D:
            return "A.2: a > d_b+d, finite limit", (a - D) / D, cands
        return "unclassified", None, cands
    th = theta(p)
    if p.kappa0**2 < th:
        if dc < D:
            return "A.3: d_c < d_b+d, v/u -> 0", 0.0, cands
        if dc > D:
            return "A.3: d_c > d_b+d, finite limit", (dc - D) / (D + a - dc), cands
        return "unclassified", None, cands
    u_plus = positive_equilibria_uxy(p).get("plus", positive_equilibria_uxy(p).get("double", (None,)))[0]
    if u_plus is not None and u0 < u_plus:
        if dc < D:
            return "A.4: u(0) < u_plus, extinction, v/u -> 0", 0.0, cands
        return "A.4: u(0) < u_plus, extinction", (dc - D) / (D + a - dc), cands
    return "unclassified", None, cands


def asymptotic_ratio(p: ModelParams, init: KineticState, t_end: float, rel_tol=1e-10, match_tol=1e-3):
    """Estimate lim v/u from the final 20% of the horizon and report the theorem branch."""
    if not (init.u > 0 and init.v > 0 and init.w > 0):
        raise DomainError("asymptotic_ratio needs a strictly positive initial state")
    traj = integrate_kinetics(p, init, t_end, rel_tol=rel_tol)
    t0 = init.t
    span = t_end - t0
    mask = (traj.t >= t0 + 0.8 * span) & (traj.u > 0) & (traj.v > 0)
    t, r = traj.t[mask], traj.v[mask] / traj.u[mask]
    logr = np.log(r)

    def gmean(sel):
        tt, lr = t[sel], logr[sel]
        if tt.size == 0:
            return math.nan  # u or v fell below the resolvable range
        if tt.size < 2:
            return float(np.exp(lr.mean()))
        return float(np.exp(np.trapezoid(lr, tt) / (tt[-1] - tt[0])))

    mid = t0 + 0.9 * span
    g1, g2 = gmean(t < mid), gmean(t >= mid)
    est = gmean(np.ones_like(t, dtype=bool))
    converged = bool(abs(g2 - g1) <= 1e-3 * abs(g2))
    fin = traj.final
    scale0 = max(1.0, init.u, init.v)
    extinct = max(fin.u, fin.v) <= 1e-6 * scale0 and abs(fin.w - p.kappa0 / p.d_g) <= 1e-3 * max(1.0, p.kappa0 / p.d_g)
    branch, pred, cands = ratio_branch(p, init.u)
    tail = float(fin.v / fin.u) if fin.u > 0 else math.inf
    matches = [name for name, val in cands.items() if abs(est - val) <= match_tol * max(abs(val), 1e-300)]
    return RatioEstimate(
        est, tail, bool(converged), bool(extinct), "extinct" if extinct else "non-extinct",
        branch, pred, cands, matches,
    )


# --- trapping region -------------------------------------------------------


@dataclass
class TrapCheck:
    holds: bool
    hypotheses_met: bool
    note: str = ""

    def __bool__(self):
        return self.holds


def trapping_region_check(p: ModelParams, trajectory: KineticTrajectory) -> TrapCheck:
    """Check X < d_c/(a-d_c) and Y < K along a trajectory when the lemma applies."""
    if p.a <= p.d_c:
        return TrapCheck(True, False, "hypotheses unmet: a <= d_c")
    Xb = p.d_c / (p.a - p.d_c)
    Yb = p.K
    X, Y = trajectory.transformed()
    if X[0] >= Xb or Y[0] >= Yb:
        return TrapCheck(True, False, "hypotheses unmet: initial X or Y outside the region")
    th = theta(p)
    if p.kappa0**2 >= th:
        u_plus = positive_equilibria_uxy(p)
        u_plus = (u_plus.get("plus") or u_plus.get("double"))[0]
        if trajectory.u[0] >= u_plus:
            return TrapCheck(True, False, "hypotheses unmet: u(0) >= u_plus")
    if np.any(trajectory.u <= 0):
        return TrapCheck(True, False, "hypotheses unmet: u reaches 0")
    ok = bool(np.all(X < Xb) and np.all(Y < Yb))
    return TrapCheck(ok, True, "" if ok else "trajectory left the region")
