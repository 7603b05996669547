"""Model parameters, reaction terms, constant steady states and the DDI certificate.

The reaction–diffusion system is

    u_t = (a v/(u+v) - d_c) u
    v_t = -d_b v + u^2 w - d v
    w_t = (1/gamma) w_xx - d_g w - u^2 w + d v + kappa0

on (0, 1) with homogeneous Neumann conditions for w.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import DomainError, ParameterError, SingularityError, StateNotFoundError

PARAM_KEYS = ("a", "d_c", "d_b", "d", "d_g", "kappa0", "gamma")

# Relative tolerance for deciding kappa0^2 == Theta (double root).
DOUBLE_ROOT_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Seven rate constants of one model instance.

    Parameters
    ----------
    a : float
        Proliferation gain.
    d_c, d_b, d_g : float
        Degradation rates of cells, bound factor and free factor.
    d : float
        Dissociation rate.
    kappa0 : float
        Constant production of free factor, may be zero.
    gamma : float
        Scaled inverse diffusion coefficient.
    """

    a: float = 3.0
    d_c: float = 1.0
    d_b: float = 1.0
    d: float = 1.0
    d_g: float = 1.0
    kappa0: float = 2.0
    gamma: float = 20.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            try:
                val = float(val)
            except (TypeError, ValueError):
                raise ParameterError(f"parameter {f.name} is not a number: {val!r}") from None
            if not math.isfinite(val):
                raise ParameterError(f"parameter {f.name} must be finite, got {val}")
            if f.name == "kappa0":
                if val < 0:
                    raise ParameterError(f"kappa0 must be >= 0, got {val}")
            elif val <= 0:
                raise ParameterError(f"parameter {f.name} must be > 0, got {val}")
            object.__setattr__(self, f.name, val)

    def replace(self, **changes) -> "ModelParams":
        """Copy with some fields changed (re-validated)."""
        d = asdict(self)
        d.update(changes)
        return ModelParams(**d)

    @property
    def K(self) -> float:
        """Constant d_c (d_b + d)/(a - d_c) appearing in the linearization."""
        if self.a == self.d_c:
            raise DomainError("K undefined for a == d_c")
        return self.d_c * (self.d_b + self.d) / (self.a - self.d_c)

    @property
    def c_h(self) -> float:
        """Coefficient of -1/w in h(w)."""
        if self.a == self.d_c:
            raise DomainError("c_h undefined for a == d_c")
        return self.d_b * self.d_c**2 * (self.d_b + self.d) / (self.a - self.d_c) ** 2

    def to_text(self) -> str:
        return "".join(f"{k}={format(getattr(self, k), '.17g')}\n" for k in PARAM_KEYS)

    @classmethod
    def from_text(cls, text: str) -> "ModelParams":
        """Parse flat ``key=value`` text; ``#`` starts a comment."""
        vals: dict[str, float] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"line {lineno}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in PARAM_KEYS:
                raise ParameterError(f"line {lineno}: unknown key {key!r}")
            if key in vals:
                raise ParameterError(f"line {lineno}: duplicate key {key!r}")
            try:
                vals[key] = float(value)
            except ValueError:
                raise ParameterError(f"line {lineno}: bad value for {key}: {value!r}") from None
        missing = [k for k in PARAM_KEYS if k not in vals]
        if missing:
            raise ParameterError(f"missing keys: {', '.join(missing)}")
        return cls(**vals)


@dataclass(frozen=True)
class SteadyState:
    kind: str  # trivial | minus | plus | double
    u: float
    v: float
    w: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w])


@dataclass
class DDIReport:
    """Diffusion-driven instability certificate at the minus state."""

    jacobian: np.ndarray
    cond1: float
    cond2: float
    cond3: float
    cond4: float
    ddi: bool
    assumptions_met: bool
    notes: list = field(default_factory=list)


def _check_finite(*arrs):
    for x in arrs:
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite input to reaction terms")


def reaction_rhs(p: ModelParams, u, v, w):
    """Reaction terms (f1, f2, f3); works on scalars or arrays.

    f1 is completed by 0 at u = v = 0.
    """
    u, v, w = (np.asarray(x, dtype=float) for x in (u, v, w))
    _check_finite(u, v, w)
    if np.any(u < 0) or np.any(v < 0):
        raise DomainError("reaction_rhs needs u, v >= 0")
    s = u + v
    ratio = np.divide(v, s, out=np.zeros_like(s), where=s > 0)
    f1 = (p.a * ratio - p.d_c) * u
    uuw = u * u * w
    f2 = -p.d_b * v + uuw - p.d * v
    f3 = -p.d_g * w - uuw + p.d * v + p.kappa0
    if f1.ndim == 0:
        return float(f1), float(f2), float(f3)
    return f1, f2, f3


def reaction_jacobian(p: ModelParams, u: float, v: float, w: float) -> np.ndarray:
    """Jacobian DF(u, v, w) of the reaction terms."""
    _check_finite(u, v, w)
    if u == 0 and v == 0:
        raise SingularityError("reaction Jacobian is undefined at u = v = 0")
    s2 = (u + v) ** 2
    return np.array(
        [
            [p.a * v * v / s2 - p.d_c, p.a * u * u / s2, 0.0],
            [2 * u * w, -p.d_b - p.d, u * u],
            [-2 * u * w, p.d, -p.d_g - u * u],
        ]
    )


def theta(p: ModelParams) -> float:
    """Threshold Theta; positive constant states need kappa0^2 > Theta."""
    if p.a == p.d_c:
        raise DomainError("Theta is undefined for a == d_c")
    return 4 * p.d_g * p.d_b * p.d_c**2 * (p.d_b + p.d) / (p.a - p.d_c) ** 2


def _lift(p: ModelParams, w: float) -> tuple[float, float]:
    v = p.d_c**2 * (p.d_b + p.d) / ((p.a - p.d_c) ** 2 * w)
    return (p.a - p.d_c) / p.d_c * v, v


def constant_states(p: ModelParams) -> list[SteadyState]:
    """All nonnegative spatially constant steady states."""
    states = [SteadyState("trivial", 0.0, 0.0, p.kappa0 / p.d_g)]
    if p.a <= p.d_c:
        return states
    th = theta(p)
    disc = p.kappa0**2 - th
    if abs(disc) <= DOUBLE_ROOT_RTOL * th:
        w = p.kappa0 / (2 * p.d_g)
        states.append(SteadyState("double", *_lift(p, w), w))
    elif disc > 0:
        # larger root directly, smaller one through the product c_h/d_g (no cancellation)
        w_plus = (p.kappa0 + math.sqrt(disc)) / (2 * p.d_g)
        w_minus = p.c_h / (p.d_g * w_plus)
        states.append(SteadyState("minus", *_lift(p, w_minus), w_minus))
        states.append(SteadyState("plus", *_lift(p, w_plus), w_plus))
    return states


def get_state(p: ModelParams, kind: str) -> SteadyState:
    for s in constant_states(p):
        if s.kind == kind:
            return s
    raise StateNotFoundError(f"no {kind} constant state for {p}")


def relative_residual(p: ModelParams, s: SteadyState) -> float:
    """max_i |f_i| divided by the sum of magnitudes of the terms of f_i."""
    u, v, w = s.u, s.v, s.w
    f = reaction_rhs(p, u, v, w)
    ratio = v / (u + v) if u + v > 0 else 0.0
    scales = (
        abs(p.a * ratio * u) + abs(p.d_c * u),
        abs(p.d_b * v) + abs(u * u * w) + abs(p.d * v),
        abs(p.d_g * w) + abs(u * u * w) + abs(p.d * v) + abs(p.kappa0),
    )
    return max(abs(fi) / sc if sc > 0 else abs(fi) for fi, sc in zip(f, scales))


def linearization_matrix(p: ModelParams, w_value: float) -> np.ndarray:
    """Matrix A(x) of the linearization around a pattern with W(x) = w_value."""
    if p.a <= p.d_c:
        raise DomainError("linearization matrix needs a > d_c")
    if not w_value > 0:
        raise DomainError(f"w must be positive, got {w_value}")
    K = p.K
    r = K * K / (w_value * w_value)
    return np.array(
        [
            [p.d_c * (p.d_c / p.a - 1), (p.a - p.d_c) ** 2 / p.a, 0.0],
            [2 * K, -p.d_b - p.d, r],
            [-2 * K, p.d, -p.d_g - r],
        ]
    )


def a12_block(p: ModelParams) -> np.ndarray:
    return linearization_matrix(p, 1.0)[:2, :2]


def a12_eigenvalues(p: ModelParams) -> tuple[float, float]:
    """Eigenvalues (lambda0 > 0, lambda_neg < 0) of the upper-left 2x2 block."""
    if p.a <= p.d_c:
        raise DomainError("a12_eigenvalues needs a > d_c")
    y = p.d_c * (p.a - p.d_c) / p.a
    D = p.d_b + p.d
    root = math.sqrt((y + D) ** 2 + 4 * y * D)
    lam0 = 2 * y * D / ((y + D) + root)  # rationalized (-(y+D) + root)/2
    lam_neg = -0.5 * ((y + D) + root)
    return lam0, lam_neg


def ddi_check(p: ModelParams) -> DDIReport:
    """Evaluate the four DDI expressions at the minus constant state."""
    if p.a <= p.d_c:
        raise StateNotFoundError("minus state requires a > d_c")
    st = get_state(p, "minus")
    A = linearization_matrix(p, st.w)
    tr = np.trace(A)
    det = np.linalg.det(A)
    minors = [
        A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0],
        A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0],
        A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1],
    ]
    c1 = -tr
    c2 = -tr * sum(minors) + det
    c3 = -det
    c4 = -minors[0]
    assumptions = bool(np.all(np.diag(A) < 0) and A[0, 1] * A[1, 0] > 0)
    notes = [] if assumptions else ["a_ii < 0 and a12*a21 > 0 not all satisfied"]
    ok = c1 > 0 and c2 > 0 and c3 > 0 and c4 > 0
    return DDIReport(A, float(c1), float(c2), float(c3), float(c4), bool(ok), assumptions, notes)
