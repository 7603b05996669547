"""Unstable point spectrum of the linearization around a stationary pattern.

An eigenvalue lambda in (0, lambda0) of the full operator corresponds to a
nontrivial Neumann solution of (1/gamma) eta'' + q(x, lambda) eta = 0 with

    q(x, lambda) = det(A(x) - lambda I) / det(A12 - lambda I),

i.e. to mu_n(q(., lambda)) = 1 for the weighted Sturm-Liouville problem
-(1/gamma) eta'' = mu q eta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, NearSingularError, PositivityError, ResolutionError
from .kinetics import eig3
from .model import ModelParams, a12_eigenvalues, get_state, linearization_matrix
from .sturm import tridiag_eigvals, tridiag_eigvec

DEFAULT_N = 2048


@dataclass(frozen=True)
class SLProblem:
    """-(1/gamma) eta'' = mu q eta on [0, 1], Neumann at both ends.

    ``q`` is sampled on a uniform grid; the number of intervals must be
    divisible by 4 so that the grids N/2, N and 2N can be taken by subsampling.
    """

    gamma: float
    q: np.ndarray

    @property
    def n_intervals(self) -> int:
        return self.q.size - 1


def _weights(n_pts):
    w = np.ones(n_pts)
    w[0] = w[-1] = 0.5
    return w


def _symmetric_form(gamma, q, shift_q=None):
    """Diagonal and off-diagonal of the symmetrized discrete operator.

    Weighted form (shift_q None): M^{-1/2} K M^{-1/2} with M = diag(w q).
    Schrodinger form: diag(w)^{-1/2} (K - diag(w q)) diag(w)^{-1/2}.
    """
    n = q.size
    h = 1.0 / (n - 1)
    c = 1.0 / (gamma * h * h)
    kd = np.full(n, 2.0 * c)
    kd[0] = kd[-1] = c
    ko = np.full(n - 1, -c)
    w = _weights(n)
    if shift_q is None:
        m = w * q
        s = 1.0 / np.sqrt(m)
        return kd * s * s, ko * s[:-1] * s[1:]
    s = 1.0 / np.sqrt(w)
    return (kd - w * q) * s * s, ko * s[:-1] * s[1:]


def _mu_on_grid(gamma, q, idx):
    d, e = _symmetric_form(gamma, q)
    return tridiag_eigvals(d, e, np.asarray(idx, dtype=np.int64))


def sl_eigenvalues(prob: SLProblem, n_max: int, tol=1e-6, check=True, discontinuous=False) -> np.ndarray:
    """mu_1 .. mu_{n_max}, Richardson-extrapolated from grids N and 2N.

    The extrapolation from (N/2, N) is compared with the one from (N, 2N);
    a relative shift above ``tol`` raises a resolution error (10 tol for
    discontinuous potentials, where the scheme is first order at jumps).
    """
    q = np.asarray(prob.q, dtype=float)
    M = q.size - 1
    if M % 4:
        raise DomainError("number of intervals must be divisible by 4")
    if n_max > M // 8:
        raise DomainError(f"n_max = {n_max} exceeds grid/8 = {M // 8}")
    if not np.all(q > 0):
        raise PositivityError(f"weight q not positive (min {q.min():.6g})")
    idx = np.arange(1, n_max + 1)
    fine = _mu_on_grid(prob.gamma, q, idx)
    mid = _mu_on_grid(prob.gamma, q[::2], idx)
    ext = (4 * fine - mid) / 3
    if check:
        coarse = _mu_on_grid(prob.gamma, q[::4], idx)
        ext2 = (4 * mid - coarse) / 3
        lim = (10 if discontinuous else 1) * tol
        shift = np.max(np.abs(ext - ext2) / np.abs(ext))
        if shift > lim:
            raise ResolutionError(f"Richardson extrapolation shifted by {shift:.3g} (limit {lim:g})")
    return ext


def sl_raw_eigenvalues(gamma, q, n_max) -> np.ndarray:
    """Unextrapolated mu_1..mu_{n_max} on the grid of ``q``."""
    return _mu_on_grid(gamma, np.asarray(q, float), np.arange(1, n_max + 1))


def sl_eigenfunctions(prob: SLProblem, indices):
    """Discrete eigenfunctions eta_n normalized by sum w q eta^2 h = 1."""
    q = np.asarray(prob.q, dtype=float)
    d, e = _symmetric_form(prob.gamma, q)
    lams = tridiag_eigvals(d, e, np.asarray(indices, dtype=np.int64))
    h = 1.0 / (q.size - 1)
    s = 1.0 / np.sqrt(_weights(q.size) * q)
    out = []
    for lam in lams:
        y = tridiag_eigvec(d, e, lam)
        eta = y * s / math.sqrt(h)
        if eta[0] < 0:
            eta = -eta
        out.append(eta)
    return lams, np.array(out)


def weighted_inner(q, f, g) -> float:
    h = 1.0 / (q.size - 1)
    return float(np.sum(_weights(q.size) * q * f * g) * h)


# --- the potential q(x, lambda) ---------------------------------------------


def _kinetic_block(p: ModelParams):
    A = linearization_matrix(p, 1.0)
    return A[0, 0], A[0, 1], A[1, 0], A[1, 1], A[2, 0], A[2, 1]


def det12(p: ModelParams, lam: float) -> float:
    """det(A12 - lam I) in factored form (lambda0 - lam)(lambda_neg - lam)."""
    l0, ln = a12_eigenvalues(p)
    return (l0 - lam) * (ln - lam)


def _check_lambda(p, lam):
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    l0, ln = a12_eigenvalues(p)
    a11, a12, a21, a22, _, _ = _kinetic_block(p)
    scale = max(1.0, abs(a11 * a22), abs(a12 * a21))
    if abs(det12(p, lam)) <= 1e-12 * scale:
        raise NearSingularError(f"lambda = {lam!r} is within round-off of an eigenvalue of A12")


def q_from_w(p: ModelParams, W, lam: float, null_mask=None) -> np.ndarray:
    """q(x, lam) for given W values; -d_g - lam where ``null_mask`` is set."""
    _check_lambda(p, lam)
    a11, a12, a21, a22, a31, a32 = _kinetic_block(p)
    W = np.asarray(W, dtype=float)
    K2 = p.K**2
    a23 = K2 / W**2
    a33 = -p.d_g - a23
    num = (a11 - lam) * ((a22 - lam) * (a33 - lam) - a23 * a32) - a12 * (a21 * (a33 - lam) - a23 * a31)
    q = num / det12(p, lam)
    if null_mask is not None:
        q = np.where(null_mask, -p.d_g - lam, q)
    return q


def q_expanded(p: ModelParams, W, lam: float) -> np.ndarray:
    """Expanded form a23 (a31 a12 - a32 (a11 - lam))/det12 + a33 - lam."""
    a11, a12, a21, a22, a31, a32 = _kinetic_block(p)
    a23 = p.K**2 / np.asarray(W, float) ** 2
    return a23 * (a31 * a12 - a32 * (a11 - lam)) / det12(p, lam) + (-p.d_g - a23) - lam


def q_potential(p: ModelParams, pat, lam: float, x=None) -> np.ndarray:
    """q(., lam) sampled at ``x`` (default: the pattern grid)."""
    if x is None:
        x = pat.grid
    x = np.asarray(x, dtype=float)
    W = pat.evaluate(x)
    mask = pat.in_null_set(x) if pat.null_set else None
    return q_from_w(p, W, lam, mask)


def lift_eigenvector(p: ModelParams, W, lam: float, eta):
    """Components (phi, psi) of the full eigenvector, or None if ill-conditioned."""
    a11, a12, *_ = _kinetic_block(p)
    if abs(a11 - lam) <= 1e-8:
        return None
    a23 = p.K**2 / np.asarray(W, float) ** 2
    dd = det12(p, lam)
    return a12 * a23 / dd * eta, -(a11 - lam) * a23 / dd * eta


# --- eigenvalue searches -----------------------------------------------------


@dataclass
class SpectrumEntry:
    n: int
    lam: float
    residual: float
    found: bool
    note: str = ""


@dataclass
class SpectrumReport:
    lambda0: float
    entries: list
    epsilon_window: tuple
    notes: list = field(default_factory=list)

    @property
    def found(self):
        return [e for e in self.entries if e.found]

    def lambdas(self):
        return {e.n: e.lam for e in self.entries if e.found}

    def to_csv(self, path):
        from .io import fmt, write_csv

        pre = [f"lambda0={fmt(self.lambda0)}", f"epsilon={fmt(self.lambda0 - self.epsilon_window[0])}"]
        rows = [(e.n, e.lam if e.found else float("nan"), e.residual if e.found else float("nan"), int(e.found))
                for e in self.entries]
        write_csv(path, ["n", "lambda_n", "residual", "found"], rows, preamble=pre)


def _ladder(l0, j_hi=20, j_lo=1):
    lams = [l0 * (1 - 2.0 ** (-j)) for j in range(j_hi, j_lo - 1, -1)]
    return lams + [0.0]


def null_fraction(pat, M: int) -> np.ndarray:
    """Fraction of each dual cell [x_i - h/2, x_i + h/2] of an M-interval grid inside the null set."""
    x = np.linspace(0.0, 1.0, M + 1)
    h = 1.0 / M
    lo, hi = np.clip(x - h / 2, 0, 1), np.clip(x + h / 2, 0, 1)
    f = np.zeros_like(x)
    for c, d in pat.null_set:
        f += np.clip(np.minimum(hi, d) - np.maximum(lo, c), 0.0, None)
    return f / (hi - lo)


class _Criterion:
    """g_n(lam) for a pattern sampled on the grids 2N, N and N/2.

    For weak patterns q is cell-averaged across the null-set boundaries, which
    keeps the scheme second order so that Richardson extrapolation still applies.
    """

    def __init__(self, p, pat, N):
        self.p, self.gamma = p, pat.gamma
        self.weighted = not pat.null_set
        self.levels = {}
        for s in (1, 2, 4):
            M = 2 * N // s
            x = np.linspace(0.0, 1.0, M + 1)
            W = pat.evaluate(x)
            f = null_fraction(pat, M) if pat.null_set else None
            self.levels[s] = (W, f)

    def q(self, lam, s=1):
        W, f = self.levels[s]
        q = q_from_w(self.p, W, lam)
        if f is not None:
            q = f * (-self.p.d_g - lam) + (1 - f) * q
        return q

    def _eig(self, lam, n, s):
        q = self.q(lam, s)
        if self.weighted:
            return _mu_on_grid(self.gamma, q, [n])[0]
        d, e = _symmetric_form(self.gamma, q, shift_q=True)
        return tridiag_eigvals(d, e, np.array([n], dtype=np.int64))[0]

    def __call__(self, lam, n):
        """mu_n - 1 (weighted form) or the n-th Schrodinger eigenvalue; None if q is not positive."""
        if self.weighted and not np.all(self.q(lam, 1) > 0):
            return None
        e = (4 * self._eig(lam, n, 1) - self._eig(lam, n, 2)) / 3
        return e - 1.0 if self.weighted else e

    def resolution_shift(self, lam, n):
        """Relative gap between the (N/2, N) and (N, 2N) extrapolations of index n."""
        vals = [self._eig(lam, n, s) for s in (1, 2, 4)]
        e1 = (4 * vals[0] - vals[1]) / 3
        e2 = (4 * vals[1] - vals[2]) / 3
        scale = abs(e1) if self.weighted else max(abs(e1), (n * math.pi) ** 2 / self.gamma)
        return abs(e1 - e2) / scale


def _solve_ladder(crit: _Criterion, n: int, l0: float, tol_g=1e-12):
    """Bracket and bisect g_n on (lam_lo, lambda0); returns (lam, residual, lowest lam tried, note)."""
    lams = _ladder(l0)
    # make sure the top of the ladder has g < 0
    j = 20
    g_top = crit(lams[0], n)
    while g_top is not None and g_top >= 0 and j < 36:
        j += 1
        lams.insert(0, l0 * (1 - 2.0 ** (-j)))
        g_top = crit(lams[0], n)
    if g_top is None:
        return None, None, lams[0], "q not positive near lambda0"
    if g_top >= 0:
        return None, None, lams[0], "eigenvalue within continuous-spectrum tolerance of lambda0"
    hi, g_hi = lams[0], g_top
    lo = None
    lowest = hi
    for lam in lams[1:]:
        g = crit(lam, n)
        if g is None:
            return None, None, lowest, "bracket truncated by q-positivity"
        lowest = lam
        if g >= 0:
            lo, g_lo = lam, g
            break
        hi, g_hi = lam, g
    if lo is None:
        return None, None, lowest, "no sign change on the ladder"
    # bisection: g(lo) >= 0 > g(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g = crit(mid, n)
        if g is None:
            return None, None, lowest, "q lost positivity inside bracket"
        if abs(g) <= tol_g:
            lo = hi = mid
            break
        if g >= 0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return lam, abs(crit(lam, n)), lowest, ""


def find_unstable_eigenvalues(p: ModelParams, pat, n_range, N=DEFAULT_N, N_max=4 * DEFAULT_N,
                              tol=1e-6) -> SpectrumReport:
    """Locate lambda_n in (0, lambda0) with mu_n(q(., lambda_n)) = 1 for each n.

    Each index is solved on grids N and 2N with Richardson extrapolation; when the
    extrapolation is not settled to ``tol`` the grid is doubled (up to ``N_max``)
    and the index is solved again.
    """
    l0, _ = a12_eigenvalues(p)
    if pat.k == 0 and pat.meta.get("kind") == "plus":
        return SpectrumReport(l0, [SpectrumEntry(n, math.nan, math.nan, False, "excluded: plus constant state")
                                   for n in n_range], (l0, l0), ["the plus constant state is excluded"])
    weighted = not pat.null_set
    lim = tol if weighted else 10 * tol
    notes = []
    if not weighted:
        notes.append("indefinite q on the null set: Schrodinger formulation used")
    crits = {}

    def crit_for(NN):
        if NN not in crits:
            crits[NN] = _Criterion(p, pat, NN)
        return crits[NN]

    entries, lowest = [], l0
    for n in n_range:
        NN = N
        while True:
            crit = crit_for(NN)
            lam, res, lo_used, note = _solve_ladder(crit, n, l0)
            lowest = min(lowest, lo_used)
            if lam is None or not 0 < lam < l0:
                entries.append(SpectrumEntry(n, math.nan, math.nan, False, note or "not found"))
                break
            shift = crit.resolution_shift(lam, n)
            if shift <= lim:
                entries.append(SpectrumEntry(n, lam, res, True, f"N={NN}"))
                break
            if 2 * NN > N_max:
                raise ResolutionError(f"n = {n}: Richardson shift {shift:.3g} > {lim:g} at N = {NN}")
            NN *= 2
    return SpectrumReport(l0, entries, (lowest, l0), notes)


def constant_q(p: ModelParams, lam: float) -> float:
    """q at the minus constant state."""
    st = get_state(p, "minus")
    return float(q_from_w(p, np.array([st.w]), lam)[0])


def constant_case_lambda(p: ModelParams, gamma: float, n: int) -> Optional[float]:
    """Root of q_const(lam) = n^2 pi^2 / gamma in (0, lambda0), or None."""
    if n < 1:
        return None
    l0, _ = a12_eigenvalues(p)
    target = (n * math.pi) ** 2 / gamma
    f = lambda lam: constant_q(p, lam) - target
    lams = [l0 * (1 - 2.0 ** (-j)) for j in range(36, 0, -1)] + [0.0]
    hi = lams[0]
    if f(hi) <= 0:
        return None
    lo = None
    for lam in lams[1:]:
        if f(lam) < 0:
            lo = lam
            break
        hi = lam
    if lo is None:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class SignSweep:
    applicable: bool
    negative: bool
    max_value: float
    note: str = ""


def char_poly_sign_sweep(M, lambda_max: float, n_points=1000) -> SignSweep:
    """Check det(M - lam I) < 0 on a uniform grid of [0, lambda_max] for stable M."""
    M = np.asarray(M, dtype=float)
    ev = eig3(M)
    if not np.all(ev.real < 0):
        return SignSweep(False, False, math.nan, "inapplicable: M has an eigenvalue with Re >= 0")
    lams = np.linspace(0.0, lambda_max, n_points)
    vals = np.array([np.linalg.det(M - lam * np.eye(3)) for lam in lams])
    mx = float(vals.max())
    return SignSweep(True, bool(mx < 0), mx)
