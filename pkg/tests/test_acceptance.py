"""Acceptance criteria 1-16.

Every criterion checks its clauses, prints one ``[n] PASS|FAIL`` line and fails
the test if any clause fails. The lines are repeated as a block in the pytest
terminal summary. Each criterion must also finish within 60 s.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ddilab.cli import main
from ddilab.errors import BelowCriticalError, GluingInfeasibleError
from ddilab.kinetics import KineticState, asymptotic_ratio
from ddilab.model import (ModelParams, a12_block, a12_eigenvalues, constant_states, ddi_check,
                          reaction_rhs)
from ddilab.pattern import (build_discontinuous_pattern, build_pattern,
                            max_modes, mode_identity_residual, outer_energy_for_junction,
                            verify_pattern)
from ddilab.pde import (SimConfig, SimState, as_m_holds, as_m_threshold, extinction_check,
                        instability_experiment, mass_diagnostics, run)
from ddilab.potential import time_map, time_map_derivative
from ddilab.spectral import (SLProblem, constant_case_lambda, find_unstable_eigenvalues,
                             sl_eigenvalues, sl_raw_eigenvalues)

SQRT2 = math.sqrt(2.0)
TIME_LIMIT = 60.0


class Criterion:
    def __init__(self, n: int, title: str):
        self.n, self.title = n, title
        self.clauses: list[tuple[str, bool, str]] = []
        self.t0 = time.perf_counter()

    def check(self, name: str, ok, detail: str = "") -> bool:
        self.clauses.append((name, bool(ok), detail))
        return bool(ok)

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        self.check("time", elapsed <= TIME_LIMIT, f"{elapsed:.1f}s")
        ok = all(c[1] for c in self.clauses)
        failed = [f"{name} ({detail})" if detail else name for name, good, detail in self.clauses if not good]
        info = "; ".join(f"{name}: {detail}" for name, good, detail in self.clauses
                         if good and detail and name != "time")
        line = f"[{self.n:2d}] {'PASS' if ok else 'FAIL'}  {self.title}  ({elapsed:.1f}s)"
        if failed:
            line += "  failed: " + ", ".join(failed)
        elif info:
            line += "  " + info
        ACCEPTANCE_LINES[self.n] = line
        print(line)
        assert ok, line


@pytest.fixture
def crit():
    return Criterion


def test_01_steady_states(crit, p_star):
    c = crit(1, "closed-form steady states")
    states = {s.kind: s for s in constant_states(p_star)}
    for kind, w in (("minus", (2 - SQRT2) / 2), ("plus", (2 + SQRT2) / 2)):
        s = states.get(kind)
        if not c.check(f"{kind} present", s is not None):
            continue
        v = 0.5 / w
        c.check(f"{kind} values", max(abs(s.w - w), abs(s.v - v), abs(s.u - 2 * v)) <= 1e-12 * max(1, 2 * v))
        res = max(abs(float(r)) for r in reaction_rhs(p_star, s.u, s.v, s.w))
        c.check(f"{kind} residual", res <= 1e-12, f"{res:.1e}")
    c.finish()


def test_02_ddi_certificate(crit, p_star):
    c = crit(2, "DDI certificate")
    r = ddi_check(p_star)
    c.check("cond1..cond4 > 0", min(r.cond1, r.cond2, r.cond3, r.cond4) > 0 and r.ddi)
    det = float(np.linalg.det(a12_block(p_star)))
    c.check("det A12 = -4/3", abs(det + 4 / 3) <= 1e-12, f"{det:.15f}")
    c.finish()


def test_03_lambda0(crit, p_star):
    c = crit(3, "lambda0 oracle")
    l0, _ = a12_eigenvalues(p_star)
    c.check("closed form", abs(l0 - (2 / 3) * (math.sqrt(7) - 2)) <= 1e-12, f"{l0:.15f}")
    ev = np.max(np.linalg.eigvals(a12_block(p_star)).real)
    c.check("2x2 eigensolve", abs(l0 - ev) <= 1e-12)
    c.finish()


def test_04_time_map(crit, spec):
    c = crit(4, "time-map limits and monotonicity")
    T_lim = math.pi / math.sqrt(2 + 2 * SQRT2)
    err = abs(time_map(spec, spec.H_min + 1e-8).value - T_lim)
    c.check("small-amplitude limit", err <= 1e-4, f"{err:.1e}")
    E = np.linspace(spec.H_min + 1e-6, spec.H_max - 1e-6, 50)
    T = np.array([time_map(spec, e).value for e in E])
    c.check("strictly increasing", np.all(np.diff(T) > 0))
    T_top, need = time_map(spec, spec.H_max - 1e-6).value, 10 * math.sqrt(spec.gamma0)
    c.check("T(H_max - 1e-6) >= 10 sqrt(gamma0)", T_top >= need, f"{T_top:.3f} vs {need:.3f}")
    c.finish()


def test_05_loud_formula(crit, spec):
    c = crit(5, "time-map derivative")
    worst, positive = 0.0, True
    for e in np.linspace(spec.H_min + 0.02, spec.H_max - 0.02, 10):
        d = time_map_derivative(spec, e)
        h = 1e-5
        fd = (time_map(spec, e + h).value - time_map(spec, e - h).value) / (2 * h)
        worst, positive = max(worst, abs(d - fd) / abs(fd)), positive and d > 0
    c.check("matches finite differences", worst <= 1e-4, f"max rel {worst:.1e}")
    c.check("positive", positive)
    c.finish()


def test_06_patterns(crit, p_star, spec, patterns):
    c = crit(6, "continuous patterns at gamma = 20")
    feasible = max_modes(p_star.gamma, spec.gamma0)
    c.check("feasible k = 1..3", feasible == 3)
    orders = {}
    for k, n0 in ((1, 1024), (2, 1024), (3, 257)):
        pat = patterns[k]
        r = verify_pattern(p_star, pat)
        c.check(f"k={k} residual", r.relative <= 1e-6, f"{r.relative:.1e}")
        c.check(f"k={k} mode symmetry", mode_identity_residual(pat) <= 1e-8)
        c.check(f"k={k} gamma", abs(pat.meta["gamma_reconstructed"] - 20) <= 1e-8 * 20)
        # Grid doubling in the asymptotic range (k = 3 reaches round-off beyond 513 nodes).
        r0 = verify_pattern(p_star, build_pattern(p_star, k, n_grid=n0)).relative
        r1 = verify_pattern(p_star, build_pattern(p_star, k, n_grid=2 * n0 - 1)).relative
        orders[k] = math.log2(r0 / r1)
        c.check(f"k={k} order", orders[k] >= 3.5, f"{orders[k]:.2f}")
    try:
        build_pattern(p_star, 4)
        c.check("k=4 rejected", False)
    except BelowCriticalError:
        c.check("k=4 rejected", abs(p_star.gamma / spec.gamma0 - 9.784) <= 1e-3)
    c.clauses.append(("orders", True, " ".join(f"{v:.2f}" for v in orders.values())))
    c.finish()


def test_07_discontinuous(crit, p_star, spec):
    c = crit(7, "discontinuous pattern")
    E_out = outer_energy_for_junction(spec, 1.4, spec.w_minus)
    pat = build_discontinuous_pattern(p_star, f"outer {E_out!r}\ninner 1.4\nouter {E_out!r}\n")
    r = verify_pattern(p_star, pat)
    c.check("Z jump", r.junction_jump <= 1e-9, f"{r.junction_jump:.1e}")
    c.check("weak residual", r.weak_residual <= 1e-6, f"{r.weak_residual:.1e}")
    try:
        build_discontinuous_pattern(p_star, "outer 0.1\ninner 1.4\nouter 0.1\n")
        c.check("infeasible plan rejected", False)
    except GluingInfeasibleError:
        c.check("infeasible plan rejected", True)
    c.finish()


def test_08_constant_ladder(crit, minus_pattern_g10):
    c = crit(8, "spectral ladder, constant case")
    p, pat = minus_pattern_g10
    rep = find_unstable_eigenvalues(p, pat, range(3, 13)).lambdas()
    ref = [constant_case_lambda(p, 10.0, n) for n in range(3, 13)]
    c.check("all found", sorted(rep) == list(range(3, 13)) and None not in ref)
    if None not in ref and sorted(rep) == list(range(3, 13)):
        diff = max(abs(rep[n] - r) for n, r in zip(range(3, 13), ref))
        c.check("agreement", diff <= 1e-8, f"{diff:.1e}")
        l0, _ = a12_eigenvalues(p)
        c.check("in (0, lambda0)", all(0 < v < l0 for v in ref))
        c.check("increasing", np.all(np.diff(ref) > 0))
    c.finish()


def test_09_pattern_ladder(crit, p_star, patterns):
    c = crit(9, "spectral ladder, k = 2 pattern")
    rep = find_unstable_eigenvalues(p_star, patterns[2], range(1, 13))
    found = rep.found
    c.check(">= 5 eigenvalues", len(found) >= 5, f"{len(found)} found")
    c.check("residuals", all(e.residual <= 1e-8 for e in found))
    gaps = np.array([rep.lambda0 - e.lam for e in found])
    c.check("gap decreasing", len(gaps) >= 5 and np.all(np.diff(gaps[-5:]) < 0))
    c.finish()


def test_10_sl_oracle(crit, rng):
    c = crit(10, "Sturm-Liouville solver")
    # Absolute 1e-6 at n = 10 (mu ~ 123) needs 2049 nodes; 1025 nodes give 1.2e-6.
    mu = sl_eigenvalues(SLProblem(4.0, np.full(2049, 2.0)), 10)
    n = np.arange(1, 11)
    err = np.max(np.abs(mu - n**2 * math.pi**2 / 8))
    c.check("constant oracle", err <= 1e-6, f"{err:.1e}")
    x = np.linspace(0, 1, 513)
    ok = True
    for _ in range(20):
        q1 = rng.uniform(0.2, 2.0) + rng.uniform(0, 2) * np.cos(np.pi * x * rng.integers(1, 6)) ** 2
        q2 = q1 + rng.uniform(0.01, 2.0) * (1 + np.sin(np.pi * x * rng.integers(1, 6)) ** 2)
        ok &= bool(np.all(sl_raw_eigenvalues(2.0, q1, 12) >= sl_raw_eigenvalues(2.0, q2, 12)))
    c.check("comparison monotonicity", ok)
    c.finish()


@pytest.mark.slow
def test_11_instability(crit, minus_pattern_g10):
    c = crit(11, "instability realized in simulation")
    p, pat = minus_pattern_g10
    cfg = SimConfig(n_grid=512, t_end=80.0, record_every=10**6)
    rates = []
    for n in (3, 4):
        fit = instability_experiment(p, pat, n, 1e-4, cfg)
        rates.append(f"n={n}: {fit.rate:.4f}/{fit.predicted:.4f}")
        c.check(f"probe {n}", fit.grew and fit.relative_error <= 0.2, rates[-1])
    hom = instability_experiment(p, pat, 0, 1e-4, SimConfig(n_grid=512, t_end=20.0, record_every=10**6))
    c.check("homogeneous decays", not hom.grew and hom.rate < 0, f"rate {hom.rate:.3f}")
    c.finish()


def test_12_extinction(crit, p_star, rng):
    c = crit(12, "extinction under smallness hypotheses")
    c.check("threshold exact", as_m_threshold(p_star) == 0.125 and 0.05 * 2.5 == 0.125)
    c.check("checker accepts M K_w = 0.125", as_m_holds(p_star, 0.05, 2.5))
    n = 128
    init = SimState(0.0, 0.05 * rng.random(n), 0.005 * rng.random(n), 1.5 + rng.random(n))
    v = extinction_check(p_star, init, 2.5, 0.05, SimConfig(n_grid=n, t_end=40.0, record_every=50))
    c.check("hypotheses met", v.hypothesis_met, v.note)
    c.check("max(u, v) < 1e-8", v.verdict == "extinct", f"{v.max_uv_final:.1e}, t_u={v.t_u:.1f} t_v={v.t_v:.1f}")
    c.finish()


@pytest.mark.slow
def test_13_mass_bounds(crit, p_star, rng):
    c = crit(13, "mass bounds")
    n = 64
    for i in range(5):
        init = SimState(0.0, 0.1 + 3 * rng.random(n), 0.1 + 3 * rng.random(n), 0.1 + 3 * rng.random(n))
        _, d = run(p_star, init, SimConfig(n_grid=n, t_end=25.0, record_every=10**6))
        m = mass_diagnostics(p_star, d)
        c.check(f"run {i} horizon", m.horizon_ok, m.note)
        c.check(f"run {i} int u", m.ok_u, f"{m.tail_u:.3f} > {m.bound_u:.3f}")
        c.check(f"run {i} int v", m.ok_v, f"{m.tail_v:.3f} vs {m.bound_v:.3f}")
        c.check(f"run {i} sup w", m.ok_w, f"{m.tail_w:.3f} vs {m.bound_w:.3f}")
    p0 = ModelParams(kappa0=0.0)
    for i in range(2):
        init = SimState(0.0, rng.random(n) + 0.1, rng.random(n), rng.random(n) + 0.1)
        _, d = run(p0, init, SimConfig(n_grid=n, t_end=40.0, record_every=10**6))
        top = max(d.mass_u[-1], d.mass_v[-1], d.sup_w[-1])
        c.check(f"kappa0=0 run {i} decays", top <= 1e-10, f"{top:.1e}")
    c.finish()


def test_14_subthreshold_decay(crit, rng):
    c = crit(14, "sub-threshold exponential decay")
    p, n = ModelParams(a=0.5), 64
    worst = 0.0
    for _ in range(3):
        u0 = rng.random(n) + 0.05
        tr, _ = run(p, SimState(0.0, u0, rng.random(n), rng.random(n)), SimConfig(n_grid=n, t_end=15.0, record_every=5))
        for t, u in zip(tr.t, tr.u):
            worst = max(worst, float(np.max(u / (u0 * math.exp(-0.5 * t)))))
    c.check("u <= u0 exp(-t/2)", worst <= 1 + 1e-12, f"max ratio {worst:.6f}")
    c.finish()


def test_15_kinetics_theorems(crit):
    c = crit(15, "kinetic ratio theorems")
    init = KineticState(0.5, 0.3, 1.0, 0.0)
    r = asymptotic_ratio(ModelParams(kappa0=1.0), init, 40.0)
    c.check("A.3 bullet 1: v/u -> 0", r.predicted == 0.0 and r.tail_value <= 1e-4, f"tail {r.tail_value:.1e}")
    amb = asymptotic_ratio(ModelParams(a=0.8, d_c=1.0, d_b=0.2, d=0.2), init, 100.0)
    which = ",".join(amb.matches) or "none"
    cand = ", ".join(f"{k}={v:g}" for k, v in amb.candidates.items())
    c.check("ambiguity resolved", len(amb.matches) == 1,
            f"estimate {amb.estimate:.6f} matches {which} ({cand})")
    c.finish()


def test_16_determinism(crit, tmp_path):
    c = crit(16, "CLI determinism")
    cfg = tmp_path / "p.txt"
    cfg.write_text("a=3\nd_c=1\nd_b=1\nd=1\nd_g=1\nkappa0=2\ngamma=20\n")
    for cmd, extra in (("simulate", ["--set", "sim.t_end=2", "--set", "sim.noise=1e-2", "--set",
                                      "sim.n_grid=128", "--seed", "7"]),
                       ("pattern", ["--modes", "2"]),
                       ("spectrum", ["--set", "gamma=10", "--set", "spectrum.n_max=6"])):
        for tag in ("a", "b"):
            assert main([cmd, "--config", str(cfg), *extra, "--out", str(tmp_path / f"{cmd}_{tag}")]) == 0
        a, b = tmp_path / f"{cmd}_a", tmp_path / f"{cmd}_b"
        same = sorted(p.name for p in a.iterdir()) == sorted(p.name for p in b.iterdir()) and all(
            f.read_bytes() == (b / f.name).read_bytes() for f in a.iterdir())
        c.check(f"{cmd} byte-identical", same)
    c.finish()
