import math

import numpy as np
import pytest

from ddilab.errors import DomainError, NearSingularError, PositivityError, ResolutionError
from ddilab.model import ModelParams, a12_eigenvalues, get_state, linearization_matrix
from ddilab.pattern import constant_pattern
from ddilab.spectral import (SLProblem, char_poly_sign_sweep, constant_case_lambda, constant_q,
                             det12, find_unstable_eigenvalues, lift_eigenvector, q_expanded,
                             q_from_w, sl_eigenfunctions, sl_eigenvalues, sl_raw_eigenvalues,
                             weighted_inner)


def test_sl_constant_oracle():
    prob = SLProblem(4.0, np.full(1025, 2.0))
    mu = sl_eigenvalues(prob, 10)
    n = np.arange(1, 11)
    assert np.allclose(mu, n**2 * math.pi**2 / 8, rtol=1e-6, atol=0)


def test_sl_variable_against_fine_grid():
    x = np.linspace(0, 1, 2049)
    q = 1.5 + np.cos(2 * np.pi * x) ** 2
    mu = sl_eigenvalues(SLProblem(3.0, q), 5)
    xf = np.linspace(0, 1, 16385)
    ref = sl_raw_eigenvalues(3.0, 1.5 + np.cos(2 * np.pi * xf) ** 2, 5)
    assert np.allclose(mu, ref, rtol=1e-7)


def test_sl_comparison_monotonicity(rng):
    x = np.linspace(0, 1, 513)
    for _ in range(20):
        c = rng.uniform(0.2, 2.0, 4)
        q1 = c[0] + c[1] * np.cos(np.pi * x * rng.integers(1, 6)) ** 2
        q2 = q1 + c[2] * (1 + np.sin(np.pi * x * rng.integers(1, 6)) ** 2) * c[3]
        m1 = sl_raw_eigenvalues(2.0, q1, 12)
        m2 = sl_raw_eigenvalues(2.0, q2, 12)
        assert np.all(m1 >= m2)


def test_sl_errors():
    with pytest.raises(PositivityError):
        sl_eigenvalues(SLProblem(1.0, np.full(129, -1.0)), 2)
    with pytest.raises(DomainError):
        sl_eigenvalues(SLProblem(1.0, np.full(130, 1.0)), 2)
    with pytest.raises(DomainError):
        sl_eigenvalues(SLProblem(1.0, np.full(129, 1.0)), 20)
    x = np.linspace(0, 1, 129)
    with pytest.raises(ResolutionError):
        sl_eigenvalues(SLProblem(1.0, 1 + 1e3 * np.cos(40 * np.pi * x) ** 2), 16)


def test_eigenfunctions_orthonormal():
    x = np.linspace(0, 1, 1025)
    q = 1 + x**2
    prob = SLProblem(2.0, q)
    mus, etas = sl_eigenfunctions(prob, [1, 2, 3])
    G = np.array([[weighted_inner(q, a, b) for b in etas] for a in etas])
    assert np.allclose(G, np.eye(3), atol=1e-8)
    assert np.all(np.diff(mus) > 0)


def test_q_forms_agree(p_star):
    W = np.linspace(0.1, 1.5, 40)
    for lam in (0.05, 0.2, 0.4):
        assert np.allclose(q_from_w(p_star, W, lam), q_expanded(p_star, W, lam), rtol=1e-10)
    l0, _ = a12_eigenvalues(p_star)
    with pytest.raises(NearSingularError):
        q_from_w(p_star, W, l0)
    with pytest.raises(DomainError):
        q_from_w(p_star, W, -0.1)


def test_q_equals_characteristic_ratio(p_star):
    """q = det(A(x) - lam I) / det(A12 - lam I) with A(x) the linearization at W(x)."""
    for w in (0.2, 0.6, 1.1):
        for lam in (0.1, 0.3):
            A = linearization_matrix(p_star, w)
            ratio = np.linalg.det(A - lam * np.eye(3)) / det12(p_star, lam)
            assert q_from_w(p_star, np.array([w]), lam)[0] == pytest.approx(ratio, rel=1e-10)


def test_constant_ladder_matches_search(minus_pattern_g10):
    p, pat = minus_pattern_g10
    rep = find_unstable_eigenvalues(p, pat, range(3, 13))
    lam = rep.lambdas()
    ref = [constant_case_lambda(p, 10.0, n) for n in range(3, 13)]
    assert sorted(lam) == list(range(3, 13))
    for n, r in zip(range(3, 13), ref):
        assert abs(lam[n] - r) <= 1e-8
    l0, _ = a12_eigenvalues(p)
    assert all(0 < v < l0 for v in ref) and np.all(np.diff(ref) > 0)


def test_constant_low_modes_not_unstable(minus_pattern_g10):
    p, _ = minus_pattern_g10
    assert constant_case_lambda(p, 10.0, 1) is None
    assert constant_case_lambda(p, 10.0, 2) is None
    # lambda_n solves q_const(lambda) = n^2 pi^2/gamma.
    lam = constant_case_lambda(p, 10.0, 5)
    assert constant_q(p, lam) == pytest.approx(25 * math.pi**2 / 10, rel=1e-9)


def test_plus_state_excluded(p_star):
    rep = find_unstable_eigenvalues(p_star, constant_pattern(p_star, "plus"), [1, 2])
    assert not rep.found and "excluded" in rep.entries[0].note


def test_pattern_ladder_k2(p_star, patterns):
    rep = find_unstable_eigenvalues(p_star, patterns[2], range(7, 13))
    found = rep.found
    assert len(found) >= 5
    assert all(e.residual <= 1e-8 for e in found)
    gaps = [rep.lambda0 - e.lam for e in found]
    assert np.all(np.diff(gaps[-5:]) < 0)


def test_glued_pattern_spectrum(p_star, spec):
    from ddilab.pattern import build_discontinuous_pattern, outer_energy_for_junction

    E_out = outer_energy_for_junction(spec, 1.4, spec.w_minus)
    pat = build_discontinuous_pattern(p_star, f"outer {E_out!r}\ninner 1.4\nouter {E_out!r}\n")
    p = p_star.replace(gamma=pat.gamma)
    rep = find_unstable_eigenvalues(p, pat, [1, 2, 3])
    assert len(rep.found) == 3
    lam = [e.lam for e in rep.found]
    assert np.all(np.diff(lam) > 0) and lam[-1] < rep.lambda0


def test_lift_eigenvector(p_star):
    W = np.full(5, 0.5)
    eta = np.ones(5)
    phi, psi = lift_eigenvector(p_star, W, 0.2, eta)
    assert phi.shape == (5,) and np.all(np.isfinite(psi))
    a11 = linearization_matrix(p_star, 0.5)[0, 0]
    assert lift_eigenvector(p_star, W, a11, eta) is None if a11 >= 0 else True


def test_char_poly_sign(p_star):
    s = get_state(p_star, "minus")
    A = linearization_matrix(p_star, s.w)
    sweep = char_poly_sign_sweep(A, 5.0)
    assert sweep.applicable and sweep.negative
    bad = char_poly_sign_sweep(np.diag([1.0, -1.0, -1.0]), 1.0)
    assert not bad.applicable
