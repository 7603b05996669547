import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddilab.errors import DomainError, ParameterError, SingularityError, StateNotFoundError
from ddilab.model import (ModelParams, a12_block, a12_eigenvalues, constant_states, ddi_check,
                          get_state, linearization_matrix, reaction_jacobian, reaction_rhs,
                          relative_residual, theta)

S2 = math.sqrt(2.0)


def test_reference_derived_constants(p_star):
    assert theta(p_star) == pytest.approx(2.0, rel=1e-15)
    assert p_star.c_h == pytest.approx(0.5, rel=1e-15)
    assert p_star.K == pytest.approx(1.0, rel=1e-15)


def test_constant_states_closed_form(p_star):
    states = {s.kind: s for s in constant_states(p_star)}
    assert set(states) == {"trivial", "minus", "plus"}
    assert states["trivial"].w == 2.0 and states["trivial"].u == 0.0
    for kind, sign in (("minus", -1), ("plus", 1)):
        s = states[kind]
        assert s.w == pytest.approx((2 + sign * S2) / 2, rel=1e-14)
        assert s.v == pytest.approx(0.5 / s.w, rel=1e-14)
        assert s.u == pytest.approx(2 * s.v, rel=1e-14)
        assert relative_residual(p_star, s) <= 1e-12


def test_minus_plus_product_relation(p_star):
    wm, wp = get_state(p_star, "minus").w, get_state(p_star, "plus").w
    assert wm * wp == pytest.approx(p_star.c_h / p_star.d_g, rel=1e-14)


def test_no_positive_states_below_theta():
    p = ModelParams(kappa0=1.0)
    assert [s.kind for s in constant_states(p)] == ["trivial"]
    with pytest.raises(StateNotFoundError):
        get_state(p, "minus")


def test_double_root_kind():
    p = ModelParams(kappa0=S2)
    kinds = [s.kind for s in constant_states(p)]
    assert kinds == ["trivial", "double"]
    s = get_state(p, "double")
    assert s.w == pytest.approx(S2 / 2, rel=1e-10)


def test_a_le_dc_only_trivial():
    assert [s.kind for s in constant_states(ModelParams(a=0.5))] == ["trivial"]


def test_reaction_rhs_completion_and_domain(p_star):
    f1, f2, f3 = reaction_rhs(p_star, 0.0, 0.0, 1.5)
    assert f1 == 0.0 and f2 == 0.0 and f3 == pytest.approx(-1.5 + 2.0)
    with pytest.raises(DomainError):
        reaction_rhs(p_star, -1e-3, 0.1, 1.0)
    with pytest.raises(DomainError):
        reaction_rhs(p_star, np.nan, 0.1, 1.0)
    u = np.array([0.1, 1.0, 2.0])
    f = reaction_rhs(p_star, u, u, u)
    assert all(np.shape(c) == (3,) for c in f)


def test_jacobian_matches_finite_differences(p_star):
    y = np.array([0.7, 0.4, 1.3])
    J = reaction_jacobian(p_star, *y)
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (np.array(reaction_rhs(p_star, *(y + e))) - np.array(reaction_rhs(p_star, *(y - e)))) / (2 * h)
        assert np.allclose(J[:, j], fd, atol=1e-8)
    with pytest.raises(SingularityError):
        reaction_jacobian(p_star, 0.0, 0.0, 1.0)


def test_ddi_certificate(p_star):
    r = ddi_check(p_star)
    assert r.ddi and r.assumptions_met
    assert min(r.cond1, r.cond2, r.cond3, r.cond4) > 0
    assert np.linalg.det(a12_block(p_star)) == pytest.approx(-4.0 / 3.0, abs=1e-12)
    with pytest.raises(StateNotFoundError):
        ddi_check(ModelParams(a=0.9))


def test_lambda0_oracle(p_star):
    l0, lneg = a12_eigenvalues(p_star)
    assert abs(l0 - (2.0 / 3.0) * (math.sqrt(7) - 2)) <= 1e-12
    ev = np.sort(np.linalg.eigvals(a12_block(p_star)).real)
    assert ev[1] == pytest.approx(l0, abs=1e-12)
    assert ev[0] == pytest.approx(lneg, abs=1e-12)


def test_linearization_is_jacobian_at_minus_state(p_star):
    s = get_state(p_star, "minus")
    assert np.allclose(linearization_matrix(p_star, s.w), reaction_jacobian(p_star, s.u, s.v, s.w), atol=1e-12)


def test_params_validation_and_text_roundtrip(p_star):
    with pytest.raises(ParameterError):
        ModelParams(gamma=-1)
    with pytest.raises(ParameterError):
        ModelParams(kappa0=-0.1)
    assert ModelParams(kappa0=0.0).kappa0 == 0.0
    assert ModelParams.from_text(p_star.to_text()) == p_star


@pytest.mark.parametrize("text, fragment", [
    ("a=3\na=4\n", "line 2: duplicate key 'a'"),
    ("a=3\nzeta=1\n", "line 2: unknown key"),
    ("a=3\nd_c\n", "line 2: expected key=value"),
    ("a=3\n", "missing keys"),
    ("a=x\n", "bad value"),
])
def test_from_text_errors(text, fragment):
    with pytest.raises(ParameterError, match=fragment):
        ModelParams.from_text(text)


params_strategy = st.builds(
    ModelParams,
    a=st.floats(1.2, 6.0), d_c=st.just(1.0), d_b=st.floats(0.2, 3.0), d=st.floats(0.2, 3.0),
    d_g=st.floats(0.2, 3.0), kappa0=st.floats(0.1, 8.0), gamma=st.just(20.0))


@settings(max_examples=60, deadline=None)
@given(params_strategy)
def test_property_states_are_equilibria(p):
    for s in constant_states(p):
        assert s.u >= 0 and s.v >= 0 and s.w > 0
        assert relative_residual(p, s) <= 1e-11


@settings(max_examples=60, deadline=None)
@given(params_strategy)
def test_property_lambda0_matches_eigensolver(p):
    l0, lneg = a12_eigenvalues(p)
    ev = np.sort(np.linalg.eigvals(a12_block(p)).real)
    assert l0 > 0 > lneg
    assert l0 == pytest.approx(ev[1], rel=1e-9, abs=1e-13)
