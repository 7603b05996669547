import math

import numpy as np
import pytest

from ddilab.errors import GluingInfeasibleError, PlanError
from ddilab.pattern import (build_discontinuous_pattern, junction_level, outer_energy_for_junction,
                            parse_plan, verify_pattern)

E_IN = 1.4


@pytest.fixture(scope="module")
def glued(p_star, spec):
    E_out = outer_energy_for_junction(spec, E_IN, spec.w_minus)
    plan = f"outer {E_out!r}\ninner {E_IN!r}\nouter {E_out!r}\n"
    return build_discontinuous_pattern(p_star, plan)


def test_glued_pattern_is_weak_solution(p_star, glued):
    r = verify_pattern(p_star, glued)
    assert not r.continuous
    assert r.junction_jump <= 1e-9
    assert r.weak_residual <= 1e-6
    assert r.boundary_derivative <= 1e-9


def test_null_set_structure(p_star, glued):
    assert len(glued.null_set) == 2
    (a0, b0), (a1, b1) = glued.null_set
    assert a0 == 0.0 and b1 == 1.0 and b0 < a1
    # Symmetric plan gives a symmetric null set.
    assert b0 == pytest.approx(1 - a1, abs=1e-12)
    x = np.linspace(0, 1, 2001)
    U, V, W = glued.fields(x, p_star)
    ns = glued.in_null_set(x)
    assert np.all(U[ns] == 0) and np.all(V[ns] == 0) and np.all(U[~ns] > 0)


def test_junction_level_identity(spec):
    E_out = outer_energy_for_junction(spec, E_IN, 0.3)
    Ws, z2 = junction_level(spec, E_IN, E_out)
    assert Ws == pytest.approx(0.3, rel=1e-13)
    assert z2 == pytest.approx(2 * (E_IN - spec.H(0.3)), rel=1e-12)


def test_infeasible_plan(p_star):
    with pytest.raises(GluingInfeasibleError):
        build_discontinuous_pattern(p_star, "outer 0.1\ninner 1.4\nouter 0.1\n")


@pytest.mark.parametrize("text", ["", "middle 1.0", "inner abc", "inner 1.4 skip", "outer 1 colour=red"])
def test_plan_parse_errors(text):
    with pytest.raises(PlanError):
        parse_plan(text)


def test_inner_energy_out_of_range(p_star):
    with pytest.raises(PlanError):
        build_discontinuous_pattern(p_star, "inner 2.0\n")


def test_plan_comments_and_options():
    segs = parse_plan("# glued\ninner 1.3 start=high\nouter 0.7 skip=1  # tail\n")
    assert [(s.kind, s.energy, s.skip, s.start) for s in segs] == [
        ("inner", 1.3, 0, "high"), ("outer", 0.7, 1, "low")]
