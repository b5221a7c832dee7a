from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import instances
from sepwp import geometry as geo
from sepwp.expr import parse
from sepwp.problem import (
    check_convex_third,
    check_diag_nonneg,
    check_hemicontinuity,
    check_minty,
    check_monotone,
    inequality_residuals,
    property_report,
    residual,
)

EX1 = instances.instance("ex1")
EX2 = instances.instance("ex2")
# z1 * x1 on C = [1, 2]: f(a,b) + f(b,a) = 2ab >= 2
NONMONO = instances.instance("ex1", C=[[1.0, 2.0]], Q=[[1.0, 2.0]], f_tilde="z1 * x1")


def test_residual_at_solution_ex1():
    r = residual(EX1, [0.0], [0.0], [0.0], 0.01)
    assert (r.r_f, r.r_g, r.r_link, r.r_C, r.r_Q) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_residual_below_solution_ex1():
    r = residual(EX1, [0.0], [-0.2], [-0.2], 0.01)
    # worst x = 0: -(z - 0) * 2
    assert r.r_f == pytest.approx(0.4, abs=1e-15)
    assert r.r_g == pytest.approx(0.2, abs=1e-15)
    assert r.r_link == 0.0 and r.r_C == 0.0 and r.r_Q == 0.0


def test_residual_ex2_solution_point():
    r = residual(EX2, [1.0], [1.0], [1.0], 0.01)
    # (x^2 - 1)^2 is minimized at the grid point nearest 1
    assert -1e-3 <= r.r_f <= 0.0
    assert -1e-3 <= r.r_g <= 0.0


def test_residual_rejects_parameter_outside_ball():
    with pytest.raises(ValueError, match="outside"):
        residual(EX1, [1.5], [0.0], [0.0], 0.01)
    residual(EX1, [1.0], [0.0], [0.0], 0.01)  # on the boundary


def test_instance_validation():
    with pytest.raises(ValueError, match="only use"):
        instances.instance("ex1", f_tilde="z1 - y1")
    with pytest.raises(ValueError, match="dimension"):
        instances.instance("ex1", g_tilde="w2 - y1")


@settings(max_examples=60, deadline=None)
@given(st.floats(-1, 0), st.floats(-1, 1))
def test_residual_feasible_pairs_have_zero_geometry(z, p):
    r = residual(EX1, [p], [z], [z], 0.05)
    assert r.r_link == 0.0 and r.r_C == 0.0 and r.r_Q == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.2, 2.2), st.floats(0.0, 2.0), st.sampled_from([0.4, 0.2, 0.1]))
def test_refining_inner_grid_never_decreases_residual(z, p, h):
    coarse = inequality_residuals(EX2, "f", [[p]], [[z]], geo.grid_sample(EX2.C, h))[0, 0]
    fine = inequality_residuals(EX2, "f", [[p]], [[z]], geo.grid_sample(EX2.C, h / 2))[0, 0]
    assert fine >= coarse


def test_monotone_examples():
    for seed in range(5):
        assert check_monotone(EX1.f_tilde, "f", EX1, 500, seed).passed
        assert check_monotone(EX1.g_tilde, "g", EX1, 500, seed).passed
    res = check_monotone(NONMONO.f_tilde, "f", NONMONO, 500, 0)
    assert not res.passed and res.worst >= 2.0
    zero = check_monotone(parse("0"), "f", EX1, 100, 0)
    assert zero.passed and zero.worst == 0.0


def test_monotone_ex2_identity():
    assert check_monotone(EX2.f_tilde, "f", EX2, 1000, 1).passed


def test_diag_examples():
    assert check_diag_nonneg(EX1.f_tilde, "f", EX1, 200, 0).passed
    assert check_diag_nonneg(EX2.f_tilde, "f", EX2, 200, 0).passed
    res = check_diag_nonneg(parse("-1"), "f", EX1, 50, 0)
    assert not res.passed and res.worst == -1.0


def test_convex_third_examples():
    res = check_convex_third(EX1.f_tilde, "f", EX1, 500, 0)
    assert res.passed and abs(res.worst) < 1e-12
    concave = check_convex_third(parse("-x1^2"), "f", EX1, 500, 0)
    a, b = concave.witness["a"][0], concave.witness["b"][0]
    assert not concave.passed
    assert concave.worst == pytest.approx((a - b) ** 2 / 4, rel=1e-9)
    assert check_convex_third(EX1.g_tilde, "g", EX1, 500, 0).passed


def test_hemicontinuity_examples():
    assert check_hemicontinuity(EX1.f_tilde, "f", EX1, 500, 0).passed
    assert check_hemicontinuity(EX2.f_tilde, "f", EX2, 500, 0).passed
    # zero at the corner z = -1 of C, jumps to 1 just inside it
    jump = parse("min2(1, max2(0, (z1 + 1) * 1e12))")
    res = check_hemicontinuity(jump, "f", EX1, 500, 0)
    assert not res.passed and res.worst > 0.5


def test_checkers_reproducible_from_seed():
    a = check_convex_third(EX2.f_tilde, "f", EX2, 300, 42)
    b = check_convex_third(EX2.f_tilde, "f", EX2, 300, 42)
    assert a == b


def test_minty_examples():
    res = check_minty(EX1, 0.01, 0.02)
    assert res.passed and res.mismatches == 0 and not res.informational
    assert res.primal.tolist() == res.dual.tolist() == [[0.0]]
    zero = instances.instance("ex1", f_tilde="0")
    res0 = check_minty(zero, 0.1, 0.0)
    assert res0.passed and res0.primal_count == 11 == res0.dual_count


def test_minty_warns_when_hypotheses_fail():
    with pytest.warns(UserWarning):
        res = check_minty(NONMONO, 0.1, 0.0)
    assert res.informational


def test_property_report_ex1_all_pass():
    rep = property_report(EX1, 500, 0)
    assert rep.all_passed
    assert rep.samples_used == 500 and rep.seed == 0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        property_report(EX1, 50, 3)


def test_property_report_ex2():
    rep = property_report(EX2, 500, 0)
    names = {c.name: c for c in rep.checks()}
    assert names["monotone_f"].passed and names["monotone_g"].passed
    # (x^2 - p)^2 is not convex in x on [-2, 2]
    assert not names["convex_in_3rd_f"].passed
