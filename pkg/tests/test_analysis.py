import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import brentq

from ricker_stage import Limits, ModelParams, Verdict, simulate
from ricker_stage.analysis import (
    Classification,
    UnsupportedAnalysis,
    allee_sensitivity,
    bisect,
    conditions,
    eigenvalues_at,
    first_order_points,
    fixed_points,
    h_eval,
    rho,
)


def brentq_roots(lam, a, b, s):
    """Independent root oracle on the log form of h(x) = 1 - s."""
    g = lambda x: (lam - 1) * math.log(x) + a - (b + 1) * x - math.log(1 - s)
    x_max = (lam - 1) / (b + 1)
    hi = x_max
    while g(hi) > 0:
        hi *= 2
    return brentq(g, 1e-300, x_max, xtol=1e-15), brentq(g, x_max, hi, xtol=1e-15)


def jacobian_eigs(lam, a, b, s, x, h=1e-6):
    """Central-difference Jacobian of the companion map, eigenvalues via numpy.roots."""
    F = lambda xc, xp: s * xc + xp**lam * math.exp(a - b * xc - xp)
    fx = (F(x + h, x) - F(x - h, x)) / (2 * h)
    fy = (F(x, x + h) - F(x, x - h)) / (2 * h)
    return sorted(np.roots([1.0, -fx, -fy]).real, reverse=True)


# (lam, b, s, excess of a over the fixed-point threshold)
two_fp_params = st.tuples(st.floats(1.2, 6.0), st.floats(0.0, 2.0), st.floats(0.0, 0.9), st.floats(0.01, 3.0))


def two_fp_draw(lam, b, s, excess):
    """Parameters with strict (fxp): a above the threshold by ``excess``."""
    a = math.log(1 - s) + (lam - 1) * (1 + math.log(b + 1) - math.log(lam - 1)) + excess
    return ModelParams.autonomous(lam, a, b=b, s=s)


# -- h ------------------------------------------------------------------------------

def test_h_direct_formula():
    assert h_eval(ModelParams.autonomous(2.0, 0.0), 1.0) == pytest.approx(math.exp(-1), rel=1e-15)


def test_h_at_x_max_exceeds_one(fig1):
    x_max = 2 / 1.0891
    assert h_eval(fig1, x_max) == pytest.approx(x_max**2 * math.exp(0.7936 - 2), rel=1e-14)
    assert h_eval(fig1, x_max) > 1


def test_h_decays_at_infinity(fig1):
    assert h_eval(fig1, 50.0) < 1e-15


def test_h_rejects_non_positive_x(fig1):
    with pytest.raises(ValueError):
        h_eval(fig1, 0.0)


def test_bisect_requires_a_sign_change():
    with pytest.raises(ValueError):
        bisect(lambda x: x * x + 1, -1.0, 1.0)
    assert bisect(lambda x: x - 0.3, 0.0, 1.0) == pytest.approx(0.3, abs=1e-12)


# -- fixed points ------------------------------------------------------------------

def test_tangent_case():
    rep = fixed_points(ModelParams.autonomous(2.0, 1.0))
    assert rep.count == 1 and rep.classification == Classification.TANGENT_FP
    assert rep.x_star == pytest.approx(1.0, abs=1e-12) and rep.x_max == 1.0


def test_two_fixed_points_at_figure_one_params(fig1):
    rep = fixed_points(fig1)
    lo, hi = brentq_roots(3.0, 0.7936, 0.0891, 0.0)
    assert rep.count == 2
    assert rep.x_star == pytest.approx(lo, abs=1e-11)
    assert rep.x_bar == pytest.approx(hi, abs=1e-11)
    assert rep.x_max == pytest.approx(2 / 1.0891, rel=1e-15)
    assert round(rep.x_star, 3) == 1.666 and round(rep.x_bar, 3) == 2.018
    assert rep.classification == Classification.REPELLING_NODE


def test_no_fixed_points_below_threshold():
    rep = fixed_points(ModelParams.autonomous(2.0, 0.5))
    assert rep.count == 0 and rep.classification == Classification.NO_POSITIVE_FP
    assert rep.x_star is None and rep.eig_plus is None


@pytest.mark.parametrize(
    "params",
    [ModelParams.autonomous(1.0, 1.0), ModelParams.autonomous(0.5, 0.0)],
)
def test_lambda_at_most_one_is_unsupported(params):
    with pytest.raises(UnsupportedAnalysis):
        fixed_points(params)
    with pytest.raises(UnsupportedAnalysis):
        conditions(params)


def test_non_normalized_or_periodic_params_are_rejected():
    with pytest.raises(ValueError):
        fixed_points(ModelParams.autonomous(3.0, 1.0, c=2.0))
    with pytest.raises(ValueError):
        fixed_points(ModelParams(lam=3.0, a_seq=(1.0, 0.5)))


def test_unstable_but_not_node_when_b_is_zero_and_s_positive():
    p = ModelParams.autonomous(3.0, 1.2, s=0.3)
    assert fixed_points(p).classification == Classification.UNSTABLE


def test_figure_one_eigenvalues_against_finite_difference_oracle(fig1):
    rep = fixed_points(fig1)
    ep, em = jacobian_eigs(3.0, 0.7936, 0.0891, 0.0, rep.x_star)
    assert rep.eig_plus == pytest.approx(ep, abs=1e-6)
    assert rep.eig_minus == pytest.approx(em, abs=1e-6)
    assert round(rep.eig_plus, 2) == 1.08 and round(rep.eig_minus, 2) == -1.23
    assert eigenvalues_at(fig1, rep.x_star) == pytest.approx((rep.eig_plus, rep.eig_minus), abs=1e-12)


def test_carrying_capacity_eigenvalues_reported(fig1):
    rep = fixed_points(fig1)
    ep, em = jacobian_eigs(3.0, 0.7936, 0.0891, 0.0, rep.x_bar)
    assert rep.eig_bar == pytest.approx((ep, em), abs=1e-6)


@given(t=two_fp_params)
def test_fixed_point_invariants(t):
    p = two_fp_draw(*t)
    rep = fixed_points(p)
    assert rep.count == 2
    s = p.s_seq[0]
    assert 0 < rep.x_star < rep.x_max < rep.x_bar
    for x in (rep.x_star, rep.x_bar):
        assert abs(h_eval(p, x) - (1 - s)) < 1e-10
    assert rep.discriminant > 0
    assert rep.eig_plus > 1
    if s == 0 and p.b > 0:
        assert rep.eig_minus < -1
        assert rep.classification == Classification.REPELLING_NODE
    lo, hi = brentq_roots(p.lam, p.a, p.b, s)
    assert rep.x_star == pytest.approx(lo, rel=1e-9)
    assert rep.x_bar == pytest.approx(hi, rel=1e-9)


@given(lam=st.floats(1.05, 8.0), b=st.floats(0.0, 3.0), s=st.floats(0.0, 0.9), a=st.floats(-5.0, 8.0))
def test_fxp_fails_iff_no_fixed_points(lam, b, s, a):
    p = ModelParams.autonomous(lam, a, b=b, s=s)
    assert (conditions(p).fxp_status == "fails") == (fixed_points(p).count == 0)


# -- first-order map ----------------------------------------------------------------

def test_first_order_tangent_case():
    fo = first_order_points(2.0, 1.0)
    assert fo.u_star == fo.u_bar == 1.0


def test_first_order_points_at_figure_one():
    fo = first_order_points(3.0, 0.7936)
    g = lambda u: 2 * math.log(u) + 0.7936 - u
    assert fo.u_star == pytest.approx(brentq(g, 1e-9, 2.0, xtol=1e-15), abs=1e-11)
    assert fo.u_bar == pytest.approx(brentq(g, 2.0, 10.0, xtol=1e-15), abs=1e-11)
    assert round(fo.u_star, 3) == 1.267 and round(fo.u_bar, 3) == 2.972
    assert fo.u_lower_star > 3.0
    assert abs(fo.f(fo.u_lower_star) - fo.u_star) < 1e-9
    assert fo.f_at_lambda == pytest.approx(27 * math.exp(0.7936 - 3), rel=1e-14)


def test_first_order_points_absent_without_fup():
    fo = first_order_points(2.0, 0.5)
    assert fo.u_star is fo.u_bar is fo.u_lower_star is None


@given(lam=st.floats(1.1, 8.0), excess=st.floats(1e-6, 3.0))
def test_first_order_invariants(lam, excess):
    a = (lam - 1) * (1 - math.log(lam - 1)) + excess
    fo = first_order_points(lam, a)
    assert fo.u_star < lam - 1 < fo.u_bar
    assert fo.u_lower_star > lam
    assert abs(fo.f(fo.u_lower_star) - fo.u_star) < 1e-10 * max(1.0, fo.u_star)
    if a <= lam - (lam - 1) * math.log(lam):
        assert fo.u_bar < fo.f_at_lambda * (1 + 1e-12)
        assert fo.f_at_lambda <= lam * (1 + 1e-12)


# -- conditions -----------------------------------------------------------------------

def test_rho_formula():
    assert rho(ModelParams.autonomous(3.0, 0.7936)) == pytest.approx(math.exp(-0.7936 / 2), rel=1e-15)
    assert round(rho(ModelParams.autonomous(3.0, 0.7936)), 4) == 0.6725


def test_rho_uses_sups_over_the_period():
    p = ModelParams(lam=2.0, s_seq=(0.1, 0.5), a_seq=(0.3, -1.0))
    assert rho(p) == pytest.approx(math.exp(-(0.3 - math.log(0.5))), rel=1e-15)


def test_figure_one_conditions(fig1):
    c = conditions(fig1)
    lam4_bound = (2 / 3) * math.exp(0.5) - 1
    lo1 = 2 * (1 - math.log(2)) + 2 * math.log(1.0891)
    hi1 = 3 - 2 * math.log(3)
    assert c.cond_lam4.holds
    assert c.cond_lam4.rhs == pytest.approx(lam4_bound, abs=1e-12)
    assert c.cond_lam4.margin == pytest.approx(0.0891 - lam4_bound, abs=1e-12)
    assert round(c.cond_lam4.rhs, 4) == 0.0991
    assert c.cond_fxp1.holds
    assert c.cond_fxp1.lower == pytest.approx(lo1, abs=1e-12)
    assert c.cond_fxp1.upper == pytest.approx(hi1, abs=1e-12)
    assert (round(c.cond_fxp1.lower, 4), round(c.cond_fxp1.upper, 4)) == (0.7844, 0.8028)
    assert c.cond_fxp1.margin_lower == pytest.approx(0.7936 - lo1, abs=1e-12)
    assert c.cond_fxp1.margin_upper == pytest.approx(hi1 - 0.7936, abs=1e-12)
    assert c.fxp_status == "strict" and c.cond_nac0.holds and c.cond_fup.holds
    assert not c.cond_b.holds and not c.cond_fxp0.holds


def test_figure_three_conditions():
    c = conditions(ModelParams.autonomous(2.0, 1.1, b=0.2))
    assert c.cond_fxp0.holds
    assert c.cond_fxp0.lower == pytest.approx(1.0, abs=1e-15)
    assert c.cond_fxp0.upper == pytest.approx(1 + math.log(1.2), abs=1e-15)
    assert round(c.cond_fxp0.upper, 4) == 1.1823
    assert c.fxp_status == "fails" and not c.cond_fxp1.holds


def test_fxp_equality_status():
    assert conditions(ModelParams.autonomous(2.0, 1.0)).fxp_status == "equality"


@given(lam=st.floats(1.01, 10.0))
def test_lam1_holds_for_every_lambda_above_one(lam):
    c = conditions(ModelParams.autonomous(lam, 0.0))
    assert c.lam1_lhs < c.lam1_rhs
    assert (lam - 1) * (1 - math.log(lam - 1)) < lam - (lam - 1) * math.log(lam)


@given(lam=st.floats(1.01, 10.0), b=st.floats(0.0, 3.0))
def test_lam4_iff_fxp1_interval_nonempty(lam, b):
    c = conditions(ModelParams.autonomous(lam, 0.0, b=b))
    assume(abs(c.cond_lam4.margin) > 1e-12)
    assert c.cond_lam4.holds == c.cond_fxp1.nonempty


def test_margins_are_lhs_minus_rhs(fig1):
    for cond in conditions(fig1).all_conditions():
        if hasattr(cond, "margin"):
            assert cond.margin == cond.lhs - cond.rhs


# -- Allee shift --------------------------------------------------------------------------

def test_allee_sensitivity_against_finite_differences(fig1):
    d = allee_sensitivity(fig1)
    h = 1e-5
    up = fixed_points(ModelParams.autonomous(3.0, 0.7936, b=0.0891 + h)).x_star
    dn = fixed_points(ModelParams.autonomous(3.0, 0.7936, b=0.0891 - h)).x_star
    assert d == pytest.approx((up - dn) / (2 * h), rel=1e-3)
    assert d == pytest.approx(15.0, abs=0.1)


def test_allee_sensitivity_requires_two_fixed_points():
    with pytest.raises(ValueError):
        allee_sensitivity(ModelParams.autonomous(2.0, 0.5))


def test_allee_point_increases_with_b():
    bs = np.linspace(0.0, 0.0891, 20)
    xs = [fixed_points(ModelParams.autonomous(3.0, 0.7936, b=float(b))).x_star for b in bs]
    assert all(x1 > x0 for x0, x1 in zip(xs, xs[1:]))
    assert all(allee_sensitivity(ModelParams.autonomous(3.0, 0.7936, b=float(b))) > 0 for b in bs)
    u = first_order_points(3.0, 0.7936).u_star
    assert xs[0] == pytest.approx(u, abs=1e-11)
    assert all(x > u for x in xs[1:])


def test_origin_attracts_nearby_orbits(fig1):
    rec = simulate(fig1, 1e-6, 1e-6, Limits(max_steps=100))
    assert rec.verdict == Verdict.EXTINCT

