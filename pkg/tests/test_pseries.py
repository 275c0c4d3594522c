from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrdiff.pseries import BiSeries, Series, SeriesError, ps_arith, ps_compose, ps_log_exp, ps_revert


def S(*c, order=None):
    return Series([F(v) for v in c], order=order, mode="exact")


def test_difference_of_squares():
    assert ps_arith(S(1, 1, order=2), S(1, -1, order=2), "mul").coeffs == (1, 0, -1)


def test_geometric_series():
    assert ps_arith(S(1, order=3), S(1, -1, order=3), "div").coeffs == (1, 1, 1, 1)


def test_reciprocal_times_input_is_one():
    # 1/(1-t)^2 expanded: 1 + 2t + 3t^2
    a = S(1, 2, 3)
    inv = a.reciprocal()
    assert inv.coeffs == (1, -2, 1)
    assert (inv * a).coeffs == (1, 0, 0)


def test_division_by_zero_constant_term():
    with pytest.raises(SeriesError):
        ps_arith(S(1, 1), S(0, 1), "div")


def test_mixed_orders_truncate_and_record():
    r = S(1, 1, 1, 1) + S(1, 1)
    assert r.order == 1
    assert any("truncat" in d for d in r.diagnostics)


def test_log_and_exp():
    assert ps_log_exp(S(1, 1, order=3), "log").coeffs == (0, 1, F(-1, 2), F(1, 3))
    assert ps_log_exp(S(0, 1, order=3), "exp").coeffs == (1, 1, F(1, 2), F(1, 6))
    assert ps_log_exp(ps_log_exp(S(1, 1, 1), "log"), "exp").coeffs == (1, 1, 1)


def test_log_exp_preconditions():
    with pytest.raises(SeriesError):
        S(2, 1).log()
    with pytest.raises(SeriesError):
        S(1, 1).exp()


def test_compose_examples():
    assert ps_compose(S(0, 0, 1, 0, 0), S(0, 1, 1, 0, 0)).coeffs == (0, 0, 1, 2, 1)
    outer = S(1, 1, order=3).log()
    inner = S(0, 1, order=3).exp() - 1
    assert ps_compose(outer, inner).coeffs == (0, 1, 0, 0)


def test_compose_needs_vanishing_inner():
    with pytest.raises(SeriesError):
        ps_compose(S(1, 1), S(1, 1))


def test_revert_examples():
    assert ps_revert(S(0, 2, F(2, 3), 0)).coeffs == (0, F(1, 2), F(-1, 12), F(1, 36))
    assert ps_revert(S(0, 1, 0, 0)).coeffs == (0, 1, 0, 0)
    assert ps_revert(S(0, 1, 0, 1)).coeffs == (0, 1, 0, -1)


def test_revert_needs_linear_term():
    with pytest.raises(SeriesError):
        ps_revert(S(0, 0, 1))


def test_modes_never_mix():
    with pytest.raises(SeriesError):
        Series([0.5, 1.0], mode="exact")
    with pytest.raises(SeriesError):
        ps_compose(S(0, 1), Series([0.0, 1.0]))


small = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@settings(max_examples=40, deadline=None)
@given(st.lists(small, min_size=5, max_size=5), st.lists(small, min_size=5, max_size=5),
       st.lists(small, min_size=5, max_size=5))
def test_ring_axioms_exact(a, b, c):
    A, B, C = (Series(x, mode="exact") for x in (a, b, c))
    assert ((A * B) * C).coeffs == (A * (B * C)).coeffs
    assert (A * (B + C)).coeffs == (A * B + A * C).coeffs
    assert (A * B).coeffs == (B * A).coeffs


@settings(max_examples=40, deadline=None)
@given(st.lists(small, min_size=5, max_size=5), small.filter(lambda v: v != 0))
def test_revert_composes_to_identity(tail, lin):
    a = Series([F(0), lin] + tail[:4], mode="exact")
    ident = (F(0), F(1)) + (F(0),) * (a.order - 1)
    assert ps_compose(a, ps_revert(a)).coeffs == ident
    assert ps_compose(ps_revert(a), a).coeffs == ident


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=8, max_size=8))
def test_log_exp_round_trip_float(c):
    a = Series([1.0] + c)
    back = a.log().exp()
    assert max(abs(x - y) for x, y in zip(back.coeffs, a.coeffs)) <= 1e-12


def test_biseries_substitute_and_partial():
    R = BiSeries([[F(0), F(1), F(0)], [F(0), F(1), F(0)], [F(0), F(0), F(0)]])
    d = Series.variable(2, label="d", mode="exact")
    # theta = d/2, b = d: R = b + theta b -> d + d^2/2
    out = R.substitute(d * F(1, 2), d)
    assert out.coeffs == (0, 1, F(1, 2))
    assert R.partial_b()[1, 0] == 1
    with pytest.raises(SeriesError):
        R.substitute(d + 1, d)
