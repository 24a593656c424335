from fractions import Fraction

import pytest
from hypothesis import given, settings

from givkdv.diffring import (
    ZERO,
    DiffPoly,
    dx,
    dx_n,
    euler_operator,
    format_poly,
    integrate_x,
    is_total_derivative,
    parse_poly,
    partial_u,
    qpoly,
    tpoly,
    u,
    xpoly,
)
from givkdv.kdv import HierarchyContext
from givkdv.scalars import Scalar

from conftest import jet_polys


def test_dx_basics():
    assert dx(u(1) * u(1)) == u(1) * u(1, 1) * 2
    assert dx(xpoly()) == DiffPoly.const(1)
    assert dx(qpoly(1, 0)) == ZERO
    assert dx_n(u(2, 1), 3) == u(2, 4)


def test_dx_of_T_needs_oracle():
    with pytest.raises(ValueError):
        dx(tpoly(1, 0))
    ctx = HierarchyContext(1)
    assert dx(tpoly(1, 0), ctx) == ctx.omega(1, 0, 1, 0).shift_h(-2)


def test_dq_of_q_and_jets():
    ctx = HierarchyContext(2)
    assert ctx.dq(qpoly(1, 2), 1, 2) == DiffPoly.const(1)
    assert ctx.dq(qpoly(1, 2), 2, 2) == ZERO
    assert ctx.dq(u(2), 1, 0) == ZERO
    # t_0 flow is translation in x
    assert ctx.dq(u(1, 3) * u(1), 1, 0) == dx(u(1, 3) * u(1))


def test_dq_of_T():
    ctx = HierarchyContext(1)
    assert ctx.dq(tpoly(1, 1), 1, 2) == ctx.omega(1, 1, 1, 2).shift_h(-2)


@settings(max_examples=60, deadline=None)
@given(jet_polys())
def test_integrate_inverts_dx(p):
    p = p - DiffPoly.const(p.coeff(()))
    q = dx(p)
    assert is_total_derivative(q)
    assert dx(integrate_x(q)) == q
    assert integrate_x(q) == p


@settings(max_examples=60, deadline=None)
@given(jet_polys())
def test_euler_kills_total_derivatives(p):
    assert euler_operator(dx(p), 1) == ZERO


def test_integrate_rejects_non_derivative():
    with pytest.raises(ValueError):
        integrate_x(u(1) * u(1))


def test_euler_example():
    # E(u u_1^2) = u_1^2 - 2 dx(u u_1)
    p = u(1) * u(1, 1) ** 2
    assert euler_operator(p, 1) == u(1, 1) ** 2 - dx(u(1) * u(1, 1)) * 2


def test_partial():
    p = u(1) ** 3 * u(1, 2)
    assert partial_u(p, 1, 0) == u(1) ** 2 * u(1, 2) * 3
    assert partial_u(p, 2, 0) == ZERO


@settings(max_examples=80, deadline=None)
@given(jet_polys(max_terms=4), jet_polys(alpha=2))
def test_text_round_trip(p, r):
    s = p + r.scale(Scalar.eps(1)) + qpoly(1, 0) * tpoly(2, 1) * Fraction(3, 4)
    assert parse_poly(format_poly(s)) == s


def test_format_example():
    p = u(1) * u(1) * Fraction(1, 2) + u(1, 2).scale(Scalar.h(2, Fraction(1, 12)))
    assert format_poly(p) == "1/2*u[1,0]^2 + 1/12*h^2*u[1,2]"


def test_eps_squared_vanishes():
    e = DiffPoly.const(Scalar.eps(1))
    assert (e * u(1)) * e == ZERO
