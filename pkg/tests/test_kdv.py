from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from givkdv.diffring import ZERO, dx, parse_poly, partial_u, u
from givkdv.kdv import (
    HierarchyContext,
    pairing_check,
    pairing_suite,
    root_check,
    sqrt_suite,
)

from conftest import pdos

# frozen output of scripts/derive_oracles.py (independent symbolic computation)
OMEGA_00 = "1/2*u[1,0]^2 + 1/12*h^2*u[1,2]"
OMEGA_02 = "1/6*u[1,0]^3 + 1/24*h^2*u[1,1]^2 + 1/12*h^2*u[1,0]*u[1,2] + 1/240*h^4*u[1,4]"
OMEGA_03 = (
    "1/24*u[1,0]^4 + 1/24*h^2*u[1,0]*u[1,1]^2 + 1/24*h^2*u[1,0]^2*u[1,2]"
    " + 1/160*h^4*u[1,2]^2 + 1/120*h^4*u[1,1]*u[1,3] + 1/240*h^4*u[1,0]*u[1,4] + 1/6720*h^6*u[1,6]"
)
FLOW_1 = "u[1,0]*u[1,1] + 1/12*h^2*u[1,3]"


@pytest.fixture(scope="module")
def ctx():
    return HierarchyContext(2)


def test_omega_values(ctx):
    assert ctx.omega(1, 0, 1, 0) == u(1)
    assert ctx.omega(1, 0, 1, 1) == parse_poly(OMEGA_00)
    assert ctx.omega(1, 0, 1, 2) == parse_poly(OMEGA_02)
    assert ctx.omega(1, 0, 1, 3) == parse_poly(OMEGA_03)


def test_flows(ctx):
    assert ctx.flow(1, 0) == u(1, 1)
    assert ctx.flow(1, 1) == parse_poly(FLOW_1)
    assert ctx.flow(2, 1) == parse_poly(FLOW_1.replace("u[1,", "u[2,"))


def test_copies_decouple(ctx):
    assert ctx.omega(1, 1, 2, 1) == ZERO
    assert ctx.omega(2, 0, 2, 1) == parse_poly(OMEGA_00.replace("u[1,", "u[2,"))


def test_index_checks(ctx):
    with pytest.raises(IndexError):
        ctx.omega(3, 0, 3, 0)
    with pytest.raises(ValueError):
        HierarchyContext(0)


@pytest.mark.parametrize("p,q", [(1, 2), (1, 3), (2, 3), (2, 2)])
def test_omega_symmetric(ctx, p, q):
    assert ctx.omega_raw(1, p, q) == ctx.omega_raw(1, q, p)


@pytest.mark.parametrize("p", range(1, 4))
def test_omega_u_derivative_lowers_index(ctx, p):
    assert partial_u(ctx.omega(1, 0, 1, p), 1, 0) == ctx.omega(1, 0, 1, p - 1)


@pytest.mark.parametrize("p,q", [(0, 1), (1, 1), (1, 2), (2, 2)])
def test_omega_x_derivative_is_flow(ctx, p, q):
    # dx Omega_{p;q} = dOmega_{p;0}/dq_q
    assert dx(ctx.omega(1, p, 1, q)) == ctx.dq(ctx.omega(1, p, 1, 0), 1, q)


def test_omega_table_shape():
    rows = HierarchyContext(2).omega_table(1)
    assert len(rows) == 16
    assert all(v == ZERO for a, _, b, _, v in rows if a != b)


@pytest.mark.parametrize("k,l", [(0, 1), (1, 2), (2, 1), (1, 3), (2, 2)])
def test_zero_curvature(ctx, k, l):
    assert ctx.verify_zs(k, l, 1).passed


def test_sqrt_suite_and_root():
    assert all(r.passed for r in sqrt_suite(6))
    r = root_check(12)
    assert r.passed, r.difference


def test_pairing_suite_seeds():
    for seed in (0, 1):
        assert all(r.passed for r in pairing_suite(10, seed))


@settings(max_examples=40, deadline=None)
@given(pdos(lo=-4, hi=4), pdos(lo=-4, hi=4))
def test_pairing_property(P, Q):
    r = pairing_check(P, Q, 8)
    assert r.passed, r.difference


def test_pairing_report_fails_on_bad_input():
    # a report built from different sides must flag itself
    from givkdv.report import make_report

    assert not make_report("x", u(1), ZERO).passed
