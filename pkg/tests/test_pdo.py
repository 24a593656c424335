from fractions import Fraction

import pytest
from hypothesis import given, settings

from givkdv.diffring import ZERO, DiffPoly, dx, u
from givkdv.pdo import (
    PDO,
    adjoint,
    commutator,
    gbinom,
    invert_monic,
    lax_op,
    lax_power,
    minus_part,
    pdo_mul,
    plus_part,
    res,
    sqrt_lax,
)
from givkdv.scalars import Scalar

from conftest import pdos

DEPTH = 5


def test_gbinom_negative():
    assert [gbinom(-1, l) for l in range(4)] == [1, -1, 1, -1]
    assert [gbinom(-2, l) for l in range(4)] == [1, -2, 3, -4]
    assert gbinom(3, 4) == 0


def test_d_times_function():
    # D u = u D + u'
    got = pdo_mul(PDO.D(1), PDO.scalar(u(1)))
    assert got == PDO({1: u(1), 0: u(1, 1)})


def test_inverse_d_times_function():
    got = pdo_mul(PDO.D(-1), PDO.scalar(u(1)), depth=4)
    assert got == PDO({-1: u(1), -2: -u(1, 1), -3: u(1, 2), -4: -u(1, 3)}, 4)


def test_infinite_product_refused():
    with pytest.raises(ValueError):
        pdo_mul(PDO.D(-1), PDO.scalar(u(1)))


@settings(max_examples=40, deadline=None)
@given(pdos(), pdos(), pdos())
def test_associative(A, B, C):
    lhs = pdo_mul(pdo_mul(A, B, DEPTH), C, DEPTH)
    rhs = pdo_mul(A, pdo_mul(B, C, DEPTH), DEPTH)
    assert lhs.agrees(rhs)


@settings(max_examples=40, deadline=None)
@given(pdos(), pdos())
def test_adjoint_reverses_products(A, B):
    lhs = adjoint(pdo_mul(A, B, DEPTH + 4), DEPTH)
    rhs = pdo_mul(adjoint(B, DEPTH + 4), adjoint(A, DEPTH + 4), DEPTH)
    assert lhs.agrees(rhs)


@settings(max_examples=40, deadline=None)
@given(pdos())
def test_adjoint_involution(A):
    assert adjoint(adjoint(A, DEPTH + 4), DEPTH).agrees(A.truncate(DEPTH) if A.floor is None else A)


def test_floor_is_certified():
    X = sqrt_lax(1, 4)
    with pytest.raises(ValueError):
        X.coeff(-5)
    with pytest.raises(ValueError):
        X.truncate(6)
    assert pdo_mul(X, X).floor == 3


def test_inverse_of_lax():
    L = lax_op(1)
    Li = invert_monic(L, 8)
    assert pdo_mul(L, Li, 6).agrees(PDO.scalar(1))
    assert pdo_mul(Li, L, 6).agrees(PDO.scalar(1))
    assert Li.coeff(-2) == DiffPoly.const(Scalar.h(-2))


@pytest.mark.parametrize("depth", [3, 6, 10])
def test_sqrt_squares_to_lax(depth):
    X = sqrt_lax(1, depth)
    sq = pdo_mul(X, X)
    assert sq.agrees(lax_op(1))
    assert sq.floor == depth - 1


def test_sqrt_low_coefficients():
    # matches the independent symbolic oracle in scripts/derive_oracles.py
    X = sqrt_lax(1, 5)
    h = Scalar.h
    assert X.coeff(0) == ZERO
    assert X.coeff(-1) == u(1).scale(h(-1))
    assert X.coeff(-2) == u(1, 1).scale(h(-1, Fraction(-1, 2)))
    assert X.coeff(-3) == u(1, 2).scale(h(-1, Fraction(1, 4))) - (u(1) ** 2).scale(h(-3, Fraction(1, 2)))


@pytest.mark.parametrize("s", [Fraction(3, 2), 2, Fraction(5, 2), Fraction(-1, 2), -1, Fraction(-3, 2)])
def test_powers_compose(s):
    A = lax_power(1, s, 6)
    B = lax_power(1, Fraction(1, 2), 8)
    C = lax_power(1, s + Fraction(1, 2), 4)
    assert pdo_mul(A, B, 4).agrees(C)


def test_powers_commute_with_lax():
    for s in (Fraction(1, 2), Fraction(3, 2), Fraction(-1, 2)):
        assert commutator(lax_power(1, s, 6), lax_op(1), 3).is_zero()


def test_residue_of_sqrt():
    assert res(sqrt_lax(1, 2)) == u(1).scale(Scalar.h(-1))


def test_split_needs_certified_plus_part():
    A = PDO({1: u(1), -1: u(1)}, floor=-1)
    with pytest.raises(ValueError):
        plus_part(A)
    with pytest.raises(ValueError):
        res(A)


def test_plus_minus_recombine():
    X = lax_power(1, Fraction(3, 2), 6)
    assert (plus_part(X) + minus_part(X)) == X


def test_lax_equation_is_kdv():
    # [(L^{3/2})_+, L] is multiplication by 3 h u u' + h^3 u'''/2 times 2
    P = plus_part(lax_power(1, Fraction(3, 2), 1))
    C = commutator(P, lax_op(1))
    assert set(C.coeffs) == {0}
    want = (u(1) * u(1, 1)).scale(Scalar.h(1, 6)) + u(1, 3).scale(Scalar.h(3, Fraction(1, 2)))
    assert C.coeff(0) == want
