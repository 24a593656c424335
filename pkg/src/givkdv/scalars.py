"""Exact coefficients: rationals times Laurent monomials in h = sqrt(hbar), with a nilpotent eps."""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Union

Number = Union[int, Fraction]


@lru_cache(maxsize=None)
def double_factorial(n: int) -> int:
    if n < -1:
        raise ValueError(f"double factorial undefined for n={n}")
    if n <= 0:
        return 1
    return n * double_factorial(n - 2)


@lru_cache(maxsize=None)
def const_a(n: int) -> Fraction:
    """a_n = 1/(2n+1)!!"""
    if n < 0:
        raise ValueError(f"a_n needs n >= 0, got {n}")
    return Fraction(1, double_factorial(2 * n + 1))


@lru_cache(maxsize=None)
def const_b(n: int) -> Fraction:
    """b_n = (2n-1)!!, b_0 = 1"""
    if n < 0:
        raise ValueError(f"b_n needs n >= 0, got {n}")
    return Fraction(double_factorial(2 * n - 1))


@lru_cache(maxsize=None)
def const_d(ell: int) -> Fraction:
    if ell < 1:
        raise ValueError(f"d_l needs l >= 1, got {ell}")
    if ell % 2 == 0:
        return Fraction(0)
    return -const_a(ell - 1) / (2 * ell)


@lru_cache(maxsize=None)
def const_f(ell: int) -> Fraction:
    if ell < 1:
        raise ValueError(f"f_l needs l >= 1, got {ell}")
    if ell % 2 == 0:
        return Fraction(0)
    return -const_b(ell) / (2 * ell)


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class Scalar:
    """Sum of c * h^k * eps^e with e in {0, 1}; immutable, canonical (no zero entries)."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        clean = {}
        if terms:
            for (k, e), c in terms.items():
                if e not in (0, 1):
                    if e > 1:
                        continue
                    raise ValueError(f"negative eps power {e}")
                c = Fraction(c)
                if c:
                    clean[(int(k), e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def const(cls, c: Number) -> "Scalar":
        return cls({(0, 0): c})

    @classmethod
    def h(cls, k: int = 1, c: Number = 1) -> "Scalar":
        return cls({(k, 0): c})

    @classmethod
    def eps(cls, c: Number = 1, k: int = 0) -> "Scalar":
        return cls({(k, 1): c})

    @staticmethod
    def coerce(x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (int, Fraction)):
            return Scalar.const(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to Scalar")

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __add__(self, other) -> "Scalar":
        other = Scalar.coerce(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0) + c
        return Scalar(out)

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        return Scalar({key: -c for key, c in self.terms.items()})

    def __sub__(self, other) -> "Scalar":
        return self + (-Scalar.coerce(other))

    def __rsub__(self, other) -> "Scalar":
        return Scalar.coerce(other) - self

    def __mul__(self, other) -> "Scalar":
        other = Scalar.coerce(other)
        out: dict = {}
        for (k1, e1), c1 in self.terms.items():
            for (k2, e2), c2 in other.terms.items():
                e = e1 + e2
                if e > 1:
                    continue
                key = (k1 + k2, e)
                out[key] = out.get(key, 0) + c1 * c2
        return Scalar(out)

    __rmul__ = __mul__

    def is_unit(self) -> bool:
        if len(self.terms) != 1:
            return False
        ((_, e),) = self.terms
        return e == 0

    def inverse(self) -> "Scalar":
        if not self.is_unit():
            raise ZeroDivisionError(f"{self} is not a unit")
        ((k, _), c), = self.terms.items()
        return Scalar({(-k, 0): 1 / c})

    def __truediv__(self, other) -> "Scalar":
        return self * Scalar.coerce(other).inverse()

    def eps_part(self, e: int) -> "Scalar":
        """Coefficient of eps^e, returned with eps stripped."""
        return Scalar({(k, 0): c for (k, ee), c in self.terms.items() if ee == e})

    def items(self) -> Iterator:
        return iter(sorted(self.terms.items(), key=lambda kv: (kv[0][1], kv[0][0])))

    def __repr__(self) -> str:
        return f"Scalar({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = [format_term(c, k, e) for (k, e), c in self.items()]
        return join_signed(parts)


def format_term(c: Fraction, k: int, e: int) -> str:
    bits = [format_rational(c)]
    if k:
        bits.append("h" if k == 1 else f"h^{k}")
    if e:
        bits.append("eps")
    return " * ".join(bits)


def join_signed(parts: list[str]) -> str:
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


_TERM = re.compile(
    r"^\s*(?P<c>-?\d+(?:/\d+)?)\s*(?:\*\s*h(?:\^(?P<k>-?\d+))?(?P<hflag>))?\s*(?P<eps>\*\s*eps)?\s*$"
)


def parse_scalar(text: str) -> Scalar:
    """Inverse of ``str(Scalar)``."""
    text = text.strip()
    if text == "0":
        return Scalar()
    pieces = re.split(r"\s+(?=[+-]\s)", text)
    out = Scalar()
    for piece in pieces:
        piece = piece.replace("+ ", "", 1) if piece.startswith("+ ") else piece
        piece = piece.replace("- ", "-", 1) if piece.startswith("- ") else piece
        m = _TERM.match(piece)
        if not m:
            raise ValueError(f"bad scalar term {piece!r}")
        k = 0
        if m.group("hflag") is not None:
            k = int(m.group("k")) if m.group("k") else 1
        e = 1 if m.group("eps") else 0
        out = out + Scalar({(k, e): Fraction(m.group("c"))})
    return out


ZERO = Scalar()
ONE = Scalar.const(1)
H = Scalar.h(1)
HBAR = Scalar.h(2)
EPS = Scalar.eps()
