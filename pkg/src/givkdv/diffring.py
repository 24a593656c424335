"""Differential polynomials in the jets u[a,k], plus the auxiliary symbols x, q[b,j], T[b,m].

A variable is a tuple of ints ``(kind, i, j)``; the kinds sort jets first and the
auxiliary symbols last. A DiffPoly is stored flat: ``(monomial, h-power, eps-power)``
maps to a Fraction, where a monomial is a sorted tuple of ``(variable, exponent)``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Protocol

from .scalars import Scalar, format_rational, join_signed

JET, XVAR, QVAR, TVAR = 0, 1, 2, 3


def Jet(alpha: int, k: int = 0) -> tuple:
    if k < 0:
        raise ValueError("negative derivative order")
    return (JET, alpha, k)


X = (XVAR, 0, 0)


def Q(beta: int, j: int) -> tuple:
    return (QVAR, beta, j)


def T(beta: int, m: int) -> tuple:
    return (TVAR, beta, m)


def var_str(v: tuple) -> str:
    kind, i, j = v
    if kind == JET:
        return f"u[{i},{j}]"
    if kind == XVAR:
        return "x"
    return f"{'q' if kind == QVAR else 'T'}[{i},{j}]"


class OmegaOracle(Protocol):
    def omega(self, alpha: int, p: int, beta: int, q: int) -> "DiffPoly": ...

    def jet_flow(self, alpha: int, i: int, n: int) -> "DiffPoly": ...


@lru_cache(maxsize=1 << 20)
def mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_without(m: tuple, idx: int) -> tuple:
    """Lower the exponent of the idx-th factor by one."""
    v, e = m[idx]
    if e == 1:
        return m[:idx] + m[idx + 1:]
    return m[:idx] + ((v, e - 1),) + m[idx + 1:]


def mono_degree(m: tuple) -> int:
    return sum(e for v, e in m if v[0] == JET)


class DiffPoly:
    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: v for k, v in terms.items() if v} if terms else {}

    @classmethod
    def _raw(cls, terms: dict) -> "DiffPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def var(cls, v: tuple, exp: int = 1) -> "DiffPoly":
        return cls._raw({(((v, exp),), 0, 0): Fraction(1)})

    @classmethod
    def const(cls, c) -> "DiffPoly":
        s = Scalar.coerce(c)
        return cls._raw({((), k, e): val for (k, e), val in s.terms.items()})

    @classmethod
    def from_scalar_map(cls, data: dict) -> "DiffPoly":
        out = {}
        for mono, s in data.items():
            for (k, e), c in Scalar.coerce(s).terms.items():
                out[(mono, k, e)] = c
        return cls(out)

    @staticmethod
    def coerce(x) -> "DiffPoly":
        if isinstance(x, DiffPoly):
            return x
        return DiffPoly.const(x)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        try:
            other = DiffPoly.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "DiffPoly":
        other = DiffPoly.coerce(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key)
            if s is None:
                out[key] = c
            else:
                s += c
                if s:
                    out[key] = s
                else:
                    del out[key]
        return DiffPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "DiffPoly":
        return DiffPoly._raw({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "DiffPoly":
        return self + (-DiffPoly.coerce(other))

    def __rsub__(self, other) -> "DiffPoly":
        return DiffPoly.coerce(other) - self

    def __mul__(self, other) -> "DiffPoly":
        if isinstance(other, (int, Fraction, Scalar)):
            return self.scale(other)
        if not self.terms or not other.terms:
            return ZERO
        out: dict = {}
        for (m1, k1, e1), c1 in self.terms.items():
            for (m2, k2, e2), c2 in other.terms.items():
                e = e1 + e2
                if e > 1:
                    continue
                key = (mono_mul(m1, m2), k1 + k2, e)
                s = out.get(key)
                out[key] = c1 * c2 if s is None else s + c1 * c2
        return DiffPoly(out)

    def __rmul__(self, other) -> "DiffPoly":
        return self.scale(other)

    def __pow__(self, n: int) -> "DiffPoly":
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def scale(self, s) -> "DiffPoly":
        if isinstance(s, (int, Fraction)):
            if not s:
                return ZERO
            return DiffPoly._raw({key: c * s for key, c in self.terms.items()})
        s = Scalar.coerce(s)
        out: dict = {}
        for (m, k1, e1), c1 in self.terms.items():
            for (k2, e2), c2 in s.terms.items():
                e = e1 + e2
                if e > 1:
                    continue
                key = (m, k1 + k2, e)
                out[key] = out.get(key, 0) + c1 * c2
        return DiffPoly(out)

    def shift_h(self, k: int) -> "DiffPoly":
        return DiffPoly._raw({(m, kk + k, e): c for (m, kk, e), c in self.terms.items()})

    def eps_part(self, e: int) -> "DiffPoly":
        """Coefficient of eps^e, with eps stripped."""
        return DiffPoly._raw({(m, k, 0): c for (m, k, ee), c in self.terms.items() if ee == e})

    def with_eps(self) -> "DiffPoly":
        """Multiply by eps."""
        return DiffPoly._raw({(m, k, 1): c for (m, k, e), c in self.terms.items() if e == 0})

    def coeff(self, mono: tuple) -> Scalar:
        return Scalar({(k, e): c for (m, k, e), c in self.terms.items() if m == mono})

    def monomials(self) -> set:
        return {m for m, _, _ in self.terms}

    def variables(self) -> set:
        return {v for m, _, _ in self.terms for v, _ in m}

    def has_aux(self) -> bool:
        return any(v[0] != JET for v in self.variables())

    def aux_terms(self) -> "DiffPoly":
        return DiffPoly._raw({key: c for key, c in self.terms.items() if any(v[0] != JET for v, _ in key[0])})

    def max_jet_order(self) -> int:
        return max((v[2] for v in self.variables() if v[0] == JET), default=-1)

    def components(self) -> set:
        return {v[1] for v in self.variables() if v[0] == JET}

    def substitute_zero(self) -> "DiffPoly":
        """Value at u = 0 (all jet variables set to zero)."""
        return DiffPoly._raw({key: c for key, c in self.terms.items() if mono_degree(key[0]) == 0})

    def __repr__(self) -> str:
        return f"DiffPoly({self})"

    def __str__(self) -> str:
        return format_poly(self)


ZERO = DiffPoly()
ONE = DiffPoly.const(1)


def u(alpha: int, k: int = 0) -> DiffPoly:
    return DiffPoly.var(Jet(alpha, k))


def xpoly() -> DiffPoly:
    return DiffPoly.var(X)


def qpoly(beta: int, j: int) -> DiffPoly:
    return DiffPoly.var(Q(beta, j))


def tpoly(beta: int, m: int) -> DiffPoly:
    return DiffPoly.var(T(beta, m))


# ---- derivations -------------------------------------------------------------

@lru_cache(maxsize=1 << 18)
def _dx_jet_mono(m: tuple) -> tuple:
    """dx of a monomial whose variables are jets or x or q; returns ((mono, coeff), ...)."""
    out: dict = {}
    for idx, (v, e) in enumerate(m):
        kind = v[0]
        if kind == QVAR:
            continue
        rest = mono_without(m, idx)
        if kind == JET:
            nm = mono_mul(rest, ((Jet(v[1], v[2] + 1), 1),))
        elif kind == XVAR:
            nm = rest
        else:
            raise AssertionError("T handled separately")
        out[nm] = out.get(nm, 0) + e
    return tuple(out.items())


def _need(oracle, what: str):
    if oracle is None:
        raise ValueError(f"{what} requires an attached omega oracle")
    return oracle


def dx(p: DiffPoly, oracle: OmegaOracle | None = None) -> DiffPoly:
    """Total x-derivative; T[b,m] differentiates to h^-2 * Omega_{b,0;b,m}."""
    out: dict = {}
    extra = []
    for (m, k, e), c in p.terms.items():
        tpos = [i for i, (v, _) in enumerate(m) if v[0] == TVAR]
        if tpos:
            plain = tuple(f for f in m if f[0][0] != TVAR)
            tpart = tuple(f for f in m if f[0][0] == TVAR)
            for nm, mult in _dx_jet_mono(plain):
                key = (mono_mul(nm, tpart), k, e)
                out[key] = out.get(key, 0) + c * mult
            om = _need(oracle, "dx of a T symbol")
            for i, (v, ex) in enumerate(tpart):
                rest = mono_mul(plain, mono_without(tpart, i))
                extra.append((rest, k - 2, e, c * ex, om.omega(v[1], 0, v[1], v[2])))
        else:
            for nm, mult in _dx_jet_mono(m):
                key = (nm, k, e)
                out[key] = out.get(key, 0) + c * mult
    res = DiffPoly(out)
    for rest, k, e, c, om_poly in extra:
        res = res + DiffPoly._raw({(rest, k, e): c}) * om_poly
    return res


def dx_n(p: DiffPoly, n: int, oracle: OmegaOracle | None = None) -> DiffPoly:
    for _ in range(n):
        p = dx(p, oracle)
    return p


def _apply_derivation(p: DiffPoly, image) -> DiffPoly:
    """Apply the derivation sending variable v to image(v) (a DiffPoly or None for zero)."""
    out = ZERO
    acc: dict = {}
    cache: dict = {}
    for (m, k, e), c in p.terms.items():
        for idx, (v, ex) in enumerate(m):
            if v not in cache:
                cache[v] = image(v)
            img = cache[v]
            if img is None or not img.terms:
                continue
            rest = mono_without(m, idx)
            if len(img.terms) == 1:
                ((im, ik, ie), ic), = img.terms.items()
                ee = e + ie
                if ee > 1:
                    continue
                key = (mono_mul(rest, im), k + ik, ee)
                acc[key] = acc.get(key, 0) + c * ex * ic
            else:
                out = out + DiffPoly._raw({(rest, k, e): c * ex}) * img
    return out + DiffPoly(acc)


def partial_u(p: DiffPoly, alpha: int, k: int) -> DiffPoly:
    """Formal partial derivative in u[alpha,k]."""
    target = Jet(alpha, k)
    out: dict = {}
    for (m, kk, e), c in p.terms.items():
        for idx, (v, ex) in enumerate(m):
            if v == target:
                key = (mono_without(m, idx), kk, e)
                out[key] = out.get(key, 0) + c * ex
    return DiffPoly(out)


def partial_var(p: DiffPoly, var: tuple) -> DiffPoly:
    out: dict = {}
    for (m, kk, e), c in p.terms.items():
        for idx, (v, ex) in enumerate(m):
            if v == var:
                key = (mono_without(m, idx), kk, e)
                out[key] = out.get(key, 0) + c * ex
    return DiffPoly(out)


def apply_vector_field(p: DiffPoly, field: dict) -> DiffPoly:
    """Apply sum_v field[v] * d/dv, field keyed by variable tuples."""
    return _apply_derivation(p, lambda v: field.get(v))


def dq(p: DiffPoly, gamma: int, r: int, oracle: OmegaOracle | None) -> DiffPoly:
    """Derivative along the time q[gamma,r]."""
    if not p.terms:
        return ZERO
    _need(oracle, "dq")

    def image(v):
        kind, b, j = v
        if kind == JET:
            return oracle.jet_flow(gamma, r, j) if b == gamma else None
        if kind == XVAR:
            return None
        if kind == QVAR:
            return ONE if (b, j) == (gamma, r) else None
        if b != gamma:
            return None
        return oracle.omega(b, j, b, r).shift_h(-2)

    return _apply_derivation(p, image)


# ---- x-antiderivative --------------------------------------------------------

def euler_operator(p: DiffPoly, alpha: int) -> DiffPoly:
    """Variational derivative sum_k (-dx)^k d p / d u[alpha,k]."""
    out = ZERO
    for k in range(p.max_jet_order() + 1):
        term = partial_u(p, alpha, k)
        if term:
            term = dx_n(term, k)
            out = out + (term if k % 2 == 0 else -term)
    return out


def is_total_derivative(p: DiffPoly) -> bool:
    if p.has_aux() or p.substitute_zero():
        return False
    return all(not euler_operator(p, a) for a in p.components())


def integrate_x(p: DiffPoly) -> DiffPoly:
    """Antiderivative vanishing at u = 0, via the homotopy operator on each degree piece."""
    if p.has_aux():
        raise ValueError("integrate_x: auxiliary symbols present")
    if not is_total_derivative(p):
        raise ValueError(f"integrate_x: not a total x-derivative: {p}")
    by_degree: dict = {}
    for key, c in p.terms.items():
        by_degree.setdefault(mono_degree(key[0]), {})[key] = c
    out = ZERO
    for d, terms in by_degree.items():
        piece = DiffPoly._raw(terms)
        acc = ZERO
        for a in piece.components():
            for k in range(1, piece.max_jet_order() + 1):
                dpk = partial_u(piece, a, k)
                if not dpk:
                    continue
                for j in range(k):
                    t = dx_n(dpk, k - j - 1)
                    if (k - j - 1) % 2:
                        t = -t
                    acc = acc + u(a, j) * t
        out = out + acc * Fraction(1, d)
    if dx(out) != p:
        raise AssertionError("integrate_x: homotopy antiderivative failed its check")
    return out


# ---- text form ---------------------------------------------------------------

def _term_key(item):
    (m, k, e), c = item
    return (e, -mono_degree(m), tuple((v, -ex) for v, ex in m), k)


def format_poly(p: DiffPoly) -> str:
    if not p.terms:
        return "0"
    parts = []
    for (m, k, e), c in sorted(p.terms.items(), key=_term_key):
        factors = []
        if k:
            factors.append("h" if k == 1 else f"h^{k}")
        if e:
            factors.append("eps")
        for v, ex in m:
            factors.append(var_str(v) + (f"^{ex}" if ex != 1 else ""))
        if not factors:
            parts.append(format_rational(c))
        elif c == 1:
            parts.append("*".join(factors))
        elif c == -1:
            parts.append("-" + "*".join(factors))
        else:
            parts.append(format_rational(c) + "*" + "*".join(factors))
    return join_signed(parts)


_FACTOR = re.compile(
    r"^(?:(?P<rat>\d+(?:/\d+)?)|h(?:\^(?P<hk>-?\d+))?|(?P<eps>eps)"
    r"|(?P<sym>u|q|T)\[(?P<i>\d+),(?P<j>\d+)\](?:\^(?P<ve>\d+))?|(?P<x>x)(?:\^(?P<xe>\d+))?)$"
)


def parse_poly(text: str) -> DiffPoly:
    """Inverse of ``format_poly``."""
    text = text.strip()
    if text in ("", "0"):
        return ZERO
    tokens = re.split(r"\s+([+-])\s+", text)
    chunks = [(1, tokens[0])] + [(1 if tokens[i] == "+" else -1, tokens[i + 1]) for i in range(1, len(tokens), 2)]
    out: dict = {}
    for sign, chunk in chunks:
        chunk = chunk.strip()
        if chunk.startswith("-"):
            sign, chunk = -sign, chunk[1:]
        c = Fraction(sign)
        k = e = 0
        mono: tuple = ()
        for fac in chunk.split("*"):
            m = _FACTOR.match(fac.strip())
            if not m:
                raise ValueError(f"bad factor {fac!r} in {text!r}")
            if m.group("rat"):
                c *= Fraction(m.group("rat"))
            elif m.group("eps"):
                e += 1
            elif m.group("sym"):
                kind = {"u": JET, "q": QVAR, "T": TVAR}[m.group("sym")]
                mono = mono_mul(mono, (((kind, int(m.group("i")), int(m.group("j"))), int(m.group("ve") or 1)),))
            elif m.group("x"):
                mono = mono_mul(mono, ((X, int(m.group("xe") or 1)),))
            else:
                k += int(m.group("hk")) if m.group("hk") else 1
        if e > 1:
            continue
        key = (mono, k, e)
        out[key] = out.get(key, 0) + c
    return DiffPoly(out)


def poly_sum(items: Iterable[DiffPoly]) -> DiffPoly:
    acc: dict = {}
    for p in items:
        for key, c in p.terms.items():
            acc[key] = acc.get(key, 0) + c
    return DiffPoly(acc)
