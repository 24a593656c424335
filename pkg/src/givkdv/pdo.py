"""Truncated pseudo-differential operators sum_k c_k D^k with DiffPoly coefficients.

Each operator carries a floor M: every coefficient of order >= -M is exact and
nothing below -M is stored. ``floor=None`` means the operator is known exactly.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache

from .diffring import ONE, ZERO, DiffPoly, dx, u
from .scalars import Scalar

INF = float("inf")


@lru_cache(maxsize=None)
def gbinom(k: int, l: int) -> int:
    """Generalized binomial coefficient k(k-1)...(k-l+1)/l! for any integer k."""
    num = 1
    for i in range(l):
        num *= k - i
    den = 1
    for i in range(2, l + 1):
        den *= i
    return num // den


def _f(floor):
    return INF if floor is None else floor


class PDO:
    __slots__ = ("coeffs", "floor", "oracle")

    def __init__(self, coeffs: dict | None = None, floor: int | None = None, oracle=None):
        self.floor = floor
        self.oracle = oracle
        lo = -_f(floor)
        self.coeffs = {k: DiffPoly.coerce(c) for k, c in (coeffs or {}).items() if k >= lo}
        self.coeffs = {k: c for k, c in self.coeffs.items() if c}

    @classmethod
    def scalar(cls, c) -> "PDO":
        return cls({0: DiffPoly.coerce(c)})

    @classmethod
    def D(cls, k: int = 1, c=1) -> "PDO":
        return cls({k: DiffPoly.coerce(c)})

    @property
    def top(self):
        return max(self.coeffs) if self.coeffs else None

    def coeff(self, k: int) -> DiffPoly:
        if k < -_f(self.floor):
            raise ValueError(f"order {k} lies below the certified floor {self.floor}")
        return self.coeffs.get(k, ZERO)

    def truncate(self, floor: int | None) -> "PDO":
        if floor is None:
            return self
        if self.floor is not None and floor > self.floor:
            raise ValueError(f"cannot certify floor {floor}, only {self.floor} available")
        return PDO(self.coeffs, floor, self.oracle)

    def with_oracle(self, oracle) -> "PDO":
        return PDO(self.coeffs, self.floor, oracle)

    def _or(self, other: "PDO"):
        return self.oracle if self.oracle is not None else other.oracle

    def __eq__(self, other) -> bool:
        if not isinstance(other, PDO):
            return NotImplemented
        return self.floor == other.floor and self.coeffs == other.coeffs

    def agrees(self, other: "PDO") -> bool:
        """Equality on the common certified range."""
        fl = min(_f(self.floor), _f(other.floor))
        keys = set(self.coeffs) | set(other.coeffs)
        return all(self.coeffs.get(k, ZERO) == other.coeffs.get(k, ZERO) for k in keys if k >= -fl)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other) -> "PDO":
        if not isinstance(other, PDO):
            other = PDO.scalar(other)
        fl = min(_f(self.floor), _f(other.floor))
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return PDO(out, None if fl == INF else fl, self._or(other))

    __radd__ = __add__

    def __neg__(self) -> "PDO":
        return PDO({k: -c for k, c in self.coeffs.items()}, self.floor, self.oracle)

    def __sub__(self, other) -> "PDO":
        if not isinstance(other, PDO):
            other = PDO.scalar(other)
        return self + (-other)

    def __rsub__(self, other) -> "PDO":
        return PDO.scalar(other) - self

    def scale(self, s) -> "PDO":
        """Left multiplication by a DiffPoly or Scalar coefficient (no derivatives involved)."""
        if isinstance(s, DiffPoly):
            return PDO({k: s * c for k, c in self.coeffs.items()}, self.floor, self.oracle)
        return PDO({k: c.scale(s) for k, c in self.coeffs.items()}, self.floor, self.oracle)

    def __mul__(self, other) -> "PDO":
        if isinstance(other, PDO):
            return pdo_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other) -> "PDO":
        return self.scale(other)

    def map_coeffs(self, fn) -> "PDO":
        return PDO({k: fn(c) for k, c in self.coeffs.items()}, self.floor, self.oracle)

    def eps_part(self, e: int) -> "PDO":
        return self.map_coeffs(lambda c: c.eps_part(e))

    def has_aux(self) -> bool:
        return any(c.has_aux() for c in self.coeffs.values())

    def __repr__(self) -> str:
        return f"PDO({self})"

    def __str__(self) -> str:
        return format_pdo(self)


def format_pdo(A: PDO) -> str:
    parts = [f"({c}) * D^{k}" for k, c in sorted(A.coeffs.items(), reverse=True)]
    body = " + ".join(parts) if parts else "0"
    if A.floor is not None:
        body += f" + O(D^{-A.floor - 1})"
    return body


class _Derivs:
    """Lazily extended list of successive x-derivatives of one coefficient."""

    __slots__ = ("ds", "oracle")

    def __init__(self, c: DiffPoly, oracle):
        self.ds = [c]
        self.oracle = oracle

    def get(self, l: int) -> DiffPoly:
        while len(self.ds) <= l:
            prev = self.ds[-1]
            self.ds.append(dx(prev, self.oracle) if prev else ZERO)
        return self.ds[l]


def _is_x_constant(c: DiffPoly) -> bool:
    return all(v[0] == 2 for v in c.variables())


def _mul_into(acc: dict, p1: DiffPoly, p2: DiffPoly, factor: int) -> None:
    from .diffring import mono_mul

    for (m1, k1, e1), c1 in p1.terms.items():
        c1f = c1 * factor
        for (m2, k2, e2), c2 in p2.terms.items():
            e = e1 + e2
            if e > 1:
                continue
            key = (mono_mul(m1, m2), k1 + k2, e)
            s = acc.get(key)
            acc[key] = c1f * c2 if s is None else s + c1f * c2


def product_floor(A: PDO, B: PDO, depth: int | None = None):
    tA, tB = A.top, B.top
    fl = INF
    if tB is not None:
        fl = min(fl, _f(A.floor) - tB)
    if tA is not None:
        fl = min(fl, _f(B.floor) - tA)
    if depth is not None:
        fl = min(fl, depth)
    return fl


def pdo_mul(A: PDO, B: PDO, depth: int | None = None, oracle=None) -> PDO:
    """Product A*B via d^i b = sum_l binom(i,l) b^(l) d^(i-l), generalized binomial for i < 0."""
    oracle = oracle if oracle is not None else A._or(B)
    fl = product_floor(A, B, depth)
    if A.top is None or B.top is None:
        return PDO({}, None if fl == INF else fl, oracle)
    if fl == INF:
        if min(A.coeffs) < 0 and not all(_is_x_constant(c) for c in B.coeffs.values()):
            raise ValueError("infinite product: pass depth to truncate")
    lo = -fl
    derivs = {j: _Derivs(b, oracle) for j, b in B.coeffs.items()}
    acc: dict = {}
    for i, a in A.coeffs.items():
        for j in B.coeffs:
            lmax = i if i >= 0 else INF
            l = 0
            while l <= lmax and i + j - l >= lo:
                bl = derivs[j].get(l)
                if not bl:
                    break
                _mul_into(acc.setdefault(i + j - l, {}), a, bl, gbinom(i, l))
                l += 1
    out = {k: DiffPoly(v) for k, v in acc.items()}
    return PDO(out, None if fl == INF else int(fl), oracle)


def commutator(A: PDO, B: PDO, depth: int | None = None, oracle=None) -> PDO:
    return pdo_mul(A, B, depth, oracle) - pdo_mul(B, A, depth, oracle)


def anticommutator(A: PDO, B: PDO, depth: int | None = None, oracle=None) -> PDO:
    return pdo_mul(A, B, depth, oracle) + pdo_mul(B, A, depth, oracle)


def adjoint(A: PDO, depth: int | None = None) -> PDO:
    """(c D^k)* = (-D)^k o c."""
    fl = _f(A.floor)
    if depth is not None:
        fl = min(fl, depth)
    if fl == INF and A.coeffs and min(A.coeffs) < 0 and not all(_is_x_constant(c) for c in A.coeffs.values()):
        raise ValueError("infinite adjoint: pass depth to truncate")
    out: dict = {}
    for k, c in A.coeffs.items():
        d = _Derivs(c, A.oracle)
        sign = -1 if k % 2 else 1
        l = 0
        while (k < 0 or l <= k) and k - l >= -fl:
            cl = d.get(l)
            if cl:
                out[k - l] = out.get(k - l, ZERO) + cl * (sign * gbinom(k, l))
            elif l > 0:
                break
            l += 1
    return PDO(out, None if fl == INF else int(fl), A.oracle)


def split(A: PDO) -> tuple[PDO, PDO]:
    """(differential part, integral part)."""
    if A.floor is not None and A.floor < 0:
        raise ValueError("differential part not certified")
    plus = PDO({k: c for k, c in A.coeffs.items() if k >= 0}, None, A.oracle)
    minus = PDO({k: c for k, c in A.coeffs.items() if k < 0}, A.floor, A.oracle)
    return plus, minus


def plus_part(A: PDO) -> PDO:
    return split(A)[0]


def minus_part(A: PDO) -> PDO:
    return split(A)[1]


def res(A: PDO) -> DiffPoly:
    if A.floor is not None and A.floor < 1:
        raise ValueError(f"residue needs floor >= 1, have {A.floor}")
    return A.coeffs.get(-1, ZERO)


def invert_monic(A: PDO, depth: int) -> PDO:
    """Inverse of c*D^m*(1 + lower) with c a unit scalar, by a Neumann series."""
    m = A.top
    if m is None:
        raise ZeroDivisionError("cannot invert zero operator")
    lead = A.coeffs[m]
    if lead.variables() or len(lead.terms) != 1:
        raise ValueError(f"leading coefficient {lead} is not a unit")
    s = lead.coeff(())
    if not s.is_unit():
        raise ValueError(f"leading coefficient {lead} is not a unit")
    cinv = s.inverse()
    need = depth - m
    lead_inv = PDO({-m: DiffPoly.const(cinv)})
    rest = A - PDO({m: lead})
    R = pdo_mul(lead_inv, rest, depth=need, oracle=A.oracle)
    if R.floor is not None and R.floor < need:
        raise ValueError(f"operator known only to floor {A.floor}; inverse at depth {depth} impossible")
    S = PDO.scalar(1).truncate(need)
    term = S
    negR = -R
    while True:
        term = pdo_mul(negR, term, depth=need)
        if term.is_zero():
            break
        S = S + term
    return pdo_mul(S, lead_inv, depth=depth).truncate(depth)


# ---- Lax operator powers -----------------------------------------------------

def lax_op(alpha: int) -> PDO:
    return PDO({2: DiffPoly.const(Scalar.h(2)), 0: u(alpha) * 2})


def sqrt_lax(alpha: int, depth: int) -> PDO:
    """The root h*D + sum_{j<=0} c_j D^j of h^2 D^2 + 2u, solved order by order."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return _sqrt_cached(alpha, depth)


_sqrt_lock = threading.Lock()
_sqrt_memo: dict = {}


def _sqrt_cached(alpha: int, depth: int) -> PDO:
    for (a, d), val in list(_sqrt_memo.items()):
        if a == alpha and d >= depth:
            return val.truncate(depth)
    two_h_inv = Scalar.h(-1, Fraction(1, 2))
    c: dict = {}
    derivs: dict = {}
    for j in range(0, -depth - 1, -1):
        n = j + 1
        rhs = u(alpha) * 2 if n == 0 else ZERO
        acc: dict = {}
        if n in c:
            acc_p = dx(c[n]).scale(Scalar.h(1))
            for key, v in acc_p.terms.items():
                acc[key] = acc.get(key, 0) + v
        # (Y^2)_n with a, b in (j, 0]
        for a, ca in c.items():
            for b in c:
                l = a + b - n
                if l < 0:
                    continue
                if l > 0 and a >= 0:
                    continue
                if b not in derivs:
                    derivs[b] = _Derivs(c[b], None)
                cb = derivs[b].get(l)
                if cb:
                    _mul_into(acc, ca, cb, gbinom(a, l))
        cj = (rhs - DiffPoly(acc)).scale(two_h_inv)
        c[j] = cj
    out = PDO({1: DiffPoly.const(Scalar.h(1)), **c}, depth)
    with _sqrt_lock:
        _sqrt_memo[(alpha, depth)] = out
    return out


_power_memo: dict = {}
_power_lock = threading.Lock()


def lax_power(alpha: int, s, depth: int) -> PDO:
    """L_alpha^s for integer or half-integer s, certified to the given floor."""
    two_s = Fraction(s) * 2
    if two_s.denominator != 1:
        raise ValueError(f"power {s} is not a half-integer")
    two_s = int(two_s)
    key = (alpha, two_s, depth)
    hit = _power_memo.get(key)
    if hit is not None:
        return hit
    out = _lax_power(alpha, two_s, depth)
    if out.floor is not None:
        out = out.truncate(depth)
    with _power_lock:
        _power_memo.setdefault(key, out)
    return _power_memo[key]


def _lax_power(alpha: int, two_s: int, depth: int) -> PDO:
    if two_s == 0:
        return PDO.scalar(1)
    if two_s == 2:
        return lax_op(alpha)
    if two_s == 1:
        return sqrt_lax(alpha, depth)
    if two_s == -1:
        return invert_monic(sqrt_lax(alpha, max(depth - 2, 1)), depth)
    if two_s > 0 and two_s % 2 == 0:
        half = two_s // 2
        return pdo_mul(lax_power(alpha, half - 1, depth), lax_op(alpha))
    if two_s > 0:
        n = two_s // 2
        return pdo_mul(lax_power(alpha, n, depth), lax_power(alpha, Fraction(1, 2), depth + 2 * n), depth)
    if two_s == -2:
        return invert_monic(lax_op(alpha), depth)
    if two_s % 2 == 0:
        # L^{-n} = L^{-1} L^{-(n-1)}
        n = -two_s // 2
        return pdo_mul(
            lax_power(alpha, -1, max(depth - 2 * (n - 1), 1)),
            lax_power(alpha, -(n - 1), max(depth - 2, 1)),
            depth,
        )
    # L^{-n-1/2} = L^{-1/2} L^{-n}
    n = (-two_s - 1) // 2
    return pdo_mul(
        lax_power(alpha, Fraction(-1, 2), max(depth - 2 * n, 1)),
        lax_power(alpha, -n, max(depth - 1, 1)),
        depth,
    )


def clear_caches() -> None:
    _sqrt_memo.clear()
    _power_memo.clear()
