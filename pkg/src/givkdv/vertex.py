"""Exponent data of deformed vertex operators and the global R/S coefficient series."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .deform import GiventalDatum, sgn
from .report import VerificationReport
from .scalars import Scalar, const_a, const_b, const_d, const_f, format_rational


def laurent_add(target: dict, deg: int, c: Scalar) -> None:
    v = target.get(deg)
    v = c if v is None else v + c
    if v:
        target[deg] = v
    else:
        target.pop(deg, None)


def format_laurent(poly: dict) -> str:
    if not poly:
        return "0"
    parts = []
    for deg in sorted(poly, reverse=True):
        parts.append(f"({poly[deg]})*lambda^{deg}")
    return " + ".join(parts)


@dataclass
class ExponentSeries:
    """Exponent of a vertex-operator factor: sum q_part[b,n] q_{b,n} + d_part[b,n] d/dq_{b,n} + const_part."""

    q_part: dict = field(default_factory=dict)
    d_part: dict = field(default_factory=dict)
    const_part: dict = field(default_factory=dict)

    def add_q(self, beta: int, n: int, deg: int, c: Scalar) -> None:
        laurent_add(self.q_part.setdefault((beta, n), {}), deg, c)
        if not self.q_part[(beta, n)]:
            del self.q_part[(beta, n)]

    def add_d(self, beta: int, n: int, deg: int, c: Scalar) -> None:
        laurent_add(self.d_part.setdefault((beta, n), {}), deg, c)
        if not self.d_part[(beta, n)]:
            del self.d_part[(beta, n)]

    def add_const(self, deg: int, c: Scalar) -> None:
        laurent_add(self.const_part, deg, c)

    def is_empty(self) -> bool:
        return not (self.q_part or self.d_part or self.const_part)

    def merged(self, other: "ExponentSeries") -> "ExponentSeries":
        out = ExponentSeries()
        for src in (self, other):
            for (b, n), poly in src.q_part.items():
                for d, c in poly.items():
                    out.add_q(b, n, d, c)
            for (b, n), poly in src.d_part.items():
                for d, c in poly.items():
                    out.add_d(b, n, d, c)
            for d, c in src.const_part.items():
                out.add_const(d, c)
        return out

    def __str__(self) -> str:
        lines = [f"const: {format_laurent(self.const_part)}"]
        for (b, n) in sorted(self.q_part):
            lines.append(f"q[{b},{n}]: {format_laurent(self.q_part[(b, n)])}")
        for (b, n) in sorted(self.d_part):
            lines.append(f"d/dq[{b},{n}]: {format_laurent(self.d_part[(b, n)])}")
        return "\n".join(lines)


def infinitesimal_factors(G: GiventalDatum, alpha: int, n_max: int) -> tuple[ExponentSeries, ExponentSeries]:
    """First-order (plus, minus) factors conjugating Gamma_alpha; indices of q and d/dq kept <= n_max."""
    plus, minus = ExponentSeries(), ExponentSeries()
    eps = lambda hk, c: Scalar.eps(Fraction(c)) * Scalar.h(hk)
    N = G.N
    for ell in G.levels:
        m_aa = G.m(ell, alpha, alpha)
        if G.kind == "R":
            if m_aa and const_d(ell):
                plus.add_const(2 * ell, eps(0, m_aa * const_d(ell)))
            for beta in range(1, N + 1):
                r = G.m(ell, alpha, beta)
                if not r:
                    continue
                for n in range(ell, ell + n_max + 1):
                    plus.add_q(beta, n - ell, 2 * n + 1, eps(-1, sgn(ell - 1) * r * const_a(n)))
                for n in range(ell):
                    if ell - 1 - n <= n_max:
                        minus.add_d(beta, ell - 1 - n, 2 * n + 1, eps(1, r * sgn(n + 1) * const_a(n)))
                for n in range(0, n_max - ell + 1):
                    minus.add_d(beta, n + ell, -2 * n - 1, eps(1, r * const_b(n)))
        else:
            if m_aa and const_f(ell):
                plus.add_const(-2 * ell, eps(0, m_aa * const_f(ell)))
            for beta in range(1, N + 1):
                s = G.m(ell, alpha, beta)
                if not s:
                    continue
                for n in range(ell):
                    if ell - 1 - n <= n_max:
                        plus.add_q(beta, ell - 1 - n, -2 * n - 1, eps(-1, s * sgn(n) * const_b(n)))
                for n in range(0, n_max - ell + 1):
                    plus.add_q(beta, n + ell, 2 * n + 1, eps(-1, s * const_a(n)))
                for n in range(ell, ell + n_max + 1):
                    minus.add_d(beta, n - ell, -2 * n - 1, eps(1, s * sgn(ell - 1) * const_b(n)))
    return plus, minus


# ---- global action -----------------------------------------------------------

def mat_mul(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]


def mat_powers(M, k_max: int) -> list:
    n = len(M)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    out = [eye]
    for _ in range(k_max):
        out.append(mat_mul(out[-1], M))
    return out


def c_coefficient(kind: str, which: str, n: int, k: int, ell: int) -> Fraction:
    """Branch coefficient of the k-th term (derived from expanding (m z^{+-ell})^k f)."""
    kl = k * ell
    if kind == "R" and which == "B":
        return const_b(n - kl) if kl <= n else sgn(kl - n) * const_a(kl - n - 1)
    if kind == "S" and which == "A":
        return sgn(n + 1) * const_b(kl - n - 1) if kl > n else sgn(kl) * const_a(n - kl)
    raise ValueError("branch coefficient only for (R, B) and (S, A)")


def _degree(kind: str, which: str, n: int, kl: int) -> int:
    if kind == "R":
        return 2 * (kl + n) + 1 if which == "A" else 2 * (kl - n) - 1
    return 2 * (n - kl) + 1 if which == "A" else -2 * (n + kl) - 1


def _coeff(kind: str, which: str, n: int, k: int, ell: int) -> Fraction:
    kl = k * ell
    if kind == "R" and which == "A":
        return sgn(kl) * const_a(kl + n)
    if kind == "S" and which == "B":
        return const_b(n + kl)
    return c_coefficient(kind, which, n, k, ell)


@dataclass
class GlobalSeries:
    """Truncated A_{alpha,n} or B_{alpha,n}: terms[(beta, k)] = (lambda_beta degree, coefficient)."""

    kind: str
    which: str
    alpha: int
    n: int
    ell: int
    k_max: int
    terms: dict

    def laurent(self, beta: int) -> dict:
        out: dict = {}
        for (b, k), (deg, c) in self.terms.items():
            if b == beta:
                out[deg] = out.get(deg, Fraction(0)) + c
        return {d: c for d, c in out.items() if c}

    def as_json(self) -> list:
        return [
            {"beta": b, "n": self.n, "k": k, "degree": deg, "coefficient": format_rational(c)}
            for (b, k), (deg, c) in sorted(self.terms.items())
        ]


def global_AB(G: GiventalDatum, alpha: int, n: int, k_max: int) -> tuple[GlobalSeries, GlobalSeries]:
    if len(G.levels) != 1:
        raise ValueError("global series are defined for a single level")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    ell = G.levels[0]
    powers = mat_powers([list(r) for r in G.matrices[ell]], k_max)
    out = []
    for which in ("A", "B"):
        terms = {}
        for k in range(k_max + 1):
            c = _coeff(G.kind, which, n, k, ell) / factorial(k)
            deg = _degree(G.kind, which, n, k * ell)
            for beta in range(1, G.N + 1):
                v = c * powers[k][alpha - 1][beta - 1]
                if v:
                    terms[(beta, k)] = (deg, v)
        out.append(GlobalSeries(G.kind, which, alpha, n, ell, k_max, terms))
    return out[0], out[1]


@dataclass
class DegreeProfile:
    max_degree: int | None
    min_degree: int | None
    per_k_max: dict
    cumulative_max: dict
    verdict: str

    def as_dict(self) -> dict:
        return {
            "max_degree": self.max_degree,
            "min_degree": self.min_degree,
            "per_k_max": self.per_k_max,
            "cumulative_max": self.cumulative_max,
            "verdict": self.verdict,
        }


def degree_profile(series: GlobalSeries) -> DegreeProfile:
    """Per-k maximal lambda-degree; bounded iff the running maximum stops growing after k = 0."""
    per_k: dict = {}
    for (_, k), (deg, _) in series.terms.items():
        per_k[k] = max(per_k.get(k, deg), deg)
    degs = [d for d, _ in series.terms.values()]
    cum, best = {}, None
    for k in sorted(per_k):
        best = per_k[k] if best is None else max(best, per_k[k])
        cum[k] = best
    tail = [cum[k] for k in sorted(cum) if k >= 1]
    bounded = not tail or all(v == cum.get(0, tail[0]) for v in tail)
    return DegreeProfile(
        max(degs) if degs else None,
        min(degs) if degs else None,
        per_k,
        cum,
        "bounded" if bounded else "unbounded",
    )


def first_order_consistency(G: GiventalDatum, alpha: int, n_max: int) -> VerificationReport:
    """k = 1 terms of the global series against the infinitesimal factors of Gamma_alpha.

    The vertex at alpha feeds the coordinate q_{beta,m} through the (beta, alpha) entry of
    A_{beta,m} (and d/dq_{beta,m} through -B_{beta,m}).  The two conventions differ by the
    overall factor -(-1)^{ell-1} for R and -1 for S.
    """
    t0 = time.perf_counter()
    plus, minus = infinitesimal_factors(G, alpha, n_max)
    inf = plus.merged(minus)
    glob = ExponentSeries()
    for ell in G.levels:
        single = GiventalDatum(G.kind, {ell: G.matrices[ell]})
        norm = -sgn(ell - 1) if G.kind == "R" else -1
        for beta in range(1, G.N + 1):
            for m in range(n_max + 1):
                A, B = global_AB(single, beta, m, 1)
                for (b, k), (deg, c) in A.terms.items():
                    if k == 1 and b == alpha:
                        glob.add_q(beta, m, deg, Scalar.eps(c * norm) * Scalar.h(-1))
                for (b, k), (deg, c) in B.terms.items():
                    if k == 1 and b == alpha:
                        glob.add_d(beta, m, deg, Scalar.eps(-c * norm) * Scalar.h(1))
    lhs = ExponentSeries(glob.q_part, glob.d_part)
    rhs = ExponentSeries(inf.q_part, inf.d_part)
    neg = ExponentSeries()
    for (b, n), poly in rhs.q_part.items():
        for d, c in poly.items():
            neg.add_q(b, n, d, -c)
    for (b, n), poly in rhs.d_part.items():
        for d, c in poly.items():
            neg.add_d(b, n, d, -c)
    diff = lhs.merged(neg)
    return VerificationReport(
        case=f"first-order {G.kind} levels={G.levels} alpha={alpha} n<={n_max}",
        lhs=str(lhs),
        rhs=str(rhs),
        difference="0" if diff.is_empty() else str(diff),
        wall_time=time.perf_counter() - t0,
    )


def dichotomy_check(G: GiventalDatum, alpha: int, n: int, k_max: int = 6) -> list[VerificationReport]:
    """Degree profiles of A and B against the expected S-bounded / R-growing behaviour."""
    A, B = global_AB(G, alpha, n, k_max)
    ell = G.levels[0]
    out = []
    for series in (A, B):
        prof = degree_profile(series)
        if G.kind == "S":
            want_max = 2 * n + 1 if series.which == "A" else -2 * n - 1
            want = {"max_degree": want_max, "verdict": "bounded"}
            got = {"max_degree": prof.max_degree, "verdict": prof.verdict}
        else:
            powers = mat_powers([list(r) for r in G.matrices[ell]], k_max)
            live = [k for k in range(k_max + 1) if any(powers[k][alpha - 1])]
            top = max(live)
            want_max = 2 * (top * ell + n) + 1 if series.which == "A" else 2 * (top * ell - n) - 1
            want = {"max_degree": want_max, "verdict": "unbounded" if top >= 1 else "bounded"}
            if series.which == "A":
                want["growth"] = {k: 2 * (k * ell + n) + 1 for k in live}
            got = {"max_degree": prof.max_degree, "verdict": prof.verdict}
            if series.which == "A":
                got["growth"] = {k: prof.per_k_max[k] for k in live}
        out.append(
            VerificationReport(
                case=f"profile {G.kind} ell={ell} {series.which}[{alpha},{n}] k<={k_max}",
                lhs=str(got),
                rhs=str(want),
                difference="0" if got == want else f"{got} != {want}",
                extra={"profile": prof.as_dict()},
            )
        )
    return out
