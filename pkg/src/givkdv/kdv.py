"""N decoupled copies of KdV: Lax operators, flows, two-point functions and identity checks."""

from __future__ import annotations

import random
import threading
import time
from fractions import Fraction

from .diffring import ZERO, DiffPoly, dq, dx, dx_n, integrate_x, u
from .pdo import PDO, adjoint, commutator, lax_op as _lax_op, lax_power, minus_part, pdo_mul, plus_part, res
from .report import VerificationReport, make_report
from .scalars import Scalar, const_a


def half(n: int) -> Fraction:
    return Fraction(2 * n + 1, 2)


class HierarchyContext:
    """Omega oracle for N copies; caches are read-mostly with idempotent inserts."""

    def __init__(self, N: int = 1, depth: int = 8):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.N = N
        self.depth = depth
        self.omega_cache: dict = {}
        self._jet_cache: dict = {}
        self._lock = threading.Lock()

    def _check(self, *alphas: int) -> None:
        for a in alphas:
            if not 1 <= a <= self.N:
                raise IndexError(f"component {a} outside 1..{self.N}")

    def lax_op(self, alpha: int) -> PDO:
        self._check(alpha)
        return _lax_op(alpha)

    def power(self, alpha: int, n: int, depth: int) -> PDO:
        """L_alpha^{n+1/2} (n may be negative) to the given floor."""
        return lax_power(alpha, half(n), depth).with_oracle(self)

    def omega(self, alpha: int, p: int, beta: int, q: int) -> DiffPoly:
        self._check(alpha, beta)
        if alpha != beta:
            return ZERO
        key = (alpha, min(p, q), max(p, q))
        hit = self.omega_cache.get(key)
        if hit is not None:
            return hit
        val = self.omega_raw(alpha, key[1], key[2])
        with self._lock:
            self.omega_cache.setdefault(key, val)
        return self.omega_cache[key]

    def omega_raw(self, alpha: int, p: int, q: int) -> DiffPoly:
        """Uncached Omega_{a,p;a,q} computed in the stated index order."""
        if p == 0:
            return self.omega_from_residue(alpha, q)
        if q == 0:
            return self.omega_from_residue(alpha, p)
        return self.omega_from_commutator(alpha, p, q)

    def omega_from_residue(self, alpha: int, q: int) -> DiffPoly:
        return res(lax_power(alpha, half(q), 1)).scale(Scalar.h(1, const_a(q)))

    def omega_commutator_residue(self, alpha: int, p: int, q: int) -> DiffPoly:
        """a_p a_q Res[(L^{p+1/2})_+, (L^{q+1/2})_-], the x-derivative of Omega_{p;q}."""
        Pp = plus_part(lax_power(alpha, half(p), 1))
        Qm = minus_part(lax_power(alpha, half(q), 2 * p + 2))
        return res(commutator(Pp, Qm)) * (const_a(p) * const_a(q))

    def omega_from_commutator(self, alpha: int, p: int, q: int) -> DiffPoly:
        return integrate_x(self.omega_commutator_residue(alpha, p, q))

    def jet_flow(self, alpha: int, i: int, n: int) -> DiffPoly:
        """d u[alpha,n] / d q[alpha,i] = dx^{n+1} Omega_{alpha,i;alpha,0}."""
        key = (alpha, i, n)
        hit = self._jet_cache.get(key)
        if hit is not None:
            return hit
        if n == 0:
            val = dx(self.omega(alpha, i, alpha, 0))
        else:
            val = dx(self.jet_flow(alpha, i, n - 1))
        with self._lock:
            self._jet_cache.setdefault(key, val)
        return self._jet_cache[key]

    def dq(self, p: DiffPoly, gamma: int, r: int) -> DiffPoly:
        return dq(p, gamma, r, self)

    def dq_pdo(self, A: PDO, gamma: int, r: int) -> PDO:
        return A.map_coeffs(lambda c: dq(c, gamma, r, self)).with_oracle(self)

    def dx(self, p: DiffPoly) -> DiffPoly:
        return dx(p, self)

    def flow(self, alpha: int, n: int) -> DiffPoly:
        """du_alpha/dq_{alpha,n} from the Lax equation."""
        self._check(alpha)
        Pp = plus_part(lax_power(alpha, half(n), 1))
        C = commutator(Pp, _lax_op(alpha))
        if any(k != 0 for k in C.coeffs):
            raise AssertionError(f"Lax commutator is not a multiplication operator: {C}")
        return C.coeffs.get(0, ZERO).scale(Scalar.h(-1, const_a(n) / 2))

    def verify_zs(self, k: int, l: int, alpha: int = 1) -> VerificationReport:
        t0 = time.perf_counter()
        Pk = plus_part(lax_power(alpha, half(k), 1))
        Pl = plus_part(lax_power(alpha, half(l), 1))
        lhs = self.dq_pdo(Pl, alpha, k).scale(Scalar.h(1, 1 / const_a(k))) - self.dq_pdo(Pk, alpha, l).scale(
            Scalar.h(1, 1 / const_a(l))
        )
        rhs = commutator(Pk, Pl)
        return pdo_report(f"zs k={k} l={l}", lhs, rhs, None, time.perf_counter() - t0)

    def omega_table(self, p_max: int, q_max: int | None = None) -> list[tuple]:
        q_max = p_max if q_max is None else q_max
        rows = []
        for a in range(1, self.N + 1):
            for b in range(1, self.N + 1):
                for p in range(p_max + 1):
                    for q in range(q_max + 1):
                        rows.append((a, p, b, q, self.omega(a, p, b, q)))
        return rows


def pdo_report(case: str, lhs: PDO, rhs: PDO, depth, wall: float) -> VerificationReport:
    diff = lhs - rhs
    return VerificationReport(case, str(lhs), str(rhs), str(diff) if diff.coeffs else "0", depth, wall)


# ---- pairing identity --------------------------------------------------------

def symbol(A: PDO) -> dict:
    """Symbol in lambda with D -> lambda/h, coefficients kept on the left."""
    return {k: c.shift_h(-k) for k, c in A.coeffs.items()}


def pairing_lhs(P: PDO, Q: PDO) -> DiffPoly:
    """Res_lambda P(x, lambda) Q(x, -lambda)."""
    sp, sq = symbol(P), symbol(Q)
    out = ZERO
    for i, c in sp.items():
        j = -1 - i
        if j in sq:
            term = c * sq[j]
            out = out + (term if j % 2 == 0 else -term)
    return out


def pairing_rhs(P: PDO, Q: PDO, depth: int) -> DiffPoly:
    """h * Res_D P Q*."""
    return res(pdo_mul(P, adjoint(Q, depth), depth)).shift_h(1)


def pairing_check(P: PDO, Q: PDO, depth: int = 6) -> VerificationReport:
    t0 = time.perf_counter()
    lhs = pairing_lhs(P, Q)
    rhs = pairing_rhs(P, Q, depth)
    return make_report("pairing", lhs, rhs, depth, time.perf_counter() - t0)


def random_jet_poly(rng: random.Random, alpha: int = 1, max_order: int = 3, max_terms: int = 3) -> DiffPoly:
    out = ZERO
    for _ in range(rng.randint(1, max_terms)):
        mono = DiffPoly.const(Scalar.h(rng.randint(-2, 2), Fraction(rng.randint(-5, 5), rng.randint(1, 4))))
        for _ in range(rng.randint(0, 2)):
            mono = mono * u(alpha, rng.randint(0, max_order))
        out = out + mono
    return out


def random_pdo(rng: random.Random, lo: int = -4, hi: int = 4, alpha: int = 1) -> PDO:
    orders = rng.sample(range(lo, hi + 1), rng.randint(1, 3))
    return PDO({k: random_jet_poly(rng, alpha) for k in orders})


def pairing_suite(n_cases: int = 50, seed: int = 0, depth: int = 6) -> list[VerificationReport]:
    rng = random.Random(seed)
    reports = []
    for i in range(n_cases):
        P, Q = random_pdo(rng), random_pdo(rng)
        r = pairing_check(P, Q, depth)
        r.case = f"pairing #{i} seed={seed}"
        reports.append(r)
    return reports


# closed-form low-order coefficients of the square root, order -> value
def expected_sqrt_coefficients(alpha: int = 1) -> dict:
    U = [u(alpha, k) for k in range(5)]
    h = lambda k, c=1: Scalar.h(k, Fraction(c))
    return {
        -1: U[0].scale(h(-1)),
        -2: U[1].scale(h(-1, Fraction(-1, 2))),
        -3: (U[2].scale(h(2)) - (U[0] * U[0]).scale(2)).scale(h(-3, Fraction(1, 4))),
        -4: -(U[3].scale(h(2)) - (U[0] * U[1]).scale(12)).scale(h(-3, Fraction(1, 8))),
        -5: (
            U[4].scale(h(4))
            - (U[0] * U[2]).scale(h(2, 28))
            - (U[1] * U[1]).scale(h(2, 22))
            + (U[0] * U[0] * U[0]).scale(8)
        ).scale(h(-5, Fraction(1, 16))),
    }


def sqrt_suite(depth: int = 6, alpha: int = 1) -> list[VerificationReport]:
    from .pdo import sqrt_lax

    t0 = time.perf_counter()
    X = sqrt_lax(alpha, depth)
    wall = time.perf_counter() - t0
    out = [make_report("sqrt leading h*D", X.coeffs.get(1, ZERO), DiffPoly.const(Scalar.h(1)), depth, wall)]
    for k, want in expected_sqrt_coefficients(alpha).items():
        out.append(make_report(f"sqrt coefficient D^{k}", X.coeff(k), want, depth, wall))
    return out


def root_check(depth: int = 12, alpha: int = 1) -> VerificationReport:
    from .pdo import sqrt_lax

    t0 = time.perf_counter()
    X = sqrt_lax(alpha, depth + 1)
    sq = pdo_mul(X, X)
    lhs = sq
    rhs = _lax_op(alpha).truncate(sq.floor)
    return pdo_report(f"root squared, floor {sq.floor}", lhs, rhs, depth, time.perf_counter() - t0)
