"""Independent sympy computation of reference values frozen into the test suite.

Operators are dicts order -> sympy expression in u(x) and h; the product uses the
generalized Leibniz rule directly on sympy derivatives.  Nothing from givkdv is imported.

    python scripts/derive_oracles.py
"""

import sympy as sp

x, h = sp.symbols("x h")
u = sp.Function("u")(x)
FLOOR = 10


def binom(k, l):
    out = sp.Integer(1)
    for i in range(l):
        out = out * (k - i) / (i + 1)
    return out


def mul(A, B, floor=FLOOR):
    out = {}
    for i, a in A.items():
        for j, b in B.items():
            l = 0
            while i + j - l >= -floor and (i < 0 or l <= i):
                t = a * binom(i, l) * sp.diff(b, x, l)
                out[i + j - l] = sp.expand(out.get(i + j - l, 0) + t)
                l += 1
    return {k: v for k, v in out.items() if v != 0}


def sqrt_lax():
    # X = h D + sum_{k<=-1} c_k D^k, solve X^2 = h^2 D^2 + 2u order by order
    X = {1: h}
    for k in range(-1, -FLOOR - 1, -1):
        c = sp.Symbol("c")
        trial = dict(X)
        trial[k] = c
        sq = mul(trial, trial)
        want = {2: h**2, 0: 2 * u}
        eq = sp.expand(sq.get(k + 1, 0) - want.get(k + 1, 0))
        X[k] = sp.expand(sp.solve(eq, c)[0])
    return X


def power_half(X, n):
    P = dict(X)
    for _ in range(2 * n):
        P = mul(P, X)
    return P


def a_const(n):
    out = sp.Integer(1)
    for k in range(1, 2 * n + 2, 2):
        out /= k
    return out


def to_text(expr):
    """Render in the package's text format (u[1,k] for the k-th derivative)."""
    expr = sp.expand(expr)
    rows = []
    for term in sp.Add.make_args(expr):
        coeff, hp, mono = sp.Integer(1), 0, []
        for f in sp.Mul.make_args(term):
            base, e = f.as_base_exp()
            if f.is_number:
                coeff *= f
            elif base == h:
                hp += int(e)
            elif isinstance(base, sp.Derivative):
                mono.append((base.derivative_count, int(e)))
            elif base == u:
                mono.append((0, int(e)))
            else:
                raise ValueError(f)
        rows.append((coeff, hp, sorted(mono)))
    return rows


def main():
    X = sqrt_lax()
    print("sqrt coefficients:")
    for k in range(-1, -6, -1):
        print(" ", k, X[k])
    for q in range(4):
        P = power_half(X, q)
        om = sp.expand(h * a_const(q) * P.get(-1, 0))
        print(f"Omega_(0;{q}) =", to_text(om))
    # flow along q_1: (1/2)(a_1/h) [ (L^{3/2})_+, L ] at order 0
    P = power_half(X, 1)
    Pp = {k: v for k, v in P.items() if k >= 0}
    L = {2: h**2, 0: 2 * u}
    C = mul(Pp, L)
    D = mul(L, Pp)
    flow = sp.expand((C.get(0, 0) - D.get(0, 0)) * a_const(1) / (2 * h))
    print("flow q_1 =", to_text(flow))


if __name__ == "__main__":
    main()
