"""Random systems and expressions for property tests."""

from __future__ import annotations

import random
from fractions import Fraction

from flatkit.symbolic import Const, Var, simplify, substitute
from flatkit.symbolic.expr import Apply, Power, Product, Quotient, Sum
from flatkit.system import DiscreteSystem


def _coef(rng):
    return Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 2, 3]))


def chain_lengths(n, m, rng):
    lengths = [1] * m
    for _ in range(n - m):
        lengths[rng.randrange(m)] += 1
    return lengths


def brunovsky_transformed(n, m, seed):
    """Brunovsky chains under random triangular state and input changes.

    In chain coordinates z⁺ = (z₂, ..., v).  The state change is
    x_i = z_i + p_i(x_1, ..., x_{i-1}) with polynomial p_i and the input
    change v = c·u + q(x), so every system is static feedback linearizable
    with equilibrium 0.
    """
    rng = random.Random(seed)
    lengths = chain_lengths(n, m, rng)
    xs = [Var(f"x{i + 1}") for i in range(n)]
    us = [Var(f"u{j + 1}") for j in range(m)]
    zs = [Var(f"z{i + 1}") for i in range(n)]
    p = []
    for i in range(n):
        terms = []
        if i:
            a, b = rng.randrange(i), rng.randrange(i)
            terms.append(Const(_coef(rng)) * xs[a] * xs[b])
            if rng.random() < 0.5:
                terms.append(Const(_coef(rng)) * xs[rng.randrange(i)])
        p.append(simplify(Sum(tuple(terms))) if terms else Const(0))
    # z as a function of x and x as a function of z (triangular recursion)
    z_of_x = [simplify(x - pi) for x, pi in zip(xs, p)]
    x_of_z = []
    for i in range(n):
        x_of_z.append(simplify(substitute(zs[i] + p[i], dict(zip(xs[:i], x_of_z)))))
    v = []
    for j, u in enumerate(us):
        q = Const(_coef(rng)) * xs[rng.randrange(n)] * xs[rng.randrange(n)]
        v.append(simplify(Const(_coef(rng)) * u + q))
    # chain dynamics on z, with z expressed in x
    znext, k = [], 0
    for j, L in enumerate(lengths):
        for i in range(L):
            znext.append(z_of_x[k + i + 1] if i < L - 1 else v[j])
        k += L
    updates = [simplify(substitute(e, dict(zip(zs, znext)))) for e in x_of_z]
    eq = {s: Fraction(0) for s in xs + us}
    return DiscreteSystem(xs, us, updates, eq, f"chain{seed}")


def random_expr(rng, symbols, depth=3, functions=("sin", "cos", "exp")):
    """Random expression tree over ``symbols`` with small rational constants."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.3:
            return Const(Fraction(rng.randint(-5, 5), rng.randint(1, 4)))
        return rng.choice(symbols)
    kind = rng.choice(["sum", "prod", "pow", "apply", "quot"])
    sub = lambda: random_expr(rng, symbols, depth - 1, functions)
    if kind == "sum":
        return Sum((sub(), sub()))
    if kind == "prod":
        return Product((sub(), sub()))
    if kind == "pow":
        return Power(sub(), rng.randint(2, 3))
    if kind == "apply" and functions:
        return Apply(rng.choice(functions), sub())
    return Quotient(sub(), Sum((Const(2), Power(sub(), 2))))


def _poly(rng, symbols, degree=2):
    """Small random polynomial, possibly zero."""
    terms = []
    for _ in range(rng.randint(0, 2)):
        if not symbols:
            break
        mono = Const(_coef(rng))
        for _ in range(rng.randint(1, degree)):
            mono = mono * rng.choice(symbols)
        terms.append(mono)
    return simplify(Sum(tuple(terms))) if terms else Const(0)


def projectable_pair(seed):
    """A system with two projectable fields and their known images.

    A random triangular diffeomorphism s = Ψ(x, u) is built; its last n
    components are the update law, the first m the fibre.  The fields
    a(z)∂_z + b(z, ζ)∂_ζ in s coordinates are pulled back to (x, u), so
    their images under f are a(x⁺).  Returns (sys, h, [v1, v2], [a1, a2]).
    """
    from flatkit.geometry import VectorField, plus

    rng = random.Random(seed)
    n, m = rng.randint(1, 2), rng.randint(1, 2)
    xs = [Var(f"x{i + 1}") for i in range(n)]
    us = [Var(f"u{j + 1}") for j in range(m)]
    w = xs + us
    order = w[:]
    rng.shuffle(order)
    N = n + m
    ss = [Var(f"s{k + 1}") for k in range(N)]
    psi, inv = [], {}
    for k, var in enumerate(order):
        c = Const(_coef(rng))
        p = _poly(rng, order[:k])
        psi.append(simplify(c * var + p))
        inv[var] = simplify((ss[k] - substitute(p, inv)) / c)
    zeta, z = ss[:m], ss[m:]
    updates, h = psi[m:], psi[:m]
    eq = {s: Fraction(0) for s in w}
    # keep the equilibrium at the origin
    updates = [simplify(f - substitute(f, {v: Const(0) for v in w})) for f in updates]
    shift = [substitute(f, {v: Const(0) for v in w}) for f in psi[m:]]
    sys = DiscreteSystem(xs, us, updates, eq, f"proj{seed}")
    at_w = dict(zip(ss, psi))
    fields, images = [], []
    for _ in range(2):
        a = [_poly(rng, z) + Const(rng.randint(-2, 2)) for _ in range(n)]
        b = [_poly(rng, z + zeta) + Const(rng.randint(-2, 2)) for _ in range(m)]
        tilde = dict(zip(zeta + z, b + a))
        coeffs = []
        for var in w:
            d = Sum(tuple(Product((_d(inv[var], s), tilde[s])) for s in ss))
            coeffs.append(simplify(substitute(d, at_w)))
        fields.append(VectorField(w, coeffs))
        # the constant offset of f moves the image: z = x⁺ + offset
        xp = {zi: plus(x) + c for zi, x, c in zip(z, xs, shift)}
        images.append([simplify(substitute(ai, xp)) for ai in a])
    return sys, h, fields, images


def _d(e, s):
    from flatkit.symbolic import differentiate
    return differentiate(e, s)
