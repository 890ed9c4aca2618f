"""Canonical form of expressions.

An expression is brought into canonical form in three stages:

1. Function applications are normalized (arguments canonical, ``tan`` as
   ``sin/cos``, odd/even symmetry of ``sin``/``cos``, ``exp`` of a sum split
   into a product of ``exp`` factors, trivial values such as ``cos(0)``).
2. Symbols and the remaining function applications become generators of a
   polynomial ring over the rationals; the expression is evaluated as a
   reduced fraction of two polynomials (sympy's sparse polynomial rings
   provide the gcd).
3. The algebraic relations ``cos(a)^2 = 1 - sin(a)^2`` and
   ``sqrt(a)^2 = a`` are applied as directed rewrites to numerator and
   denominator, which end up with degree at most one in every
   ``cos``/``sqrt`` generator.  No other trigonometric identities are used.

Zero is recognized exactly: an expression is zero iff its canonical form is
the constant 0.  Nonzero expressions whose denominators contain ``cos`` or
``sqrt`` may have several equivalent reduced forms, so equality should be
tested with :func:`equal` rather than by comparing trees.

The result is converted back into an expression tree with factored
numerator and denominator, operands sorted by :func:`sort_key`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import sympy
from sympy.polys.rings import PolyRing

from .errors import DivisionByZero, UnsupportedExpression
from .expr import (Apply, Const, Expr, Neg, Power, Product, Quotient, Sum, Var,
                   ZERO, ONE, sort_key)

_QQ = sympy.QQ


# ------------------------------------------------------------ atom rewriting

def _lead_sign(e):
    if isinstance(e, Const):
        return (e.value > 0) - (e.value < 0)
    if isinstance(e, Neg):
        return -_lead_sign(e.operand)
    if isinstance(e, Product):
        return _lead_sign(e.factors[0]) if isinstance(e.factors[0], Const) else 1
    if isinstance(e, Sum):
        for t in e.terms:
            if not isinstance(t, Const):
                return _lead_sign(t)
        return _lead_sign(e.terms[0])
    if isinstance(e, Quotient):
        return _lead_sign(e.num) * _lead_sign(e.den)
    return 1


def _split_coeff(e):
    """(rational coefficient, rest) of a canonical term."""
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Product) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Product(rest)
    return Fraction(1), e


def _normalize_apply(func, arg):
    """Canonical replacement for func(arg) with ``arg`` already canonical."""
    if func == "tan":
        return Quotient(_normalize_apply("sin", arg), _normalize_apply("cos", arg))
    if func in ("sin", "cos"):
        if arg == ZERO:
            return ZERO if func == "sin" else ONE
        if _lead_sign(arg) < 0:
            pos = simplify(Neg(arg))
            return Neg(Apply("sin", pos)) if func == "sin" else Apply("cos", pos)
        return Apply(func, arg)
    if func == "exp":
        if arg == ZERO:
            return ONE
        terms = arg.terms if isinstance(arg, Sum) else (arg,)
        factors = []
        for t in terms:
            c, rest = _split_coeff(t)
            if c.denominator == 1 and isinstance(rest, Apply) and rest.func == "log":
                factors.append(Power(rest.arg, int(c)))
            elif c.denominator == 1:
                factors.append(Power(Apply("exp", rest), int(c)))
            else:
                factors.append(Apply("exp", t))
        return factors[0] if len(factors) == 1 else Product(tuple(factors))
    if func == "log":
        if arg == ONE:
            return ZERO
        if isinstance(arg, Apply) and arg.func == "exp":
            return arg.arg
        return Apply("log", arg)
    if func == "sqrt":
        if isinstance(arg, Const) and arg.value >= 0:
            v = arg.value
            n, d = _isqrt(v.numerator), _isqrt(v.denominator)
            if n is not None and d is not None:
                return Const(Fraction(n, d))
        return Apply("sqrt", arg)
    raise ValueError(func)


def _isqrt(k):
    import math
    r = math.isqrt(k)
    return r if r * r == k else None


def _prepare(e):
    """Rewrite function applications bottom-up; returns a raw tree."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Apply):
        return _normalize_apply(e.func, simplify(e.arg))
    if isinstance(e, Sum):
        return Sum(tuple(_prepare(t) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(_prepare(f) for f in e.factors))
    if isinstance(e, Power):
        return Power(_prepare(e.base), e.exp)
    if isinstance(e, Neg):
        return Neg(_prepare(e.operand))
    if isinstance(e, Quotient):
        return Quotient(_prepare(e.num), _prepare(e.den))
    raise TypeError(f"not an Expr: {e!r}")


def _atoms(e, out, exp_map=None):
    if isinstance(e, Const):
        return
    if isinstance(e, (Var, Apply)):
        out.add(e)
        if isinstance(e, Apply) and e.func == "cos":
            out.add(Apply("sin", e.arg))
        if isinstance(e, Apply) and e.func == "sqrt":
            _atoms(_rewrite(e.arg, exp_map or {}), out, exp_map)
        return
    for c in e.children:
        _atoms(c, out, exp_map)


def _exp_nodes(e, out):
    if isinstance(e, Apply):
        if e.func == "exp":
            out.add(e)
        elif e.func == "sqrt":
            _exp_nodes(e.arg, out)
        return
    for c in getattr(e, "children", ()):
        _exp_nodes(c, out)


def _exp_map(e):
    """exp(c*t) -> exp(g*t)^(c/g), g the rational gcd of all c for one t.

    Without a common generator exp(t/2)^2 and exp(t) would be independent
    ring generators and their difference would not cancel.
    """
    nodes = set()
    _exp_nodes(e, nodes)
    groups = {}
    for node in nodes:
        c, rest = _split_coeff(node.arg)
        groups.setdefault(rest, []).append((node, c))
    out = {}
    for rest, items in groups.items():
        num = den = 0
        for _, c in items:
            num = math.gcd(num, abs(c.numerator))
            den = den * c.denominator // math.gcd(den, c.denominator) if den else c.denominator
        g = Fraction(num, den)
        base = Apply("exp", rest if g == 1 else simplify(Product((Const(g), rest))))
        for node, c in items:
            k = c / g
            if node != base or k != 1:
                out[node] = base if k == 1 else Power(base, int(k))
    return out


def _rewrite(e, exp_map):
    if not exp_map or isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Apply):
        return exp_map.get(e, e)
    if isinstance(e, Sum):
        return Sum(tuple(_rewrite(t, exp_map) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(_rewrite(f, exp_map) for f in e.factors))
    if isinstance(e, Power):
        return Power(_rewrite(e.base, exp_map), e.exp)
    if isinstance(e, Neg):
        return Neg(_rewrite(e.operand, exp_map))
    if isinstance(e, Quotient):
        return Quotient(_rewrite(e.num, exp_map), _rewrite(e.den, exp_map))
    raise TypeError(f"not an Expr: {e!r}")


# ------------------------------------------------------- fraction arithmetic

@lru_cache(maxsize=256)
def _ring(n):
    return PolyRing([f"g{i}" for i in range(n)], _QQ)


class _Frac:
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num, self.den = num, den


def _cancel(num, den):
    if not den:
        raise DivisionByZero("division by zero")
    if not num:
        return _Frac(num, num.ring.one)
    if den.is_ground:
        c = den.LC
        return _Frac(num.quo_ground(c), num.ring.one)
    p, q = num.cancel(den)
    return _Frac(p, q)


def _to_frac(e, R, index, memo):
    key = e
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        out = _Frac(R(_QQ(e.value.numerator, e.value.denominator)), R.one)
    elif isinstance(e, (Var, Apply)):
        out = _Frac(R.gens[index[e]], R.one)
    elif isinstance(e, Sum):
        num, den = R.zero, R.one
        for t in e.terms:
            f = _to_frac(t, R, index, memo)
            if f.den == den:
                num = num + f.num
            else:
                num, den = num * f.den + f.num * den, den * f.den
        out = _cancel(num, den)
    elif isinstance(e, Product):
        num, den = R.one, R.one
        for t in e.factors:
            f = _to_frac(t, R, index, memo)
            num, den = num * f.num, den * f.den
        out = _cancel(num, den)
    elif isinstance(e, Neg):
        f = _to_frac(e.operand, R, index, memo)
        out = _Frac(-f.num, f.den)
    elif isinstance(e, Power):
        f = _to_frac(e.base, R, index, memo)
        if e.exp >= 0:
            out = _Frac(f.num ** e.exp, f.den ** e.exp)
        else:
            if not f.num:
                raise DivisionByZero(f"division by zero in {e}", e)
            out = _cancel(f.den ** -e.exp, f.num ** -e.exp)
    elif isinstance(e, Quotient):
        a = _to_frac(e.num, R, index, memo)
        b = _to_frac(e.den, R, index, memo)
        if not b.num:
            raise DivisionByZero(f"division by zero in {e}", e)
        out = _cancel(a.num * b.den, a.den * b.num)
    else:
        raise TypeError(f"not an Expr: {e!r}")
    memo[key] = out
    return out


def _split_in(poly, i):
    """Coefficients of ``poly`` as a polynomial in generator ``i``."""
    R = poly.ring
    parts = {}
    for monom, coeff in poly.terms():
        k = monom[i]
        m = monom[:i] + (0,) + monom[i + 1:]
        parts[k] = parts.get(k, R.zero) + R({m: coeff})
    return parts


def _reduce_poly(poly, i, rel):
    """Apply g_i^2 -> rel to ``poly``; returns a fraction."""
    parts = _split_in(poly, i)
    if max(parts, default=0) < 2:
        return _Frac(poly, poly.ring.one)
    R = poly.ring
    g = R.gens[i]
    top = max(parts) // 2
    num = R.zero
    for k, c in parts.items():
        # c * rel^(k//2) * g^(k%2), over the common denominator rel.den^top
        j = k // 2
        num += c * rel.num ** j * rel.den ** (top - j) * g ** (k % 2)
    return _Frac(num, rel.den ** top)


def _apply_relations(f, relations):
    """Reduce numerator and denominator modulo the algebraic relations."""
    for _ in range(8):
        num, den = f.num, f.den
        for i, rel in relations:
            rn = _reduce_poly(num, i, rel)
            rd = _reduce_poly(den, i, rel)
            num, den = rn.num * rd.den, rn.den * rd.num
        new = _cancel(num, den)
        if new.num == f.num and new.den == f.den:
            break
        f = new
    return f


# -------------------------------------------------------- back to Expr trees

def _monomial_expr(monom, coeff, atoms):
    factors = []
    exp_args = []
    for k, a in zip(monom, atoms):
        if not k:
            continue
        if isinstance(a, Apply) and a.func == "exp":
            exp_args.append(Product((Const(k), a.arg)) if k != 1 else a.arg)
        else:
            factors.append(a if k == 1 else Power(a, k))
    if exp_args:
        arg = simplify(Sum(tuple(exp_args)) if len(exp_args) > 1 else exp_args[0])
        factors.append(Apply("exp", arg))
    c = Fraction(int(coeff.numerator), int(coeff.denominator))
    return _make_product([Const(c)] + factors)


def _poly_expr(poly, atoms):
    terms = [_monomial_expr(m, c, atoms) for m, c in poly.terms()]
    if not terms:
        return ZERO
    terms.sort(key=sort_key)
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def _make_product(factors):
    coeff = Fraction(1)
    rest = []
    for f in factors:
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Product):
            for g in f.factors:
                if isinstance(g, Const):
                    coeff *= g.value
                else:
                    rest.append(g)
        else:
            rest.append(f)
    if coeff == 0:
        return ZERO
    rest.sort(key=sort_key)
    if coeff != 1 or not rest:
        rest.insert(0, Const(coeff))
    return rest[0] if len(rest) == 1 else Product(tuple(rest))


FACTOR_TERM_LIMIT = 40


def _factored(poly, atoms):
    """(rational content, list of (factor Expr, multiplicity))."""
    if poly.is_ground:
        c = poly.LC if poly else _QQ(0)
        return Fraction(int(c.numerator), int(c.denominator)), []
    if len(poly) > FACTOR_TERM_LIMIT:
        # multivariate factoring of large polynomials is too slow to pay off
        c = poly.LC
        return (Fraction(int(c.numerator), int(c.denominator)),
                [(_poly_expr(poly.quo_ground(c), atoms), 1)])
    coeff, facs = poly.factor_list()
    out = [(_poly_expr(p, atoms), k) for p, k in facs]
    return Fraction(int(coeff.numerator), int(coeff.denominator)), out


def _is_exp_monomial(e):
    return isinstance(e, Apply) and e.func == "exp"


def _from_frac(f, atoms):
    if not f.num:
        return ZERO
    cn, nf = _factored(f.num, atoms)
    cd, df = _factored(f.den, atoms)
    c = cn / cd
    num_factors = []
    den_factors = []
    for e, k in nf:
        if k != 1 and _is_exp_monomial(e):
            num_factors.append(Apply("exp", simplify(Product((Const(k), e.arg)))))
        else:
            num_factors.append(e if k == 1 else Power(e, k))
    for e, k in df:
        if _is_exp_monomial(e):
            # 1/exp(a)^k is written exp(-k*a)
            num_factors.append(Apply("exp", simplify(Product((Const(-k), e.arg)))))
        else:
            den_factors.append(e if k == 1 else Power(e, k))
    sums = [i for i, e in enumerate(num_factors) if isinstance(e, Sum)]
    if (c.denominator != 1 or c == -1) and len(sums) == 1:
        # fold a fractional content into the single sum factor
        i = sums[0]
        s = num_factors[i]
        num_factors[i] = Sum(tuple(sorted(
            (_make_product([Const(c), t]) for t in s.terms), key=sort_key)))
        c = Fraction(1)
    num = _make_product([Const(c)] + num_factors)
    if not den_factors:
        return num
    return Quotient(num, _make_product(den_factors))


# -------------------------------------------------------------- public API

@lru_cache(maxsize=None)
def simplify(e: Expr) -> Expr:
    """Return the canonical form of ``e``."""
    if isinstance(e, (Const, Var)):
        return e
    prepared = _prepare(e)
    exp_map = _exp_map(prepared)
    prepared = _rewrite(prepared, exp_map)
    atom_set = set()
    _atoms(prepared, atom_set, exp_map)
    atoms = sorted(atom_set, key=sort_key)
    index = {a: i for i, a in enumerate(atoms)}
    R = _ring(max(len(atoms), 1))
    f = _to_frac(prepared, R, index, {})
    relations = []
    for i, a in enumerate(atoms):
        if isinstance(a, Apply) and a.func == "cos":
            s = R.gens[index[Apply("sin", a.arg)]]
            relations.append((i, _Frac(R.one - s ** 2, R.one)))
        elif isinstance(a, Apply) and a.func == "sqrt":
            relations.append((i, _to_frac(_rewrite(a.arg, exp_map), R, index, {})))
    if relations and f.num:
        f = _apply_relations(f, relations)
    return _from_frac(f, atoms)


def is_zero(e: Expr) -> bool:
    return simplify(e) == ZERO


def equal(a: Expr, b: Expr) -> bool:
    """Canonical equality of two expressions."""
    return is_zero(Sum((a, Neg(b))))


# ------------------------------------------------------------ sympy bridge

_SYMPY_FUNCS = {"sin": sympy.sin, "cos": sympy.cos, "tan": sympy.tan,
                "exp": sympy.exp, "log": sympy.log, "sqrt": sympy.sqrt}


def to_sympy(e: Expr):
    """Translate an Expr into a sympy expression."""
    if isinstance(e, Const):
        return sympy.Rational(e.value.numerator, e.value.denominator)
    if isinstance(e, Var):
        return sympy.Symbol(e.label)
    if isinstance(e, Sum):
        return sympy.Add(*[to_sympy(t) for t in e.terms])
    if isinstance(e, Product):
        return sympy.Mul(*[to_sympy(f) for f in e.factors])
    if isinstance(e, Power):
        return sympy.Pow(to_sympy(e.base), e.exp)
    if isinstance(e, Neg):
        return -to_sympy(e.operand)
    if isinstance(e, Quotient):
        return to_sympy(e.num) / to_sympy(e.den)
    if isinstance(e, Apply):
        return _SYMPY_FUNCS[e.func](to_sympy(e.arg))
    raise TypeError(f"not an Expr: {e!r}")


def from_sympy(s) -> Expr:
    """Translate a sympy expression (in the supported language) into Expr."""
    if s.is_Rational:
        return Const(Fraction(int(s.p), int(s.q)))
    if s is sympy.E:
        return Apply("exp", ONE)
    if s in (sympy.zoo, sympy.oo, -sympy.oo, sympy.nan):
        raise DivisionByZero(f"expression is undefined: {s}")
    if s.is_Symbol:
        name, _, shift = s.name.partition("@")
        return Var(name, int(shift) if shift else 0)
    if s.is_Add:
        return Sum(tuple(from_sympy(a) for a in s.args))
    if s.is_Mul:
        return Product(tuple(from_sympy(a) for a in s.args))
    if s.is_Pow:
        ex = s.exp
        if ex.is_Integer:
            return Power(from_sympy(s.base), int(ex))
        if ex.is_Rational and ex.q == 2:
            root = Apply("sqrt", from_sympy(s.base))
            return Power(root, int(ex.p))
        if s.base is sympy.E:
            return Apply("exp", from_sympy(ex))
        raise UnsupportedExpression(f"unsupported power {s}")
    for name in ("sin", "cos", "tan", "exp", "log"):
        if isinstance(s, _SYMPY_FUNCS[name]):
            return Apply(name, from_sympy(s.args[0]))
    raise UnsupportedExpression(f"cannot represent {s} as an expression")


def canonical_sympy(e: Expr):
    return to_sympy(simplify(e))
