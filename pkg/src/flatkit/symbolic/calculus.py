"""Differentiation and substitution."""

from __future__ import annotations

from .canonical import simplify
from .expr import (Apply, Const, Expr, Neg, Power, Product, Quotient, Sum, Var,
                   ZERO, ONE, as_expr)


def _d(e, v):
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e == v else ZERO
    if isinstance(e, Sum):
        return Sum(tuple(_d(t, v) for t in e.terms))
    if isinstance(e, Neg):
        return Neg(_d(e.operand, v))
    if isinstance(e, Product):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = _d(f, v)
            if df != ZERO:
                terms.append(Product(fs[:i] + (df,) + fs[i + 1:]))
        return Sum(tuple(terms)) if terms else ZERO
    if isinstance(e, Power):
        if e.exp == 0:
            return ZERO
        return Product((Const(e.exp), Power(e.base, e.exp - 1), _d(e.base, v)))
    if isinstance(e, Quotient):
        dn, dd = _d(e.num, v), _d(e.den, v)
        return Quotient(Sum((Product((dn, e.den)), Neg(Product((e.num, dd))))),
                        Power(e.den, 2))
    if isinstance(e, Apply):
        a = e.arg
        da = _d(a, v)
        if da == ZERO:
            return ZERO
        if e.func == "sin":
            outer = Apply("cos", a)
        elif e.func == "cos":
            outer = Neg(Apply("sin", a))
        elif e.func == "tan":
            outer = Quotient(ONE, Power(Apply("cos", a), 2))
        elif e.func == "exp":
            outer = e
        elif e.func == "log":
            outer = Quotient(ONE, a)
        else:  # sqrt
            outer = Quotient(ONE, Product((Const(2), e)))
        return Product((outer, da))
    raise TypeError(f"not an Expr: {e!r}")


def differentiate(e: Expr, v: Var) -> Expr:
    """Canonical partial derivative of ``e`` with respect to ``v``."""
    return simplify(_d(e, v))


def gradient(e, symbols):
    return [differentiate(e, s) for s in symbols]


def jacobian(exprs, symbols):
    return [[differentiate(e, s) for s in symbols] for e in exprs]


def jacobian_raw(exprs, symbols):
    """Jacobian without canonicalization, for numeric evaluation only."""
    return [[_d(e, s) for s in symbols] for e in exprs]


def substitute_raw(e: Expr, bindings) -> Expr:
    """Simultaneous substitution without canonicalization."""
    if not bindings:
        return e
    if isinstance(e, Var):
        return bindings.get(e, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Sum):
        return Sum(tuple(substitute_raw(t, bindings) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(substitute_raw(t, bindings) for t in e.factors))
    if isinstance(e, Power):
        return Power(substitute_raw(e.base, bindings), e.exp)
    if isinstance(e, Neg):
        return Neg(substitute_raw(e.operand, bindings))
    if isinstance(e, Quotient):
        return Quotient(substitute_raw(e.num, bindings),
                        substitute_raw(e.den, bindings))
    if isinstance(e, Apply):
        return Apply(e.func, substitute_raw(e.arg, bindings))
    raise TypeError(f"not an Expr: {e!r}")


def substitute(e: Expr, bindings) -> Expr:
    """Simultaneously replace symbols by expressions, then canonicalize.

    ``bindings`` maps :class:`Var` (or symbol names) to Exprs or rationals.
    """
    norm = {}
    for k, val in bindings.items():
        key = Var(k) if isinstance(k, str) else k
        norm[key] = as_expr(val)
    return simplify(substitute_raw(e, norm))
