"""Numeric evaluation of expressions.

Rational subexpressions are folded exactly; transcendental nodes switch to a
numeric backend: IEEE floats (``evaluate``), mpmath multiprecision
(``evaluate_mp``) or mpmath interval arithmetic (``evaluate_iv``).
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath

from .errors import DivisionByZero, DomainError, EvaluationError
from .expr import Apply, Const, Expr, Neg, Power, Product, Quotient, Sum, Var


class _FloatBackend:
    def lift(self, q):
        return float(q)

    def is_zero(self, x):
        return x == 0

    def maybe_zero(self, x):
        return x == 0

    def maybe_nonpositive(self, x):
        return x <= 0

    def maybe_negative(self, x):
        return x < 0

    def apply(self, name, x):
        try:
            if name == "sin":
                return math.sin(x)
            if name == "cos":
                return math.cos(x)
            if name == "tan":
                return math.tan(x)
            if name == "exp":
                return math.exp(x)
            if name == "log":
                return math.log(x)
            return math.sqrt(x)
        except OverflowError as exc:
            raise EvaluationError(f"overflow in {name}") from exc


class _MpBackend(_FloatBackend):
    def __init__(self, ctx):
        self.ctx = ctx

    def lift(self, q):
        return self.ctx.mpf(q.numerator) / q.denominator

    def apply(self, name, x):
        return getattr(self.ctx, name)(x)


class _IvBackend(_MpBackend):
    def __init__(self):
        super().__init__(mpmath.iv)

    def lift(self, q):
        return self.ctx.mpf(q.numerator) / q.denominator

    def maybe_zero(self, x):
        return x.a <= 0 <= x.b

    def maybe_nonpositive(self, x):
        return x.a <= 0

    def maybe_negative(self, x):
        return x.a < 0


def _exact_apply(name, q):
    """Exact value of a function at a rational point, or None."""
    if name in ("sin", "tan") and q == 0:
        return Fraction(0)
    if name == "cos" and q == 0:
        return Fraction(1)
    if name == "exp" and q == 0:
        return Fraction(1)
    if name == "log" and q == 1:
        return Fraction(0)
    if name == "sqrt" and q >= 0:
        n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
        if n * n == q.numerator and d * d == q.denominator:
            return Fraction(n, d)
    return None


def _eval(e, point, be):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            v = point[e]
        except KeyError:
            raise EvaluationError(f"unbound symbol {e.label}", e) from None
        if isinstance(v, int):
            v = Fraction(v)
        return v
    if isinstance(e, (Sum, Product)):
        vals = [_eval(c, point, be) for c in e.children]
        exact = [v for v in vals if isinstance(v, Fraction)]
        inexact = [v for v in vals if not isinstance(v, Fraction)]
        if isinstance(e, Sum):
            acc = sum(exact, Fraction(0))
            for v in inexact:
                acc = v + (be.lift(acc) if isinstance(acc, Fraction) else acc)
            return acc
        acc = Fraction(1)
        for v in exact:
            acc *= v
        for v in inexact:
            acc = v * (be.lift(acc) if isinstance(acc, Fraction) else acc)
        return acc
    if isinstance(e, Neg):
        return -_eval(e.operand, point, be)
    if isinstance(e, Power):
        b = _eval(e.base, point, be)
        if e.exp < 0 and (b == 0 if isinstance(b, Fraction) else be.maybe_zero(b)):
            raise DivisionByZero(f"division by zero in {e}", e)
        if isinstance(b, Fraction):
            return b ** e.exp
        return b ** e.exp
    if isinstance(e, Quotient):
        n = _eval(e.num, point, be)
        d = _eval(e.den, point, be)
        if isinstance(d, Fraction):
            if d == 0:
                raise DivisionByZero(f"division by zero in {e}", e)
            if isinstance(n, Fraction):
                return n / d
            d = be.lift(d)
        elif be.maybe_zero(d):
            raise DivisionByZero(f"division by zero in {e}", e)
        if isinstance(n, Fraction):
            n = be.lift(n)
        return n / d
    if isinstance(e, Apply):
        a = _eval(e.arg, point, be)
        if isinstance(a, Fraction):
            exact = _exact_apply(e.func, a)
            if exact is not None:
                return exact
        if e.func == "log" and (a <= 0 if isinstance(a, Fraction)
                                else be.maybe_nonpositive(a)):
            raise DomainError(f"log of non-positive value in {e}", e)
        if e.func == "sqrt" and (a < 0 if isinstance(a, Fraction)
                                 else be.maybe_negative(a)):
            raise DomainError(f"sqrt of negative value in {e}", e)
        if e.func == "tan":
            c = be.apply("cos", be.lift(a) if isinstance(a, Fraction) else a)
            if be.maybe_zero(c):
                raise DivisionByZero(f"tan at a pole in {e}", e)
        return be.apply(e.func, be.lift(a) if isinstance(a, Fraction) else a)
    raise TypeError(f"not an Expr: {e!r}")


def _prepare(point):
    out = {}
    for k, v in point.items():
        key = Var(k) if isinstance(k, str) else k
        out[key] = v
    return out


def evaluate_exact(e: Expr, point):
    """Exact rational value or None when a transcendental value is needed."""
    try:
        v = _eval(e, _prepare(point), _NoInexact())
    except _Inexact:
        return None
    return v


class _Inexact(Exception):
    pass


class _NoInexact(_FloatBackend):
    def lift(self, q):
        raise _Inexact

    def apply(self, name, x):
        raise _Inexact


def evaluate(e: Expr, point) -> float:
    """IEEE double value of ``e`` at ``point`` (Var or name → number)."""
    be = _FloatBackend()
    pt = {k: (v if isinstance(v, (Fraction, int)) else float(v))
          for k, v in _prepare(point).items()}
    v = _eval(e, pt, be)
    v = float(v)
    if math.isnan(v) or math.isinf(v):
        raise EvaluationError(f"non-finite value for {e}", e)
    return v


_MP_CONTEXTS = {}


def _mp_context(dps):
    ctx = _MP_CONTEXTS.get(dps)
    if ctx is None:
        ctx = mpmath.mp.clone()
        ctx.dps = dps
        _MP_CONTEXTS[dps] = ctx
    return ctx


def evaluate_mp(e: Expr, point, dps=50):
    """Multiprecision value; point values may be rationals or mpf."""
    ctx = _mp_context(dps)
    v = _eval(e, _prepare(point), _MpBackend(ctx))
    return ctx.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else v


def evaluate_iv(e: Expr, point, prec=120):
    """Rigorous enclosure (mpmath interval) of ``e`` at a rational point."""
    old = mpmath.iv.prec
    mpmath.iv.prec = prec
    try:
        v = _eval(e, _prepare(point), _IvBackend())
        if isinstance(v, Fraction):
            v = mpmath.iv.mpf(v.numerator) / v.denominator
        return v
    finally:
        mpmath.iv.prec = old
