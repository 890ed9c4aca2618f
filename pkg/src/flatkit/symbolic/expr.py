"""Immutable expression trees.

Nodes are hashable and compare structurally.  Arithmetic operators build raw
(unsimplified) trees; call :func:`flatkit.symbolic.simplify` to bring a tree
into canonical form.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")

# canonical ordering between node kinds
_RANK = {"Const": 0, "Var": 1, "Apply": 2, "Power": 3, "Neg": 4,
         "Product": 5, "Quotient": 6, "Sum": 7}


class Expr:
    __slots__ = ("_hash",)

    def _args(self):
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return hash(self) == hash(other) and self._args() == other._args()

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._args()))
            object.__setattr__(self, "_hash", h)
            return h

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    # arithmetic builds raw trees
    def __add__(self, other):
        return Sum((self, as_expr(other)))

    def __radd__(self, other):
        return Sum((as_expr(other), self))

    def __sub__(self, other):
        return Sum((self, Neg(as_expr(other))))

    def __rsub__(self, other):
        return Sum((as_expr(other), Neg(self)))

    def __mul__(self, other):
        return Product((self, as_expr(other)))

    def __rmul__(self, other):
        return Product((as_expr(other), self))

    def __truediv__(self, other):
        return Quotient(self, as_expr(other))

    def __rtruediv__(self, other):
        return Quotient(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("only integer exponents are supported")
        return Power(self, k)

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"<{type(self).__name__} {to_text(self)}>"

    @property
    def children(self):
        return ()


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, bool) or not isinstance(value, (int, Rational)):
            raise TypeError(f"Const needs an exact rational, got {value!r}")
        _init(self, value=Fraction(value))

    def _args(self):
        return (self.value,)


class Var(Expr):
    """A symbol; ``shift`` is the forward-shift index (``u1@2``)."""

    __slots__ = ("name", "shift")

    def __init__(self, name, shift=0):
        if shift < 0:
            raise ValueError("negative shift")
        _init(self, name=name, shift=int(shift))

    def _args(self):
        return (self.name, self.shift)

    def shifted(self, k=1):
        return Var(self.name, self.shift + k)

    @property
    def label(self):
        return self.name if self.shift == 0 else f"{self.name}@{self.shift}"


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        _init(self, terms=tuple(terms))

    def _args(self):
        return self.terms

    @property
    def children(self):
        return self.terms


class Product(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        _init(self, factors=tuple(factors))

    def _args(self):
        return self.factors

    @property
    def children(self):
        return self.factors


class Power(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base, exp):
        _init(self, base=base, exp=int(exp))

    def _args(self):
        return (self.base, self.exp)

    @property
    def children(self):
        return (self.base,)


class Apply(Expr):
    __slots__ = ("func", "arg")

    def __init__(self, func, arg):
        if func not in FUNCTIONS:
            raise ValueError(f"unknown function {func!r}")
        _init(self, func=func, arg=arg)

    def _args(self):
        return (self.func, self.arg)

    @property
    def children(self):
        return (self.arg,)


class Neg(Expr):
    __slots__ = ("operand",)

    def __init__(self, operand):
        _init(self, operand=operand)

    def _args(self):
        return (self.operand,)

    @property
    def children(self):
        return (self.operand,)


class Quotient(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        _init(self, num=num, den=den)

    def _args(self):
        return (self.num, self.den)

    @property
    def children(self):
        return (self.num, self.den)


ZERO = Const(0)
ONE = Const(1)


def as_expr(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Rational)) and not isinstance(value, bool):
        return Const(value)
    if isinstance(value, str):
        return Var(value)
    raise TypeError(f"cannot convert {value!r} to Expr")


def func(name, arg):
    return Apply(name, as_expr(arg))


def sin(e):
    return Apply("sin", as_expr(e))


def cos(e):
    return Apply("cos", as_expr(e))


def exp(e):
    return Apply("exp", as_expr(e))


def free_symbols(e):
    """Set of :class:`Var` nodes occurring in ``e``."""
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node)
        else:
            stack.extend(node.children)
    return out


def depends_on(e, symbols):
    symbols = set(symbols)
    return any(s in symbols for s in free_symbols(e))


def is_const(e, value=None):
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


def sort_key(e):
    """Total order: constants < variables < Apply < Power < Product < Sum."""
    kind = type(e).__name__
    rank = _RANK[kind]
    if kind == "Const":
        return (rank, e.value)
    if kind == "Var":
        return (rank, e.name, e.shift)
    if kind == "Apply":
        return (rank, e.func, sort_key(e.arg))
    if kind == "Power":
        return (rank, sort_key(e.base), e.exp)
    if kind == "Neg":
        return (rank, sort_key(e.operand))
    if kind == "Quotient":
        return (rank, sort_key(e.num), sort_key(e.den))
    if kind == "Product":
        # order by the symbolic part first, then by the coefficient
        rest = [f for f in e.factors if not isinstance(f, Const)]
        coeff = [f.value for f in e.factors if isinstance(f, Const)]
        return (rank, len(rest), tuple(sort_key(c) for c in rest), tuple(coeff))
    return (rank, len(e.children), tuple(sort_key(c) for c in e.children))


# ---------------------------------------------------------------- printing

_PREC_SUM, _PREC_PROD, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _const_text(v):
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _is_negative_coeff(e):
    return isinstance(e, Const) and e.value < 0


def _prec(e):
    if isinstance(e, Const):
        if e.value < 0:
            return _PREC_UNARY
        return _PREC_ATOM if e.value.denominator == 1 else _PREC_PROD
    if isinstance(e, (Var, Apply)):
        return _PREC_ATOM
    if isinstance(e, Power):
        return _PREC_POW if e.exp >= 0 else _PREC_PROD
    if isinstance(e, Neg):
        return _PREC_UNARY
    if isinstance(e, Product):
        if not e.factors:
            return _PREC_ATOM
        return _PREC_UNARY if _is_negative_coeff(e.factors[0]) else _PREC_PROD
    if isinstance(e, Quotient):
        return _PREC_PROD
    if isinstance(e, Sum):
        if not e.terms:
            return _PREC_ATOM
        return _PREC_SUM if len(e.terms) > 1 else _prec(e.terms[0])
    raise TypeError(f"not an Expr: {e!r}")


def _wrap(e, min_prec):
    text = to_text(e)
    return f"({text})" if _prec(e) < min_prec else text


def _split_sign(e):
    """Return (negative, magnitude) for printing a summand."""
    if isinstance(e, Neg):
        return True, e.operand
    if _is_negative_coeff(e):
        return True, Const(-e.value)
    if isinstance(e, Product) and e.factors and _is_negative_coeff(e.factors[0]):
        c = -e.factors[0].value
        rest = e.factors[1:]
        if c != 1:
            return True, Product((Const(c),) + rest)
        if len(rest) == 1:
            return True, rest[0]
        return True, Product(rest)
    return False, e


def to_text(e):
    """Render ``e`` in the input grammar (re-parsable)."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return e.label
    if isinstance(e, Apply):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Power):
        if e.exp < 0:
            return f"1/{to_text(Power(e.base, -e.exp))}"
        return f"{_wrap(e.base, _PREC_ATOM)}^{e.exp}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.operand, _PREC_PROD)}"
    if isinstance(e, Quotient):
        num = _wrap(e.num, _PREC_PROD)
        den = _wrap(e.den, _PREC_POW)
        # "a/2/3" would re-read as a/(2/3) because "2/3" is a number token
        if num[-1].isdigit() and den[0].isdigit():
            den = f"({den})"
        return f"{num}/{den}"
    if isinstance(e, Product):
        if not e.factors:
            return "1"
        neg, body = _split_sign(e)
        if neg:
            return f"-{_wrap(body, _PREC_PROD)}"
        return "*".join(_wrap(f, _PREC_PROD) for f in e.factors)
    if isinstance(e, Sum):
        if not e.terms:
            return "0"
        # constants are printed last for readability
        terms = [t for t in e.terms if not isinstance(t, Const)]
        terms += [t for t in e.terms if isinstance(t, Const)]
        out = []
        for i, t in enumerate(terms):
            neg, body = _split_sign(t)
            if i == 0:
                out.append(f"-{_wrap(body, _PREC_PROD)}" if neg else _wrap(t, _PREC_SUM))
            elif neg:
                out.append(f" - {_wrap(body, _PREC_PROD)}")
            else:
                out.append(f" + {_wrap(t, _PREC_PROD)}")
        return "".join(out)
    raise TypeError(f"not an Expr: {e!r}")
