"""Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' integer)? | '-' factor
    atom   := number | ident | func '(' expr ')' | '(' expr ')'
    number := integer ('/' positive-integer)?
    ident  := letter (letter|digit|'_')* ('@' digit+)?

Offsets in error messages are byte offsets into the UTF-8 encoded input.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .canonical import simplify
from .errors import ExprSyntaxError, UnknownSymbol
from .expr import FUNCTIONS, Apply, Const, Neg, Power, Product, Quotient, Sum, Var

_TOKEN = re.compile(rb"""
    (?P<ws>\s+)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*(?:@[0-9]+)?)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _tokenize(data):
    tokens = []
    pos = 0
    while pos < len(data):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {data[pos:pos + 1]!r}",
                                  pos, data.decode("utf-8", "replace"))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group().decode("ascii"), pos))
        pos = m.end()
    tokens.append(("end", "", len(data)))
    return tokens


class _Parser:
    def __init__(self, text, vars):
        self.text = text
        self.vars = vars
        self.tokens = _tokenize(text.encode("utf-8"))
        self.i = 0

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(message, tok[2], self.text)

    def expect_op(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.error(f"expected {op!r}", tok)

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Sum(terms)

    def term(self):
        e = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.factor()
            e = Product((e, rhs)) if op == "*" else Quotient(e, rhs)
        return e

    def factor(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.factor())
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            exp_tok = self.take()
            if exp_tok[0] != "int":
                self.error("exponent must be an integer literal", exp_tok)
            return Power(base, int(exp_tok[1]))
        return base

    def atom(self):
        tok = self.take()
        kind, text, offset = tok
        if kind == "int":
            value = Fraction(int(text))
            nxt, after = self.peek(), self.peek(1)
            if nxt[0] == "op" and nxt[1] == "/" and after[0] == "int":
                den = int(after[1])
                if den == 0:
                    self.error("zero denominator in number", after)
                self.i += 2
                value /= den
            return Const(value)
        if kind == "ident":
            if text in FUNCTIONS and self.peek()[1] == "(":
                self.take()
                arg = self.expr()
                self.expect_op(")")
                return Apply(text, arg)
            return self.symbol(text, offset)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        self.error("expected a number, symbol or '('", tok)

    def symbol(self, text, offset):
        name, _, shift = text.partition("@")
        if self.vars is not None:
            if name not in self.vars:
                raise UnknownSymbol(name, offset)
            value = self.vars.param_value(name)
            if value is not None:
                if shift:
                    raise ExprSyntaxError("parameters cannot be shifted",
                                          offset, self.text)
                return Const(value)
        return Var(name, int(shift) if shift else 0)


def parse_raw(text, vars=None):
    """Parse without canonicalizing."""
    return _Parser(text, vars).parse()


def parse(text, vars=None):
    """Parse ``text`` into a canonical Expr.

    With ``vars`` given, every identifier must be registered there and
    parameters are replaced by their values.
    """
    return simplify(parse_raw(text, vars))
