"""Discrete-time systems x⁺ = f(x, u), forward shifts and flat-output data."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .symbolic import (Const, DivisionByZero, Expr, ExprSyntaxError, Var, VarTable, ZERO,
                       free_symbols, generic_rank, jacobian, parse, simplify,
                       substitute, to_text)
from .symbolic.errors import SymbolicError


class InvalidSystem(SymbolicError):
    """Invalid system definition."""


class SystemFileError(InvalidSystem):
    def __init__(self, message, line=None):
        where = "" if line is None else f"line {line}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class DiscreteSystem:
    """x⁺ = f(x, u) with a declared equilibrium (x₀, u₀)."""

    states: tuple
    inputs: tuple
    updates: tuple
    equilibrium: dict = field(default_factory=dict, hash=False, compare=False)
    name: str = "system"
    params: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "updates", tuple(simplify(f) for f in self.updates))
        eq = {s: Fraction(self.equilibrium.get(s, 0))
              for s in self.states + self.inputs}
        object.__setattr__(self, "equilibrium", eq)
        if not self.states or not self.inputs:
            raise InvalidSystem("a system needs at least one state and one input")
        if len(self.updates) != len(self.states):
            raise InvalidSystem("one update law per state is required")
        names = [v.name for v in self.states + self.inputs]
        if len(set(names)) != len(names):
            raise InvalidSystem("state and input names must be unique")
        allowed = set(self.states) | set(self.inputs)
        for f in self.updates:
            extra = free_symbols(f) - allowed
            if extra:
                bad = sorted(v.label for v in extra)
                raise InvalidSystem(f"update law {f} uses unknown symbols {bad}")

    @property
    def n(self):
        return len(self.states)

    @property
    def m(self):
        return len(self.inputs)

    @property
    def coords(self):
        return self.states + self.inputs

    def update_map(self):
        return dict(zip(self.states, self.updates))

    def vartable(self):
        t = VarTable()
        for s in self.states:
            t.add(s.name, "state")
        for u in self.inputs:
            t.add(u.name, "input")
        for p, v in self.params.items():
            t.add_param(p, v)
        return t

    def parse(self, text):
        """Parse an expression in this system's symbols."""
        return parse(text, self.vartable())

    def input_jacobian(self):
        return jacobian(self.updates, self.inputs)

    def full_jacobian(self):
        return jacobian(self.updates, self.coords)

    def center(self, max_shift=0):
        """Equilibrium values including shifted inputs (constant inputs)."""
        c = dict(self.equilibrium)
        for u in self.inputs:
            for k in range(1, max_shift + 1):
                c[u.shifted(k)] = self.equilibrium[u]
        return c

    def describe(self):
        lines = [f"system {self.name}",
                 "states " + " ".join(s.name for s in self.states),
                 "inputs " + " ".join(u.name for u in self.inputs)]
        for s, f in zip(self.states, self.updates):
            lines.append(f"next {s.name} = {to_text(f)}")
        return "\n".join(lines)


@dataclass
class FlatOutputCandidate:
    components: list
    max_shift: int = 0

    def __post_init__(self):
        self.components = [simplify(c) for c in self.components]
        shifts = [v.shift for c in self.components for v in free_symbols(c)]
        self.max_shift = max([self.max_shift] + shifts)


@dataclass
class Parametrization:
    """(x, u) = F(y_[0,R]); ``y`` holds the base output symbols."""

    F_x: list
    F_u: list
    R: tuple
    y: list
    assumptions: list = field(default_factory=list)
    components: list = field(default_factory=list)


# ------------------------------------------------------------------ shifts

def shift_bindings(e, sys: DiscreteSystem):
    """Bindings realizing one forward shift on the symbols of ``e``."""
    fmap = sys.update_map()
    inputs = {u.name for u in sys.inputs}
    bind = {}
    for v in free_symbols(e):
        if v in fmap:
            bind[v] = fmap[v]
        elif v.name in inputs:
            bind[v] = v.shifted(1)
    return bind


def shift_xu(e: Expr, sys: DiscreteSystem, times: int = 1) -> Expr:
    """Apply the forward shift δ_xu ``times`` times."""
    if times < 0:
        raise ValueError("times must be non-negative")
    out = simplify(e)
    for _ in range(times):
        out = substitute(out, shift_bindings(out, sys))
    return out


def shift_output(e: Expr, y_names, times: int = 1) -> Expr:
    """Shift every output symbol ``y@k`` to ``y@(k+times)``."""
    names = set(y_names)
    bind = {v: v.shifted(times) for v in free_symbols(e) if v.name in names}
    return substitute(e, bind)


# ----------------------------------------------------------------- checks

def value_at(e: Expr, point) -> Expr:
    """Exact value of ``e`` at ``point``.

    A removable singularity (such as sin(a*u)/u at u = 0) makes the direct
    substitution undefined; the value is then taken as the iterated limit,
    one coordinate at a time, which agrees with the value of the smooth
    extension.
    """
    try:
        return substitute(e, point)
    except DivisionByZero:
        pass
    import sympy
    from .symbolic.canonical import canonical_sympy, from_sympy, to_sympy
    s = canonical_sympy(e)
    for var, val in sorted(point.items(), key=lambda kv: (kv[0].name, kv[0].shift)):
        sym = to_sympy(var)
        if sym in s.free_symbols:
            s = sympy.limit(s, sym, sympy.Rational(val.numerator, val.denominator))
    return simplify(from_sympy(s))


def check_equilibrium(sys: DiscreteSystem):
    """``True`` when f(x₀,u₀) = x₀ exactly, else the list of residuals."""
    point = sys.equilibrium
    residuals = [simplify(value_at(f, point) - Const(point[s]))
                 for s, f in zip(sys.states, sys.updates)]
    if all(r == ZERO for r in residuals):
        return True
    return residuals


def _jet_symbols(exprs):
    syms = set()
    for e in exprs:
        syms |= free_symbols(e)
    return sorted(syms, key=lambda v: (v.name, v.shift))


def stacked_shifts(exprs, sys, upto_shift):
    rows = []
    for e in exprs:
        cur = simplify(e)
        rows.append(cur)
        for _ in range(upto_shift):
            cur = shift_xu(cur, sys)
            rows.append(cur)
    return rows


def functional_independence(exprs, upto_shift, sys, seed=42, trials=8):
    """Generic full row rank of the stacked Jacobian of the shifted exprs."""
    rows = stacked_shifts(exprs, sys, upto_shift)
    coords = list(sys.coords)
    for u in sys.inputs:
        for k in range(1, upto_shift + _max_shift(rows) + 1):
            coords.append(u.shifted(k))
    coords += [v for v in _jet_symbols(rows) if v not in coords]
    J = jacobian(rows, coords)
    return generic_rank(J, coords, trials, seed, sys.center(_max_shift(rows))) == len(rows)


def _max_shift(exprs):
    return max([0] + [v.shift for e in exprs for v in free_symbols(e)])


def submersion_rank(sys, seed=42, trials=8):
    return generic_rank(sys.full_jacobian(), sys.coords, trials, seed, sys.center())


def input_rank(sys, seed=42, trials=8):
    return generic_rank(sys.input_jacobian(), sys.coords, trials, seed, sys.center())


# ------------------------------------------------------------ file format

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


def parse_system(text: str) -> DiscreteSystem:
    """Read the line-oriented system description format."""
    name = "system"
    states, inputs = [], []
    table = VarTable()
    nexts = {}
    eq_text = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if keyword == "system":
                name = rest or name
            elif keyword == "param":
                pname, _, value = rest.partition("=")
                pname = pname.strip()
                _check_ident(pname, lineno)
                val = parse(value.strip())
                if not isinstance(val, Const):
                    raise SystemFileError("parameter value must be a rational", lineno)
                if val.value == 0:
                    raise SystemFileError("parameters must be nonzero", lineno)
                table.add_param(pname, val.value)
            elif keyword in ("states", "inputs"):
                names = rest.split()
                for n_ in names:
                    _check_ident(n_, lineno)
                    table.add(n_, "state" if keyword == "states" else "input")
                (states if keyword == "states" else inputs).extend(Var(n_) for n_ in names)
            elif keyword == "next":
                lhs, eqsign, rhs = rest.partition("=")
                lhs = lhs.strip()
                if not eqsign or Var(lhs) not in states:
                    raise SystemFileError(f"'next' needs a declared state, got {lhs!r}",
                                          lineno)
                if Var(lhs) in nexts:
                    raise SystemFileError(f"duplicate update law for {lhs}", lineno)
                nexts[Var(lhs)] = parse(rhs, table)
            elif keyword == "equilibrium":
                eq_text = (rest, lineno)
            else:
                raise SystemFileError(f"unknown keyword {keyword!r}", lineno)
        except (ExprSyntaxError, SymbolicError) as exc:
            if isinstance(exc, SystemFileError):
                raise
            raise SystemFileError(str(exc), lineno) from exc
    missing = [s.name for s in states if s not in nexts]
    if missing:
        raise SystemFileError(f"missing update laws for {missing}")
    equilibrium = {}
    if eq_text is not None:
        rest, lineno = eq_text
        for item in rest.split():
            k, eqsign, v = item.partition("=")
            if not eqsign or Var(k) not in states + inputs:
                raise SystemFileError(f"bad equilibrium entry {item!r}", lineno)
            val = parse(v)
            if not isinstance(val, Const):
                raise SystemFileError("equilibrium values must be rational", lineno)
            equilibrium[Var(k)] = val.value
    try:
        return DiscreteSystem(states, inputs, [nexts[s] for s in states],
                              equilibrium, name, table.params)
    except InvalidSystem as exc:
        raise SystemFileError(str(exc)) from exc


def _check_ident(name, lineno):
    if not _IDENT.match(name):
        raise SystemFileError(f"invalid identifier {name!r}", lineno)


def load_system(path) -> DiscreteSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())
