"""Straightening of involutive distributions (flow-box / Frobenius).

A distribution D of rank r on coordinates z is normalized to fields
g_k = ∂_{z_{p_k}} + Σ_{j non-pivot} c_kj ∂_{z_j}, which commute when D is
involutive.  Composing their flows backwards onto the slice
{z_p = base} gives first integrals I_j(z) of D; the new coordinates are
(I_j for non-pivot j, z_p for pivots), in which D = span{∂ over the pivot
coordinates}.  The forward flows give the inverse map.

Flows are computed in closed form for a tractable class of vector fields:
components that are affine in themselves with coefficients depending on
already-solved components (this covers polynomial nilpotent fields),
separable scalar components, and linear blocks with constant coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy

from ..symbolic import (Const, Var, ZERO, free_symbols, simplify, substitute,
                        to_text)
from ..symbolic.canonical import from_sympy, to_sympy
from ..symbolic.errors import SymbolicError
from ..symbolic.linsolve import dedupe_assumptions
from .fields import Distribution, VectorField, lie_bracket, normalize_fields


class StraighteningFailed(SymbolicError):
    def __init__(self, message, generators=()):
        super().__init__(message)
        self.generators = list(generators)


@dataclass
class Transformation:
    """Coordinate change new_i = forward_i(old) with inverse old_i = inverse_i(new)."""

    old: tuple
    new: tuple
    forward: tuple
    inverse: tuple
    straightened: tuple = ()
    assumptions: list = field(default_factory=list)
    kind: str = "flow"

    def forward_map(self):
        return dict(zip(self.new, self.forward))

    def inverse_map(self):
        return dict(zip(self.old, self.inverse))

    def to_new(self, e):
        """Rewrite an expression in the old coordinates in the new ones."""
        return substitute(e, self.inverse_map())

    def to_old(self, e):
        return substitute(e, self.forward_map())

    def is_identity(self):
        return all(f == o for f, o in zip(self.forward, self.old))

    def check_roundtrip(self):
        fwd = dict(zip(self.old, self.inverse))
        for n_, f in zip(self.new, self.forward):
            if simplify(substitute(f, fwd) - n_) != ZERO:
                return False
        back = dict(zip(self.new, self.forward))
        for o, inv in zip(self.old, self.inverse):
            if simplify(substitute(inv, back) - o) != ZERO:
                return False
        return True

    def to_json(self, label=lambda v: v.label):
        out = {label(n_): to_text(f) for n_, f in zip(self.new, self.forward)}
        out["inverse"] = {label(o): to_text(i) for o, i in zip(self.old, self.inverse)}
        out["assumptions"] = [f"{to_text(a)} != 0" for a in self.assumptions]
        return out


# ---------------------------------------------------------------- flows

_T = sympy.Symbol("_t")
_S = sympy.Symbol("_s")


def _integrate(expr, lo, hi):
    res = sympy.integrate(expr.subs(_T, _S), (_S, lo, hi), conds="none")
    if res.has(sympy.Integral) or res.has(sympy.Piecewise):
        raise StraighteningFailed(f"no closed-form integral of {expr}")
    return res


def _tidy(expr):
    expr = sympy.powsimp(sympy.expand_log(expr, force=True), combine="exp")
    return sympy.simplify(expr)


def flow(g: VectorField, coords, pivot):
    """Closed-form flow of a normalized field: map coordinate -> expression
    in the initial values and the time symbol ``Var('_t')``."""
    zs = [to_sympy(c) for c in coords]
    comp = {c: to_sympy(g.coeff(c)) for c in coords}
    sol = {}
    unsolved = []
    for c, z in zip(coords, zs):
        if c == pivot:
            sol[z] = z + _T
        elif comp[c] == 0:
            sol[z] = z
        else:
            unsolved.append((c, z))
    # paths are written with the initial values as the symbols themselves
    progress = True
    while unsolved and progress:
        progress = False
        for idx, (c, z) in enumerate(unsolved):
            others = {zz for _, zz in unsolved if zz is not z}
            rhs = comp[c]
            if rhs.free_symbols & others:
                continue
            y = sympy.Dummy("y")
            rhs_y = rhs.subs({**{k: v for k, v in sol.items()}, z: y}, simultaneous=True)
            alpha = sympy.diff(rhs_y, y)
            if sympy.diff(alpha, y) == 0:
                beta = sympy.simplify(rhs_y - alpha * y)
                A = _integrate(alpha, 0, _T)
                if beta == 0:
                    path = z * sympy.exp(A)
                else:
                    inner = _integrate(sympy.exp(-A) * beta, 0, _T)
                    path = sympy.exp(A) * (z + inner)
                sol[z] = _tidy(path)
            elif not rhs_y.has(_T) and rhs_y.free_symbols <= {y} | _params(rhs, zs):
                # separable: ∫ dy / rhs(y) = t
                G = sympy.integrate(1 / rhs_y, y)
                if G.has(sympy.Integral):
                    raise StraighteningFailed(f"no closed-form flow for {rhs}")
                cands = sympy.solve(sympy.Eq(G, G.subs(y, z) + _T), y)
                if len(cands) != 1:
                    raise StraighteningFailed(f"flow of {rhs} is not uniquely solvable")
                sol[z] = _tidy(cands[0])
            else:
                continue
            unsolved.pop(idx)
            progress = True
            break
    if unsolved:
        _linear_block(unsolved, comp, sol)
    return {c: from_sympy(sol[z]) for c, z in zip(coords, zs)}


def _params(expr, zs):
    return expr.free_symbols - set(zs)


def _linear_block(unsolved, comp, sol):
    """Remaining components form ż = A z + β(t) with constant A."""
    zs = [z for _, z in unsolved]
    rhs = [comp[c].subs({k: v for k, v in sol.items() if k not in zs},
                        simultaneous=True) for c, _ in unsolved]
    A = sympy.Matrix([[sympy.diff(r, z) for z in zs] for r in rhs])
    if any(e.free_symbols & set(zs) or e.has(_T) for e in A):
        raise StraighteningFailed("flow outside the supported closed-form class")
    beta = sympy.Matrix([sympy.expand(r - sum(A[i, j] * zs[j] for j in range(len(zs))))
                         for i, r in enumerate(rhs)])
    if any(e.free_symbols & set(zs) for e in beta):
        raise StraighteningFailed("flow outside the supported closed-form class")
    E = (A * _T).exp()
    path = E * sympy.Matrix(zs)
    if any(b != 0 for b in beta):
        integrand = (A * (_T - _S)).exp() * beta.subs(_T, _S)
        path += integrand.applyfunc(lambda e: sympy.integrate(e, (_S, 0, _T)))
    for z, p in zip(zs, path):
        p = sympy.simplify(sympy.expand(p.rewrite(sympy.cos)))
        if p.has(sympy.Integral) or p.has(sympy.I):
            raise StraighteningFailed("flow outside the supported closed-form class")
        sol[z] = _tidy(p)


# ---------------------------------------------------------- straightening

def straighten(D: Distribution, coords, new_names, base=None, reference=None,
               enabled=True) -> Transformation:
    """Coordinates on ``coords`` in which D is spanned by coordinate fields.

    ``new_names`` gives the symbols of the new coordinates, position by
    position; ``base`` fixes the slice through which first integrals are
    normalized (default: zero).  Symbols of D's frame outside ``coords``
    are treated as parameters and must have zero components.
    """
    coords = tuple(coords)
    new_names = tuple(new_names)
    if not enabled:
        raise StraighteningFailed("straightening disabled by configuration",
                                  D.generators)
    base = base or {}
    for g in D.generators:
        for v, c in zip(g.frame, g.coeffs):
            if v not in coords and c != ZERO:
                raise StraighteningFailed(f"component along {v.label} outside "
                                          "the straightened coordinates", D.generators)
    fields = [g.restrict(coords) if set(g.frame) <= set(coords)
              else VectorField(coords, [g.coeff(c) for c in coords])
              for g in D.generators]
    if not fields:
        return Transformation(coords, new_names, coords, new_names, (), [], "identity")
    try:
        normalized, pivot_cols, _ = normalize_fields(fields, list(range(len(coords))),
                                                      reference)
    except SymbolicError as exc:
        raise StraighteningFailed(str(exc), D.generators) from exc
    pivots = [coords[c] for c in pivot_cols]
    assumptions = []
    for i in range(len(normalized)):
        for j in range(i + 1, len(normalized)):
            if not lie_bracket(normalized[i], normalized[j]).is_zero():
                raise StraighteningFailed("normalized generators do not commute "
                                          "(distribution not involutive)", D.generators)
    new_of = dict(zip(coords, new_names))
    straightened = tuple(new_of[p] for p in pivots)
    if all(sum(1 for c in g.coeffs if c != ZERO) == 1 for g in normalized):
        T = Transformation(coords, new_names, coords,
                           tuple(new_of[c] for c in coords), straightened, [],
                           "identity")
        T.forward = tuple(coords)
        T.inverse = tuple(new_names)
        return T
    try:
        flows = [flow(g, coords, p) for g, p in zip(normalized, pivots)]
    except (SymbolicError, NotImplementedError, ValueError, TypeError) as exc:
        if isinstance(exc, StraighteningFailed):
            exc.generators = list(D.generators)
            raise
        raise StraighteningFailed(f"flow computation failed: {exc}", D.generators) from exc
    t = Var("_t")
    b = {p: Const(base.get(p, 0)) for p in pivots}
    # first integrals: flow back onto the slice z_p = base
    point = {c: c for c in coords}
    for fl, p in zip(flows, pivots):
        time = simplify(b[p] - point[p])
        bind = dict(point)
        bind[t] = time
        point = {c: substitute(fl[c], bind) for c in coords}
    forward = []
    for c in coords:
        forward.append(c if c in pivots else point[c])
    # inverse: start on the slice, flow forward by z̄_p - base
    point = {c: (b[c] if c in pivots else new_of[c]) for c in coords}
    for fl, p in reversed(list(zip(flows, pivots))):
        bind = dict(point)
        bind[t] = simplify(new_of[p] - b[p])
        point = {c: substitute(fl[c], bind) for c in coords}
    inverse = [point[c] for c in coords]
    forward = [simplify(f) for f in forward]
    # forward expressions are written in the old symbols
    T = Transformation(coords, new_names, tuple(forward), tuple(inverse),
                       straightened, dedupe_assumptions(assumptions), "flow")
    _verify(D, T, pivots)
    return T


def _verify(D, T, pivots):
    invariants = [f for c, f in zip(T.old, T.forward) if c not in pivots]
    for g in D.generators:
        for f in invariants:
            if g.apply(f) != ZERO:
                raise StraighteningFailed("computed first integral is not invariant",
                                          D.generators)
    if not T.check_roundtrip():
        raise StraighteningFailed("straightening map failed the inverse check",
                                  D.generators)


def check_transformation(D: Distribution, T: Transformation) -> bool:
    """Accept a user-supplied straightening: invariance plus round trip."""
    pivots = [o for o, n_ in zip(T.old, T.new) if n_ in T.straightened]
    try:
        _verify(D, T, pivots)
    except StraighteningFailed:
        return False
    return True
