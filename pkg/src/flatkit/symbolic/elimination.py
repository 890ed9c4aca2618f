"""Triangular elimination for nonlinear systems.

Each step picks an equation that is linear in one remaining unknown with a
coefficient free of all remaining unknowns, solves it, and substitutes the
result everywhere else.  This covers maps that are invertible by successive
isolation of variables, which is the class used for chart inversion and for
the symbolic construction of parametrizations.
"""

from __future__ import annotations

from .calculus import differentiate, substitute
from .canonical import simplify
from .errors import InversionFailed
from .expr import Const, Neg, Quotient, Var, ZERO, free_symbols
from .linsolve import dedupe_assumptions, pivot_score


def _numerator(e):
    if isinstance(e, Quotient):
        return e.num, e.den
    return e, None


def solve_triangular(equations, targets, aux=(), reference=None):
    """Solve ``equations == 0`` for ``targets``.

    ``aux`` lists further unknowns that may be eliminated along the way but
    must not appear in the final expressions for the targets.  Returns
    ``(solution, assumptions)`` with ``assumptions`` the nonconstant pivots
    and denominators assumed nonzero.  Raises InversionFailed.
    """
    targets = list(targets)
    aux = list(aux)
    remaining = set(targets) | set(aux)
    eqs = [simplify(e) for e in equations]
    solved = {}
    assumptions = []
    while remaining & set(targets):
        best = None
        for ei, eq in enumerate(eqs):
            if eq == ZERO:
                continue
            num, _ = _numerator(eq)
            present = free_symbols(num) & remaining
            for z in present:
                c = differentiate(num, z)
                if c == ZERO or free_symbols(c) & remaining:
                    continue
                key = (pivot_score(c, reference)[0], len(present),
                       z not in targets, pivot_score(c, reference)[1], ei,
                       (z.name, z.shift))
                if best is None or key < best[0]:
                    best = (key, ei, z, c)
        if best is None:
            unsolved = sorted(remaining & set(targets), key=lambda v: (v.name, v.shift))
            raise InversionFailed("no equation is linear in a remaining unknown "
                                  "with an unknown-free coefficient", unsolved)
        _, ei, z, c = best
        num, den = _numerator(eqs[ei])
        if den is not None and not isinstance(den, Const):
            assumptions.append(den)
        if not isinstance(c, Const):
            assumptions.append(c)
        value = simplify(Quotient(Neg(substitute(num, {z: ZERO})), c))
        binding = {z: value}
        solved = {k: substitute(v, binding) for k, v in solved.items()}
        solved[z] = value
        remaining.discard(z)
        eqs = [substitute(e, binding) for i, e in enumerate(eqs) if i != ei]
    result = {}
    for t in targets:
        if free_symbols(solved[t]) & set(aux):
            raise InversionFailed(f"solution for {t.label} still depends on "
                                  "auxiliary unknowns", [t])
        result[t] = solved[t]
    return result, dedupe_assumptions(assumptions)
