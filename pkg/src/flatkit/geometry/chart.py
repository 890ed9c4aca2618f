"""Adapted coordinates (x⁺, ξ) on the (x, u) space."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from ..symbolic import (Const, EvaluationError, ONE, Var, ZERO, evaluate, free_symbols,
                        generic_rank, jacobian, simplify, solve_triangular,
                        substitute)
from ..symbolic.errors import InversionFailed, SymbolicError
from ..system import DiscreteSystem, value_at
from .fields import VectorField


def plus(v: Var) -> Var:
    """Symbol for the shifted state x⁺."""
    return v.shifted(1)


def fresh_names(prefix, count, taken):
    taken = {t.name if isinstance(t, Var) else t for t in taken}
    stem = prefix
    while any(f"{stem}{k}" in taken for k in range(1, count + 1)):
        stem += "_"
    return [Var(f"{stem}{k}") for k in range(1, count + 1)]


@dataclass
class AdaptedChart:
    sys: DiscreteSystem
    h: list
    xplus: list
    xi: list
    inverse: dict                     # (x, u) symbol -> Expr in (x⁺, ξ)
    pivot_assumptions: list = field(default_factory=list)

    @property
    def frame(self):
        return tuple(self.xplus) + tuple(self.xi)

    def forward_map(self):
        """(x⁺, ξ) symbol -> Expr in (x, u)."""
        out = dict(zip(self.xplus, self.sys.updates))
        out.update(zip(self.xi, self.h))
        return out

    def to_chart(self, e):
        """Rewrite an expression in (x, u) in chart coordinates."""
        return substitute(e, self.inverse)

    def from_chart(self, e):
        return substitute(e, self.forward_map())

    def reference_point(self):
        """Chart coordinates of the equilibrium."""
        eq = self.sys.equilibrium
        ref = {xp: eq[x] for xp, x in zip(self.xplus, self.sys.states)}
        for xi, h in zip(self.xi, self.h):
            try:
                v = value_at(h, eq)
                ref[xi] = v.value if isinstance(v, Const) else 0
            except SymbolicError:
                ref[xi] = 0
        return ref

    def check_roundtrip(self):
        """forward ∘ inverse = identity, symbolically."""
        for c, e in self.inverse.items():
            back = substitute(e, self.forward_map())
            if simplify(back - c) != ZERO:
                return False
        return True


def _pivot_penalty(assumptions, reference):
    vanishing = 0
    for a in assumptions:
        point = {s: reference.get(s, 0) for s in free_symbols(a)}
        try:
            if evaluate(a, point) == 0:
                vanishing += 1
        except EvaluationError:
            vanishing += 1
    nonconst = sum(1 for a in assumptions if not isinstance(a, Const))
    return (vanishing, nonconst)


def try_chart(sys: DiscreteSystem, h, xplus=None, xi=None):
    """Chart for a given choice of fibre functions, or InversionFailed."""
    h = [simplify(e) for e in h]
    taken = [v for v in sys.coords]
    xplus = xplus or [plus(s) for s in sys.states]
    xi = xi or fresh_names("xi", sys.m, taken)
    eqs = [xp - f for xp, f in zip(xplus, sys.updates)]
    eqs += [z - e for z, e in zip(xi, h)]
    ref = {xp: sys.equilibrium[s] for xp, s in zip(xplus, sys.states)}
    sol, assumptions = solve_triangular(eqs, list(sys.coords), reference=ref)
    chart = AdaptedChart(sys, h, xplus, xi, sol, assumptions)
    return chart


def candidate_fibres(sys: DiscreteSystem):
    """Size-m subsets of the coordinates, states first, lexicographic."""
    return combinations(sys.states + sys.inputs, sys.m)


def build_adapted_chart(sys: DiscreteSystem, h=None, seed=42, trials=8):
    """Select fibre coordinates ξ = h(x, u) and invert (x,u) -> (x⁺, ξ).

    Every size-m coordinate subset whose stacked Jacobian is generically
    regular and which inverts by triangular elimination is scored by its
    pivots (pivots vanishing at the equilibrium first, then nonconstant
    pivots); the best score wins, ties by enumeration order.
    """
    if h is not None:
        return try_chart(sys, h)
    J_f = sys.full_jacobian()
    best = None
    failures = []
    for subset in candidate_fibres(sys):
        rows = J_f + [[ONE if c == s else ZERO for c in sys.coords] for s in subset]
        if generic_rank(rows, sys.coords, trials, seed, sys.center()) < sys.n + sys.m:
            continue
        try:
            chart = try_chart(sys, list(subset))
        except (InversionFailed, SymbolicError) as exc:
            failures.append((subset, exc))
            continue
        score = _pivot_penalty(chart.pivot_assumptions, chart.reference_point())
        if best is None or score < best[0]:
            best = (score, chart)
            if score == (0, 0):
                break
    if best is None:
        raise InversionFailed("no coordinate subset gives an invertible adapted chart")
    return best[1]


def express_in_chart(v: VectorField, chart: AdaptedChart) -> VectorField:
    """Coefficients of a field on (x, u) in the chart frame (x⁺, ξ)."""
    frame = chart.sys.coords
    v = v.restrict(frame)
    comps = [v.apply(f) for f in chart.sys.updates] + [v.apply(h) for h in chart.h]
    return VectorField(chart.frame, [chart.to_chart(c) for c in comps])


def input_fields(sys: DiscreteSystem):
    return [VectorField.coordinate(sys.coords, u) for u in sys.inputs]
