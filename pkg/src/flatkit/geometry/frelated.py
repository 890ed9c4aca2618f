"""f-relatedness of a field on (x, u) and a field on x⁺."""

from __future__ import annotations

from ..symbolic import Sum, ZERO, simplify, substitute
from .chart import plus
from .fields import VectorField


def f_related_residuals(v: VectorField, w: VectorField, sys):
    """Σ_c (∂_c f^i) v^c − w^i∘f for every state i."""
    coords = sys.coords
    v = VectorField(coords, [v.coeff(c) for c in coords])
    xplus = [plus(s) for s in sys.states]
    on_f = dict(zip(xplus, sys.updates))
    residuals = []
    for s, xp, f in zip(sys.states, xplus, sys.updates):
        wi = w.coeff(xp)
        lhs = substitute(wi, on_f)
        residuals.append(simplify(Sum((v.apply(f), -lhs))))
    return residuals


def check_f_related(v: VectorField, w: VectorField, sys) -> bool:
    """True iff w∘f = f_* v holds exactly."""
    return all(r == ZERO for r in f_related_residuals(v, w, sys))
