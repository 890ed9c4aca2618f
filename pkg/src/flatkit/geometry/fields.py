"""Vector fields and distributions over a named coordinate frame."""

from __future__ import annotations

from dataclasses import dataclass

from ..symbolic import (Expr, as_expr, NoSolution, Product, Sum, Var, ZERO,
                        differentiate, free_symbols, generic_rank, simplify,
                        solve_linear_symbolic, substitute, to_text)
from ..symbolic.errors import NotAffine, SymbolicError
from ..symbolic.linsolve import pivot_score
from ..symbolic import Quotient


@dataclass(frozen=True)
class VectorField:
    frame: tuple
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "frame", tuple(self.frame))
        object.__setattr__(self, "coeffs", tuple(simplify(as_expr(c)) for c in self.coeffs))
        if len(self.frame) != len(self.coeffs):
            raise ValueError("one coefficient per frame symbol is required")

    @classmethod
    def coordinate(cls, frame, var):
        frame = tuple(frame)
        return cls(frame, [1 if v == var else 0 for v in frame])

    @classmethod
    def from_map(cls, frame, mapping):
        return cls(frame, [mapping.get(v, ZERO) for v in frame])

    def coeff(self, var):
        try:
            return self.coeffs[self.frame.index(var)]
        except ValueError:
            return ZERO

    def as_dict(self):
        return dict(zip(self.frame, self.coeffs))

    def is_zero(self):
        return all(c == ZERO for c in self.coeffs)

    def apply(self, g: Expr) -> Expr:
        """Directional derivative v(g)."""
        terms = [Product((c, differentiate(g, v)))
                 for v, c in zip(self.frame, self.coeffs) if c != ZERO]
        return simplify(Sum(tuple(terms))) if terms else ZERO

    def scale(self, factor):
        return VectorField(self.frame, [Product((factor, c)) for c in self.coeffs])

    def substitute(self, bindings):
        return VectorField(self.frame, [substitute(c, bindings) for c in self.coeffs])

    def restrict(self, frame):
        """Same field over a different frame (missing entries are zero)."""
        d = self.as_dict()
        extra = [v for v, c in d.items() if c != ZERO and v not in frame]
        if extra:
            raise ValueError(f"field has components outside the frame: {extra}")
        return VectorField(frame, [d.get(v, ZERO) for v in frame])

    def to_text(self):
        parts = [f"({to_text(c)})*d/d{v.label}"
                 for v, c in zip(self.frame, self.coeffs) if c != ZERO]
        return " + ".join(parts) if parts else "0"

    def __str__(self):
        return self.to_text()


def lie_bracket(v1: VectorField, v2: VectorField) -> VectorField:
    """[v1, v2]^i = v1(v2^i) - v2(v1^i)."""
    if v1.frame != v2.frame:
        raise ValueError("vector fields live on different frames")
    return VectorField(v1.frame, [Sum((v1.apply(b), -v2.apply(a)))
                                  for a, b in zip(v1.coeffs, v2.coeffs)])


@dataclass(frozen=True)
class Distribution:
    frame: tuple
    generators: tuple

    def __post_init__(self):
        object.__setattr__(self, "frame", tuple(self.frame))
        gens = tuple(g.restrict(self.frame) for g in self.generators)
        object.__setattr__(self, "generators", gens)

    @classmethod
    def zero(cls, frame):
        return cls(frame, ())

    def matrix(self):
        return [list(g.coeffs) for g in self.generators]

    def dim(self, trials=8, seed=42, center=None):
        if not self.generators:
            return 0
        return generic_rank(self.matrix(), None, trials, seed, center)

    def contains(self, v: VectorField, reference=None):
        """Exact membership of ``v`` in the span (coefficients may vary)."""
        v = v.restrict(self.frame)
        if v.is_zero():
            return True
        if not self.generators:
            return False
        lam = [Var(f"_lam{k}") for k in range(len(self.generators))]
        eqs = []
        for i in range(len(self.frame)):
            terms = [Product((lam[k], g.coeffs[i]))
                     for k, g in enumerate(self.generators)]
            eqs.append(Sum(tuple(terms) + (-v.coeffs[i],)))
        try:
            res = solve_linear_symbolic(eqs, lam, reference)
        except (NotAffine, SymbolicError):
            return False
        return not isinstance(res, NoSolution)

    def same_span(self, other: "Distribution"):
        return (all(self.contains(g) for g in other.generators)
                and all(other.contains(g) for g in self.generators))

    def to_text(self):
        return "span{" + ", ".join(g.to_text() for g in self.generators) + "}"

    def __str__(self):
        return self.to_text()


def is_involutive(D: Distribution, reference=None) -> bool:
    """Every pairwise bracket lies in the span (exact membership solves)."""
    gens = D.generators
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            if not D.contains(lie_bracket(gens[i], gens[j]), reference):
                return False
    return True


def symbols_of(exprs):
    out = set()
    for e in exprs:
        out |= free_symbols(e)
    return out


def normalize_fields(fields, cols, reference=None, aux_rows=None):
    """Gauss-Jordan on the fields restricted to the columns ``cols``.

    Pivots prefer unit constants, then constants, then entries largest at
    the reference point; ties go to the highest column index.

    ``aux_rows`` (one coefficient list per field) receives the same row
    operations; returns (fields, pivot column indices, aux_rows).
    """
    fields = list(fields)
    if aux_rows is None:
        aux_rows = [[] for _ in fields]
    aux = [list(r) for r in aux_rows]
    used = set()
    pivots = []
    for r in range(len(fields)):
        best = None
        for k in range(r, len(fields)):
            for c in cols:
                if c in used:
                    continue
                e = fields[k].coeffs[c]
                if e == ZERO:
                    continue
                key = (pivot_score(e, reference), -c, k)
                if best is None or key < best[0]:
                    best = (key, k, c)
        if best is None:
            raise SymbolicError("the fields are linearly dependent on the given columns")
        _, k, c = best
        fields[r], fields[k] = fields[k], fields[r]
        aux[r], aux[k] = aux[k], aux[r]
        p = fields[r].coeffs[c]
        fields[r] = VectorField(fields[r].frame,
                                [Quotient(e, p) for e in fields[r].coeffs])
        aux[r] = [simplify(Quotient(e, p)) for e in aux[r]]
        for s in range(len(fields)):
            if s == r or fields[s].coeffs[c] == ZERO:
                continue
            q = fields[s].coeffs[c]
            fields[s] = VectorField(fields[s].frame,
                                    [Sum((a, -Product((q, b))))
                                     for a, b in zip(fields[s].coeffs, fields[r].coeffs)])
            aux[s] = [simplify(Sum((a, -Product((q, b))))) for a, b in zip(aux[s], aux[r])]
        used.add(c)
        pivots.append(c)
    return fields, pivots, aux
