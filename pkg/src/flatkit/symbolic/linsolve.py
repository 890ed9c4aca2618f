"""Gaussian elimination over canonical expressions."""

from __future__ import annotations

from dataclasses import dataclass, field

from .calculus import differentiate, substitute
from .canonical import simplify
from .errors import EvaluationError, NotAffine
from .expr import Const, Expr, Neg, Product, Quotient, Sum, Var, ZERO, ONE, free_symbols
from .numeric import evaluate


class Unique(dict):
    """Unique solution; ``assumptions`` lists pivots assumed nonzero."""

    def __init__(self, values, assumptions=()):
        super().__init__(values)
        self.assumptions = list(assumptions)


@dataclass
class NonUnique:
    particular: dict
    basis: list  # list of dicts unknown -> Expr
    assumptions: list = field(default_factory=list)


@dataclass
class NoSolution:
    residual: Expr
    assumptions: list = field(default_factory=list)


def dedupe_assumptions(exprs):
    """Drop constants and expressions that are constant multiples of others."""
    out = []
    for a in exprs:
        a = simplify(a)
        if isinstance(a, Const):
            continue
        if any(isinstance(simplify(Quotient(a, b)), Const) for b in out):
            continue
        out.append(a)
    return out


def _sub(a, b):
    return Sum((a, Neg(b)))


def pivot_score(e: Expr, reference=None):
    """Sort key for pivot candidates (smaller is better).

    Nonzero rational constants come first (units before others), then
    expressions ordered by decreasing magnitude at the reference point;
    entries that cannot be evaluated there come last.
    """
    if isinstance(e, Const):
        return (0 if abs(e.value) == 1 else 1, 0.0)
    ref = reference or {}
    point = {s: ref.get(s, 0) for s in free_symbols(e)}
    try:
        val = abs(evaluate(e, point))
    except EvaluationError:
        return (3, 0.0)
    if val == 0:
        return (3, 0.0)
    return (2, -val)


def affine_coefficients(equations, unknowns):
    """Split each equation into (coefficient row, constant term)."""
    rows, consts = [], []
    zero_map = {u: ZERO for u in unknowns}
    for eq in equations:
        row = []
        for u in unknowns:
            c = differentiate(eq, u)
            for w in unknowns:
                if differentiate(c, w) != ZERO:
                    raise NotAffine(eq, u)
            row.append(c)
        rows.append(row)
        consts.append(substitute(eq, zero_map))
    return rows, consts


def eliminate(rows, rhs, reference=None):
    """Gauss-Jordan elimination with full pivoting.

    Returns (rows, rhs, pivots, assumptions) where ``pivots`` is a list of
    (row, column) pairs of the reduced system; pivot rows are normalized.
    """
    rows = [list(r) for r in rows]
    rhs = list(rhs)
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    used_rows, used_cols = set(), set()
    pivots, assumptions = [], []
    while True:
        best = None
        for i in range(nrows):
            if i in used_rows:
                continue
            for j in range(ncols):
                if j in used_cols or rows[i][j] == ZERO:
                    continue
                key = (pivot_score(rows[i][j], reference), i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        _, pi, pj = best
        p = rows[pi][pj]
        if not isinstance(p, Const):
            assumptions.append(p)
        rows[pi] = [simplify(Quotient(a, p)) for a in rows[pi]]
        rhs[pi] = simplify(Quotient(rhs[pi], p))
        for i in range(nrows):
            if i == pi or rows[i][pj] == ZERO:
                continue
            f = rows[i][pj]
            rows[i] = [simplify(_sub(a, Product((f, b))))
                       for a, b in zip(rows[i], rows[pi])]
            rhs[i] = simplify(_sub(rhs[i], Product((f, rhs[pi]))))
        used_rows.add(pi)
        used_cols.add(pj)
        pivots.append((pi, pj))
    return rows, rhs, pivots, dedupe_assumptions(assumptions)


def solve_linear_symbolic(equations, unknowns, reference=None):
    """Solve ``equations == 0`` (affine in ``unknowns``).

    Returns :class:`Unique` (a dict), :class:`NonUnique` with a null-space
    basis, or :class:`NoSolution`.  Raises NotAffine on nonlinear dependence.
    """
    unknowns = [Var(u) if isinstance(u, str) else u for u in unknowns]
    equations = [simplify(e) for e in equations]
    rows, consts = affine_coefficients(equations, unknowns)
    rhs = [simplify(Neg(c)) for c in consts]
    return _solve_rows(rows, rhs, unknowns, reference)


def _solve_rows(rows, rhs, unknowns, reference):
    rows, rhs, pivots, assumptions = eliminate(rows, rhs, reference)
    pivot_rows = {i for i, _ in pivots}
    for i, r in enumerate(rhs):
        if i not in pivot_rows and r != ZERO:
            return NoSolution(r, assumptions)
    pivot_cols = {j: i for i, j in pivots}
    free = [j for j in range(len(unknowns)) if j not in pivot_cols]
    particular = {}
    for j, u in enumerate(unknowns):
        particular[u] = rhs[pivot_cols[j]] if j in pivot_cols else ZERO
    if not free:
        return Unique(particular, assumptions)
    basis = []
    for jf in free:
        vec = {}
        for j, u in enumerate(unknowns):
            if j == jf:
                vec[u] = ONE
            elif j in pivot_cols:
                vec[u] = simplify(Neg(rows[pivot_cols[j]][jf]))
            else:
                vec[u] = ZERO
        basis.append(vec)
    return NonUnique(particular, basis, assumptions)


def nullspace(matrix, reference=None):
    """Basis of the right null space of a grid of Exprs (lists of Exprs)."""
    matrix = [list(r) for r in matrix]
    if not matrix:
        return []
    ncols = len(matrix[0])
    names = [Var(f"_c{j}") for j in range(ncols)]
    res = _solve_rows(matrix, [ZERO] * len(matrix), names, reference)
    if isinstance(res, Unique):
        return []
    return [[vec[n] for n in names] for vec in res.basis]
