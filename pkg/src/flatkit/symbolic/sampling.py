"""Random rational sample points and numeric rank."""

from __future__ import annotations

import random
from fractions import Fraction

import mpmath

from .errors import EvaluationError
from .expr import Var, free_symbols
from .numeric import evaluate_exact, evaluate_mp

MAX_NUMERATOR = 20
MAX_DENOMINATOR = 20


def random_rational(rng, scale=1):
    """Uniform draw from {p/q : |p| <= 20, 1 <= q <= 20}, times ``scale``."""
    p = rng.randint(-MAX_NUMERATOR, MAX_NUMERATOR)
    q = rng.randint(1, MAX_DENOMINATOR)
    return Fraction(p, q) * scale


def random_point(symbols, rng, center=None, scale=1):
    """Sample every symbol around ``center`` (a map Var → rational)."""
    center = center or {}
    return {s: Fraction(center.get(s, 0)) + random_rational(rng, scale)
            for s in symbols}


def make_rng(seed, *salt):
    """Deterministic generator derived from a root seed and a salt tuple."""
    return random.Random(repr((seed,) + tuple(salt)))


def fraction_rank(rows):
    """Exact rank of a matrix of Fractions."""
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][c]
        for r in range(rank + 1, len(m)):
            if m[r][c] != 0:
                f = m[r][c] / p
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def mp_rank(rows, dps=60):
    """Numeric rank with a tolerance far above working-precision noise."""
    if not rows or not rows[0]:
        return 0
    with mpmath.workdps(dps):
        m = [[mpmath.mpf(x) for x in r] for r in rows]
        scale = max((abs(x) for r in m for x in r), default=mpmath.mpf(0))
        if scale == 0:
            return 0
        tol = scale * mpmath.mpf(10) ** (-(dps // 2))
        rank = 0
        ncols = len(m[0])
        for c in range(ncols):
            piv = max(range(rank, len(m)), key=lambda r: abs(m[r][c]),
                      default=None)
            if piv is None or abs(m[piv][c]) <= tol:
                continue
            m[rank], m[piv] = m[piv], m[rank]
            p = m[rank][c]
            for r in range(rank + 1, len(m)):
                f = m[r][c] / p
                if f:
                    m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
            rank += 1
            if rank == len(m):
                break
        return rank


def evaluate_matrix(matrix, point, dps=60):
    """Evaluate a grid of Exprs; exact Fractions when possible, else mpf."""
    exact = []
    for row in matrix:
        vals = [evaluate_exact(e, point) for e in row]
        if any(v is None for v in vals):
            exact = None
            break
        exact.append(vals)
    if exact is not None:
        return exact, True
    with mpmath.workdps(dps):
        return [[evaluate_mp(e, point, dps) for e in row] for row in matrix], False


def rank_at(matrix, point, dps=60):
    vals, is_exact = evaluate_matrix(matrix, point, dps)
    return fraction_rank(vals) if is_exact else mp_rank(vals, dps)


def generic_rank(matrix, sample_vars=None, trials=8, seed=42, center=None):
    """Maximum rank of ``matrix`` over random rational sample points.

    ``sample_vars`` lists the symbols to sample (default: all free symbols);
    ``center`` shifts the samples to the declared equilibrium.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    matrix = [list(r) for r in matrix]
    if not matrix or not matrix[0]:
        return 0
    if sample_vars is None:
        syms = set()
        for row in matrix:
            for e in row:
                syms |= free_symbols(e)
        sample_vars = sorted(syms, key=lambda v: (v.name, v.shift))
    else:
        sample_vars = [Var(s) if isinstance(s, str) else s for s in sample_vars]
    full = min(len(matrix), len(matrix[0]))
    rng = make_rng(seed, "generic_rank")
    best = None
    last_error = None
    for _ in range(trials):
        point = random_point(sample_vars, rng, center)
        try:
            r = rank_at(matrix, point)
        except EvaluationError as exc:
            last_error = exc
            continue
        best = r if best is None else max(best, r)
        if best == full:
            break
    if best is None:
        raise last_error
    return best
