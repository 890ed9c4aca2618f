"""Projectable subdistributions of span{∂_u}.

In adapted coordinates (x⁺, ξ) the images of ∂_{u¹},…,∂_{u^m} are brought
into a normalized basis v_k whose x⁺-components form an identity block at
the pivot rows.  A combination Σ c^k v_k with c depending on x⁺ only is
projectable iff its remaining x⁺-components are free of ξ, i.e.

    Σ_k c^k(x⁺) ∂_{ξ^j} a_k^i(x⁺, ξ) = 0   for every non-pivot row i and j.

The unknowns depend on x⁺ only while the coefficients mix x⁺ and ξ.  The
system is solved by instantiating ξ at d+1 random rational points, solving
the stacked system for c(x⁺) symbolically, and verifying the candidate null
space against the uninstantiated equations.  An empty null space comes with
an exact certificate: a nonzero m×m minor of the instantiated system at a
rational point x⁺, proved nonzero with interval arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import mpmath

from ..symbolic import (Const, EvaluationError, Product, Quotient, Sum, Var, ZERO,
                        differentiate, evaluate_iv, evaluate_mp, free_symbols,
                        generic_rank, make_rng, nullspace, random_point, simplify,
                        substitute, to_text)
from ..symbolic.errors import SymbolicError
from ..symbolic.linsolve import pivot_score
from ..symbolic.sampling import mp_rank
from .chart import AdaptedChart, express_in_chart
from .fields import Distribution, VectorField, is_involutive, normalize_fields


class NotProjectable(SymbolicError):
    """A vector field's x⁺-components depend on the fibre coordinates."""


class ProjectabilityUndecided(SymbolicError):
    """The hybrid solve could not settle the null space."""


@dataclass
class NullSpaceCertificate:
    """Evidence that the projectability equations admit only c = 0."""

    exact: bool
    xi_points: list
    xplus_point: dict
    rows: list
    minor: list
    det_enclosure: str
    equations: list

    def to_json(self):
        fmt = lambda d: {k.label: str(v) for k, v in d.items()}
        return {
            "kind": "nonzero minor of the instantiated projectability equations",
            "exact": self.exact,
            "xi_points": [fmt(p) for p in self.xi_points],
            "xplus_point": fmt(self.xplus_point),
            "rows": self.rows,
            "minor": [[to_text(e) for e in row] for row in self.minor],
            "determinant_enclosure": self.det_enclosure,
            "equations": [[to_text(e) for e in row] for row in self.equations],
        }


@dataclass
class ProjectabilityResult:
    chart: AdaptedChart
    normalized: list                 # normalized fields in the chart frame
    pivots: list                     # x⁺ symbols of the identity block
    normalizer: list                 # rows: Σ_j N_kj ∂u_j in (x, u) terms
    equations: list                  # coefficient grid of the c-equations
    null_basis: list                 # list of c-vectors (Exprs in x⁺)
    distribution: Distribution | None
    pushforward: Distribution | None = None
    certificate: NullSpaceCertificate | None = None
    notes: list = field(default_factory=list)


def _iv_det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = mpmath.iv.mpf(0)
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * _iv_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _independent_rows(matrix_vals, want):
    chosen = []
    for i in range(len(matrix_vals)):
        trial = [matrix_vals[j] for j in chosen + [i]]
        if mp_rank(trial) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == want:
                break
    return chosen


def _certify_full_rank(stacked, xplus, center, seed, attempts=12):
    """Find a rational x⁺ point and rows whose minor is provably nonzero."""
    m = len(stacked[0])
    rng = make_rng(seed, "certificate")
    for _ in range(attempts):
        point = random_point(xplus, rng, center)
        try:
            vals = [[evaluate_mp(e, point) for e in row] for row in stacked]
        except EvaluationError:
            continue
        rows = _independent_rows(vals, m)
        if len(rows) < m:
            continue
        try:
            iv_rows = [[evaluate_iv(e, point) for e in stacked[i]] for i in rows]
        except EvaluationError:
            continue
        det = _iv_det(iv_rows)
        if not (det.a <= 0 <= det.b):
            return point, rows, det, True
    return None


def analyze(sys, chart: AdaptedChart, seed=42, trials=8, one_dim=False,
            max_rounds=4) -> ProjectabilityResult:
    """Run the projectability search for ``sys`` in the adapted ``chart``."""
    n, m = sys.n, sys.m
    xplus, xi = list(chart.xplus), list(chart.xi)
    ref = chart.reference_point()
    images = [express_in_chart(VectorField.coordinate(sys.coords, u), chart)
              for u in sys.inputs]
    identity = [[1 if j == k else 0 for j in range(m)] for k in range(m)]
    identity = [[Const(v) for v in row] for row in identity]
    normalized, pivot_cols, N = normalize_fields(images, list(range(n)), ref, identity)
    pivots = [xplus[c] for c in pivot_cols]
    # rewrite the normalizer in (x, u)
    N_xu = [[chart.from_chart(e) for e in row] for row in N]
    nonpivot = [i for i in range(n) if i not in pivot_cols]
    equations = []
    for i in nonpivot:
        for z in xi:
            equations.append([differentiate(v.coeffs[i], z) for v in normalized])
    result = ProjectabilityResult(chart, normalized, pivots, N_xu, equations, [], None)

    if all(e == ZERO for row in equations for e in row):
        basis = [[Const(1) if j == k else ZERO for j in range(m)] for k in range(m)]
        result.notes.append("all projectability equations vanish identically")
    else:
        basis = _hybrid_nullspace(result, xplus, xi, ref, seed, trials, max_rounds)
        if basis is None:
            return result
    result.null_basis = basis
    gens = [_generator(c, N_xu, chart, sys) for c in basis]
    if one_dim:
        gens = gens[:1]
        result.notes.append("single-field mode: first null-space direction kept")
    D = Distribution(sys.coords, gens)
    if len(gens) > 1 and not is_involutive(D, sys.equilibrium):
        result.notes.append("projectable family is not involutive; "
                            "trying one-dimensional sub-spans")
        D = Distribution(sys.coords, gens[:1])
    result.pushforward = pushforward(D, sys, chart)
    if D.dim() == m:
        # the whole input span: report it in the coordinate basis
        D = Distribution(sys.coords, [VectorField.coordinate(sys.coords, u)
                                      for u in sys.inputs])
    result.distribution = D
    return result


def _generator(c, N_xu, chart, sys):
    """Σ_k c_k(f) Σ_j N_kj ∂u_j as a field on (x, u)."""
    c_xu = [chart.from_chart(e) for e in c]
    coeffs = {x: ZERO for x in sys.states}
    for j, u in enumerate(sys.inputs):
        coeffs[u] = simplify(Sum(tuple(Product((c_xu[k], N_xu[k][j]))
                                       for k in range(len(c_xu)))))
    return _tidy(VectorField.from_map(sys.coords, coeffs))


def _tidy(v: VectorField) -> VectorField:
    """Scale a field so that its last nonzero coefficient is 1 when constant
    multiples suffice, which keeps generators readable."""
    nz = [c for c in v.coeffs if c != ZERO]
    if not nz:
        return v
    consts = [c for c in nz if isinstance(c, Const)]
    if len(consts) == len(nz):
        return v.scale(Const(1 / nz[-1].value))
    lead = nz[-1]
    ratios = [simplify(Quotient(c, lead)) for c in nz]
    if all(isinstance(r, Const) for r in ratios):
        return v.scale(Quotient(Const(1), lead))
    return v


def _hybrid_nullspace(result, xplus, xi, ref, seed, trials, max_rounds):
    eqs = result.equations
    m = len(eqs[0])
    rng = make_rng(seed, "xi-samples")
    xi_center = {z: ref.get(z, 0) for z in xi}
    xplus_center = {z: ref.get(z, 0) for z in xplus}
    xi_points = []
    for round_ in range(max_rounds):
        while len(xi_points) < (len(xi) + 1) * (round_ + 1):
            xi_points.append(random_point(xi, rng, xi_center))
        stacked = []
        for pt in xi_points:
            try:
                stacked.extend([[substitute(e, pt) for e in row] for row in eqs])
            except EvaluationError:
                continue
        stacked = [row for row in stacked if any(e != ZERO for e in row)]
        if not stacked:
            continue
        r = generic_rank(stacked, xplus, trials, seed, xplus_center)
        if r == m:
            cert = _certify_full_rank(stacked, xplus, xplus_center, seed)
            if cert is None:
                result.notes.append("full-rank projectability system but no "
                                    "interval-verified minor was found")
                raise ProjectabilityUndecided("could not certify the empty null space")
            point, rows, det, exact = cert
            result.certificate = NullSpaceCertificate(
                exact, xi_points, point, rows, [stacked[i] for i in rows],
                str(det), eqs)
            return None
        basis = _symbolic_nullspace(stacked, r, xplus, xplus_center, seed, ref)
        if basis is not None and all(_annihilates(eqs, c) for c in basis):
            if round_:
                result.notes.append(f"null space verified after {round_ + 1} "
                                    "rounds of fibre sampling")
            return basis
    raise ProjectabilityUndecided("sampled null space failed symbolic verification")


def _symbolic_nullspace(stacked, r, xplus, center, seed, ref):
    rng = make_rng(seed, "row-selection")
    for _ in range(8):
        point = random_point(xplus, rng, center)
        try:
            vals = [[evaluate_mp(e, point) for e in row] for row in stacked]
        except EvaluationError:
            continue
        rows = _independent_rows(vals, r)
        if len(rows) == r:
            return nullspace([stacked[i] for i in rows], ref)
    return None


def _annihilates(eqs, c):
    for row in eqs:
        total = simplify(Sum(tuple(Product((a, b)) for a, b in zip(row, c))))
        if total != ZERO:
            return False
    return True


def pushforward(D: Distribution, sys, chart: AdaptedChart) -> Distribution:
    """f_*D on the x⁺ frame, or NotProjectable.

    Single generators need not be projectable; the images are brought to
    reduced echelon form on the x⁺ columns, which is unique for the spanned
    distribution, and that form must be free of the fibre.
    """
    xi = set(chart.xi)
    if not D.generators:
        return Distribution(tuple(chart.xplus), ())
    imgs = [VectorField(chart.xplus, express_in_chart(g, chart).coeffs[:sys.n])
            for g in D.generators]
    try:
        reduced, _, _ = normalize_fields(imgs, list(range(sys.n)),
                                         chart.reference_point())
    except SymbolicError as exc:
        raise NotProjectable(f"f_*D loses rank: {exc}") from None
    gens = []
    for g in reduced:
        if any(free_symbols(e) & xi for e in g.coeffs):
            raise NotProjectable(f"pushforward of {D} depends on the fibre")
        gens.append(_tidy(g))
    return Distribution(tuple(chart.xplus), gens)


def find_projectable_subdistribution(sys, chart, seed=42, trials=8, one_dim=False):
    """Maximal involutive projectable subdistribution of span{∂_u}, or None."""
    return analyze(sys, chart, seed, trials, one_dim).distribution
