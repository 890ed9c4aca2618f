"""Verification of flat output candidates.

A candidate y = φ(x, u, u@1, ..., u@q) is checked in three parts:

1. rank tests on the stacked shifts of φ.  Dependent shifts refute the
   candidate.  Writing K_β for the forms in span{dx, du, ..., du@q} that lie
   in the span of the y-jets up to order β, one has
   K_{β+1} = span{dφ} + δ(K_β ∩ span{dx, du, ..., du@(q-1)}), so once the gap
   dim span{dx, ..., du@q} - dim K_β stops decreasing it never reaches zero
   and the candidate is refuted as well;
2. a symbolic route solving y_[0,R] = δ^[0,R] φ(x, u, ...) for (x, u) and
   checking δ_y F_x = f∘F and φ∘F = y;
3. a numeric route that samples points, solves the jet equations with damped
   Gauss-Newton and checks residuals and local uniqueness.

A candidate is verified when the rank tests succeed and at least one of the
two inversion routes certifies the parametrization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np
import sympy

from .config import Config
from .geometry import VectorField, check_f_related, plus
from .geometry.chart import fresh_names
from .symbolic import (Const, EvaluationError, Var, differentiate, equal,
                       free_symbols, generic_rank, jacobian, simplify,
                       solve_triangular, substitute, to_text)
from .symbolic.canonical import to_sympy
from .symbolic.errors import InversionFailed, SymbolicError
from .symbolic.numeric import evaluate_mp
from .symbolic.sampling import make_rng, mp_rank, random_point, random_rational
from .system import (DiscreteSystem, FlatOutputCandidate, Parametrization,
                     shift_output, shift_xu, value_at)


class InvalidCandidate(SymbolicError):
    pass


@dataclass
class NumericCertificate:
    points: int
    max_residual: float
    radius: float
    seed: int
    failures: int = 0

    def to_json(self):
        return {"points": self.points, "max_residual": self.max_residual,
                "radius": self.radius, "seed": self.seed, "failures": self.failures}


@dataclass
class Verified:
    R: tuple
    parametrization: Parametrization | None
    symbolic: bool
    numeric: NumericCertificate | None
    gaps: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    reason: str = ""


@dataclass
class Refuted:
    reason: str
    gaps: list = field(default_factory=list)
    symbolic: bool = False
    numeric: object = None


@dataclass
class NotVerified:
    reason: str
    kind: str                       # "ShiftBudgetExceeded" / "NewtonDiverged"
    gaps: list = field(default_factory=list)
    symbolic: bool = False
    numeric: object = None


# ------------------------------------------------------------- rank tests

def _components(sys, candidate):
    if isinstance(candidate, FlatOutputCandidate):
        comps = candidate.components
    else:
        comps = [simplify(c) for c in candidate]
    if len(comps) != sys.m:
        raise InvalidCandidate(f"a flat output has {sys.m} components, got {len(comps)}")
    states, inputs = set(sys.states), {u.name for u in sys.inputs}
    q = 0
    for c in comps:
        for v in free_symbols(c):
            if v in states:
                continue
            if v.name not in inputs or v.shift < 0:
                raise InvalidCandidate(f"candidate uses unknown symbol {v.label}")
            q = max(q, v.shift)
    return comps, q


def _jets(sys, comps, beta):
    """rows[j][α] = δ^α φ_j for α <= beta."""
    rows = []
    for c in comps:
        cur, col = c, [c]
        for _ in range(beta):
            cur = shift_xu(cur, sys)
            col.append(cur)
        rows.append(col)
    return rows


def _coords(sys, top):
    return list(sys.states) + [u.shifted(k) for k in range(top + 1) for u in sys.inputs]


class JetMap:
    """Values and Jacobian of the jet map (x, u, u@1, ...) → y_[0,R].

    Shifts are never expanded symbolically: the trajectory x_{k+1} =
    f(x_k, u@k) and its derivative are propagated with the chain rule, so
    only ∂f and ∂φ are needed.  Rows are ordered by component, then order.
    """

    def __init__(self, sys, comps, q):
        self.sys, self.comps, self.q = sys, list(comps), q
        self.xu = list(sys.states) + list(sys.inputs)
        self.phi_vars = _coords(sys, q)
        self.f = list(sys.updates)
        self.fx = jacobian(sys.updates, sys.states)
        self.fu = jacobian(sys.updates, sys.inputs)
        self.dphi = jacobian(self.comps, self.phi_vars)
        self._float = None

    def columns(self, R):
        return _coords(self.sys, max(R) + self.q)

    # evaluation back ends: mp (rank tests) and float (Newton)
    def _ev_mp(self, name, point):
        grid = getattr(self, name)
        if name in ("f", "comps"):
            return [evaluate_mp(e, point, 60) for e in grid]
        return [[evaluate_mp(e, point, 60) for e in row] for row in grid]

    def _ev_float(self, name, point):
        if self._float is None:
            self._float = {}
            for key, args in (("f", self.xu), ("fx", self.xu), ("fu", self.xu),
                              ("comps", self.phi_vars), ("dphi", self.phi_vars)):
                grid = getattr(self, key)
                flat = grid if key in ("f", "comps") else [e for r in grid for e in r]
                shape = None if key in ("f", "comps") else (len(grid), len(grid[0]) if grid else 0)
                self._float[key] = (_compile(flat, args), args, shape)
        fn, args, shape = self._float[name]
        vals = fn(*[point[a] for a in args])
        if shape is None:
            return list(vals)
        return [vals[i * shape[1]:(i + 1) * shape[1]] for i in range(shape[0])]

    def evaluate(self, z, R, exact=True):
        """(values, Jacobian rows) at the point z (map Var → number)."""
        ev = self._ev_mp if exact else self._ev_float
        sys = self.sys
        cols = self.columns(R)
        col = {v: i for i, v in enumerate(cols)}
        n, N = sys.n, len(cols)
        zero = mpmath.mpf(0) if exact else 0.0
        X = [z[x] for x in sys.states]
        DX = [[zero] * N for _ in range(n)]
        for i, x in enumerate(sys.states):
            DX[i][col[x]] = zero + 1
        traj = [(X, DX)]
        for k in range(max(R)):
            pt = dict(zip(sys.states, X))
            pt.update((u, z[u.shifted(k)]) for u in sys.inputs)
            fval, fx, fu = ev("f", pt), ev("fx", pt), ev("fu", pt)
            newDX = []
            for i in range(n):
                row = [sum(fx[i][l] * DX[l][c] for l in range(n)) for c in range(N)]
                for j, u in enumerate(sys.inputs):
                    row[col[u.shifted(k)]] += fu[i][j]
                newDX.append(row)
            X, DX = fval, newDX
            traj.append((X, DX))
        values, rows = [], []
        for j, r in enumerate(R):
            for a in range(r + 1):
                X, DX = traj[a]
                pt = dict(zip(sys.states, X))
                for v in self.phi_vars[n:]:
                    pt[v] = z[Var(v.name, v.shift + a)]
                values.append(ev("comps", pt)[j])
                g = ev("dphi", pt)[j]
                row = [sum(g[l] * DX[l][c] for l in range(n)) for c in range(N)]
                for gi, v in zip(g[n:], self.phi_vars[n:]):
                    row[col[Var(v.name, v.shift + a)]] += gi
                rows.append(row)
        return values, rows


def _generic_gap(jm, R, target, config):
    """Generic (rank J, rank of [J; d target]) over random sample points."""
    cols = jm.columns(R)
    center = jm.sys.center(max(R) + jm.q)
    keep = [i for i, v in enumerate(cols) if v not in set(target)]
    rng = make_rng(config.seed, "jet-gap", tuple(R))
    best_J = best_T = None
    last = None
    nrows = sum(r + 1 for r in R)
    for _ in range(config.trials):
        point = random_point(cols, rng, center)
        try:
            with mpmath.workdps(60):
                _, J = jm.evaluate({v: mpmath.mpf(x.numerator) / x.denominator
                                    for v, x in point.items()}, R)
        except EvaluationError as exc:
            last = exc
            continue
        rJ = mp_rank(J)
        rT = len(target) + mp_rank([[row[i] for i in keep] for row in J])
        best_J = rJ if best_J is None else max(best_J, rJ)
        best_T = rT if best_T is None else max(best_T, rT)
        if best_J == nrows and best_T - best_J == 0:
            break
    if best_J is None:
        raise last
    return best_T - best_J, best_J


def rank_tests(sys, comps, q, config, jm=None):
    """Return ("determined", beta, gaps) / ("refuted", reason, gaps) / ("budget", .., gaps)."""
    jm = jm or JetMap(sys, comps, q)
    budget = config.max_shift if config.max_shift is not None else sys.n + q + 2
    Vq = _coords(sys, q)
    gaps = []
    for beta in range(budget + 1):
        R = [beta] * len(comps)
        gap, rY = _generic_gap(jm, R, Vq, config)
        rows = len(comps) * (beta + 1)
        if rY < rows:
            return "refuted", (f"shifts of the candidate up to order {beta} are "
                               f"functionally dependent (rank {rY} < {rows})"), gaps
        gaps.append(gap)
        if gap == 0:
            return "determined", beta, gaps
        if len(gaps) > 1 and gaps[-2] == gap:
            return "refuted", (f"jet gap stalls at {gap} (orders {beta - 1} and {beta}); "
                               "the state and input never follow from the output"), gaps
    return "budget", f"gap still {gaps[-1]} at shift budget {budget}", gaps


def minimal_orders(sys, comps, beta, config, jm=None):
    """Smallest R (coordinate-wise descent) with (x, u) functions of y_[0,R]."""
    q = max([0] + [v.shift for c in comps for v in free_symbols(c)])
    jm = jm or JetMap(sys, comps, q)
    R = [beta] * len(comps)
    target = list(sys.states) + list(sys.inputs)
    for j in range(len(comps)):
        while R[j] > 0:
            trial = list(R)
            trial[j] -= 1
            gap, _ = _generic_gap(jm, trial, target, config)
            if gap:
                break
            R = trial
    return tuple(R)


# -------------------------------------------------------- symbolic route

def output_names(sys, count):
    return [Var(n.name) for n in fresh_names("y", count, list(sys.coords))]


def jet_reference(sys, rows, ys):
    """Reference point (equilibrium) extended by the y-jet values."""
    top = max([0] + [v.shift for col in rows for e in col for v in free_symbols(e)])
    ref = sys.center(top)
    for y, col in zip(ys, rows):
        for a, e in enumerate(col):
            try:
                v = value_at(e, ref)
            except SymbolicError:
                continue
            if isinstance(v, Const):
                ref[y.shifted(a)] = v.value
    return ref


def symbolic_parametrization(sys, comps, R):
    """Solve the jet equations for (x, u); raises InversionFailed."""
    rows = _jets(sys, comps, max(R))
    rows = [col[:r + 1] for col, r in zip(rows, R)]
    ys = output_names(sys, len(comps))
    eqs = [y.shifted(a) - e for y, col in zip(ys, rows) for a, e in enumerate(col)]
    aux = sorted({v for e in eqs for v in free_symbols(e)
                  if v.shift > 0 and v.name in {u.name for u in sys.inputs}},
                 key=lambda v: (v.shift, v.name))
    targets = list(sys.states) + list(sys.inputs)
    sol, assumptions = solve_triangular(eqs, targets, aux, jet_reference(sys, rows, ys))
    return Parametrization([sol[s] for s in sys.states], [sol[u] for u in sys.inputs],
                           tuple(R), ys, assumptions, list(comps))


def check_parametrization(sys, comps, param):
    """δ_y F_x = f∘F, φ∘F = y and F_x free of the top shifts."""
    ys = param.y
    names = [y.name for y in ys]
    top = {y.shifted(r) for y, r in zip(ys, param.R)}
    for e in param.F_x:
        if free_symbols(e) & top:
            return False, f"F_x depends on a top shift: {to_text(e)}"
    F = dict(zip(sys.states, param.F_x))
    F.update(zip(sys.inputs, param.F_u))
    for s, fx, f in zip(sys.states, param.F_x, sys.updates):
        if not equal(shift_output(fx, names), substitute(f, F)):
            return False, f"shift identity fails for {s.label}"
    for y, c in zip(ys, comps):
        bind = {}
        for v in free_symbols(c):
            if v in F:
                bind[v] = F[v]
            else:
                base = Var(v.name)
                bind[v] = shift_output(F[base], names, v.shift)
        if not equal(substitute(c, bind), y):
            return False, f"output identity fails for {y.label}"
    return True, ""


# --------------------------------------------------------- numeric route

def _compile(exprs, args):
    syms = [sympy.Symbol(a.label) for a in args]
    return sympy.lambdify(syms, [to_sympy(e) for e in exprs], modules="math",
                          dummify=True)


def _gauss_newton(F, J, z0, target, config):
    z = np.array(z0, dtype=float)
    res = np.array(F(*z), dtype=float) - target
    norm = np.linalg.norm(res)
    for _ in range(config.newton_max_iter):
        if norm < config.newton_tolerance:
            return z, norm
        Jz = np.array(J(*z), dtype=float).reshape(len(target), len(z))
        step = np.linalg.lstsq(Jz, -res, rcond=None)[0]
        t = 1.0
        for _ in range(config.newton_max_halvings + 1):
            cand = z + t * step
            try:
                r2 = np.array(F(*cand), dtype=float) - target
            except (ValueError, ZeroDivisionError, OverflowError):
                r2 = None
            if r2 is not None and np.all(np.isfinite(r2)) and np.linalg.norm(r2) < norm:
                break
            t /= 2
        else:
            return z, norm
        z, res, norm = cand, r2, np.linalg.norm(r2)
    return z, norm


def _locally_unique(J, nxu):
    """(x, u) is locally a function of the jet values (rank test on J)."""
    J = np.asarray(J, dtype=float)
    return np.linalg.matrix_rank(J[:, nxu:]) + nxu == np.linalg.matrix_rank(J)


def numeric_certificate(sys, comps, R, config, jm=None):
    """Sample, invert by Gauss-Newton, check residual and local uniqueness."""
    q = max([0] + [v.shift for c in comps for v in free_symbols(c)])
    jm = jm or JetMap(sys, comps, q)
    Z = jm.columns(R)
    nxu = sys.n + sys.m

    def F(*z):
        return jm.evaluate(dict(zip(Z, z)), R, exact=False)[0]

    def J(*z):
        return jm.evaluate(dict(zip(Z, z)), R, exact=False)[1]

    center = sys.center(max(R) + q)
    c0 = np.array([float(center.get(v, 0)) for v in Z])
    rng = make_rng(config.seed, "numeric")
    scale = config.sample_radius / 20
    worst, done, attempts, failures = 0.0, 0, 0, 0
    while done < config.numeric_points and attempts < 20 * config.numeric_points:
        attempts += 1
        zs = np.array([float(center.get(v, 0) + random_rational(rng, scale)) for v in Z])
        try:
            target = np.array(F(*zs), dtype=float)
            if not np.all(np.isfinite(target)) or not _locally_unique(J(*zs), nxu):
                continue                      # non-generic sample
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        best = None
        starts = [c0] + [c0 + np.array([float(random_rational(rng, scale)) for _ in Z])
                         for _ in range(3)]
        for s in starts:
            try:
                z, norm = _gauss_newton(F, J, s, target, config)
            except (ValueError, ZeroDivisionError, OverflowError, np.linalg.LinAlgError):
                continue
            if best is None or norm < best[1]:
                best = (z, norm)
            if norm < config.numeric_tolerance:
                break
        ok = best is not None and best[1] < config.numeric_tolerance
        if ok:
            try:
                ok = _locally_unique(J(*best[0]), nxu)
            except (ValueError, ZeroDivisionError, OverflowError):
                ok = False
        if not ok:
            failures += 1
            if failures > config.numeric_points // 10:
                return None, failures
            continue
        worst = max(worst, float(best[1]))
        done += 1
    if done < config.numeric_points:
        return None, failures
    return NumericCertificate(done, worst, float(config.sample_radius), config.seed,
                              failures), failures


# ------------------------------------------------------------ front end

def verify_candidate(sys: DiscreteSystem, candidate, config: Config | None = None):
    config = config or Config()
    comps, q = _components(sys, candidate)
    if q > config.q_limit:
        raise InvalidCandidate(f"input shift {q} exceeds the limit {config.q_limit}")
    jm = JetMap(sys, comps, q)
    status, info, gaps = rank_tests(sys, comps, q, config, jm)
    if status == "refuted":
        return Refuted(info, gaps)
    if status == "budget":
        return NotVerified(info, "ShiftBudgetExceeded", gaps)
    R = minimal_orders(sys, comps, info, config, jm)
    notes = []
    param, symbolic = None, False
    try:
        param = symbolic_parametrization(sys, comps, R)
        symbolic, why = check_parametrization(sys, comps, param)
        if not symbolic:
            notes.append(f"symbolic check failed: {why}")
            param = None
    except (InversionFailed, SymbolicError) as exc:
        notes.append(f"symbolic inversion failed: {exc}")
    cert, failures = numeric_certificate(sys, comps, R, config, jm)
    if cert is None:
        notes.append(f"numeric certificate failed ({failures} Newton failures)")
    if symbolic or cert is not None:
        return Verified(R, param, symbolic, cert, gaps, notes)
    return NotVerified("; ".join(notes), "NewtonDiverged", gaps)


# ------------------------------------------------------- f-related pairs

def frelated_from_flat_output(sys: DiscreteSystem, param: Parametrization, s: int,
                              constants=None):
    """f-related pair (v, w) from the parametrization and component index s.

    w̃ = ∂F_x/∂y_s@(r_s - 1) and ṽ = ∂F_u/∂y_s@r_s are expressed on the jet
    coordinates (x, u, u@1, ...); then w is w̃ at x → x@1, u@k → c@(k+1) and v
    is ṽ at u@k → c@k for k >= 1.  ``constants`` maps input names (or Vars)
    to rationals and defaults to the equilibrium inputs.
    """
    ys = param.y
    r = param.R[s]
    if r < 1:
        raise ValueError("component with zero order has no f-related pair")
    ws = [differentiate(e, ys[s].shifted(r - 1)) for e in param.F_x]
    vs = [differentiate(e, ys[s].shifted(r)) for e in param.F_u]
    comps = param.components
    jets = {}
    for y, c in zip(ys, comps):
        cur = c
        for a in range(max(param.R) + 1):
            jets[y.shifted(a)] = cur
            cur = shift_xu(cur, sys)
    ws = [substitute(e, jets) for e in ws]
    vs = [substitute(e, jets) for e in vs]
    const = {}
    for u in sys.inputs:
        val = sys.equilibrium.get(u, 0)
        if constants:
            val = constants.get(u.name, constants.get(u, val))
        const[u.name] = Const(val)
    top = max([0] + [v.shift for e in ws + vs for v in free_symbols(e)])
    wb, vb = {}, {}
    for x in sys.states:
        wb[x] = plus(x)
    for u in sys.inputs:
        for k in range(top + 1):
            wb[u.shifted(k)] = const[u.name]
            if k >= 1:
                vb[u.shifted(k)] = const[u.name]
    v = VectorField(list(sys.coords), [Const(0)] * sys.n + [substitute(e, vb) for e in vs])
    w = VectorField([plus(x) for x in sys.states], [substitute(e, wb) for e in ws])
    if not check_f_related(v, w, sys):
        raise SymbolicError("reconstructed pair is not f-related")
    return v, w

