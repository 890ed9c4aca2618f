"""Decomposition algorithm deciding difference flatness.

Each step (A) stops when the system has no more states than inputs, (B)
searches a projectable involutive subdistribution D of span{∂_u} in an
adapted chart, and (C) straightens D and f_*D, splits off the subsystem
x̄₁⁺ = f̄₁(x̄₁, x̄₂, ū₁), and removes redundant subsystem inputs into the
flat output.  A missing D proves non-flatness; every other failure is
reported as inconclusive.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations

from .config import Config
from .geometry import (Distribution, NotProjectable, ProjectabilityUndecided,
                       StraighteningFailed, Transformation, analyze,
                       build_adapted_chart, straighten)
from .geometry.chart import fresh_names
from .symbolic import (Apply, Const, EvaluationError, ONE, Var, ZERO, differentiate,
                       evaluate, free_symbols, generic_rank, jacobian, simplify,
                       solve_triangular, substitute, to_text)
from .symbolic.errors import InversionFailed, SymbolicError
from .symbolic.sampling import make_rng, random_point
from .system import DiscreteSystem, check_equilibrium, input_rank, submersion_rank, value_at

FLAT, NOT_FLAT, INCONCLUSIVE = "flat", "not_flat", "inconclusive"


class RedundantEliminationFailed(SymbolicError):
    pass


# ------------------------------------------------------------ step records

@dataclass
class Terminal:
    outputs: list


@dataclass
class Continue:
    pass


@dataclass
class NotFlat:
    reason: str
    certificate: object = None


@dataclass
class Inconclusive:
    reason: str


@dataclass
class DecompositionStep:
    index: int
    system: DiscreteSystem
    kind: str = "decomposition"          # or "terminal" / "stopped"
    chart_h: list = field(default_factory=list)
    distribution: Distribution | None = None
    pushforward: Distribution | None = None
    input_transformation: Transformation | None = None
    state_transformation: Transformation | None = None
    subsystem: DiscreteSystem | None = None
    subsystem_inputs_origin: list = field(default_factory=list)
    redundant: list = field(default_factory=list)
    new_inputs: list = field(default_factory=list)
    eliminated_outputs: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    certificate: object = None
    reason: str = ""

    def to_json(self):
        out = {"index": self.index, "kind": self.kind,
               "system": self.system.describe().splitlines()}
        if self.chart_h:
            out["chart"] = [to_text(h) for h in self.chart_h]
        if self.distribution is not None:
            out["distribution"] = self.distribution.to_text()
        if self.pushforward is not None:
            out["pushforward"] = self.pushforward.to_text()
        if self.input_transformation is not None:
            out["input_transformation"] = self.input_transformation.to_json()
        if self.state_transformation is not None:
            out["state_transformation"] = self.state_transformation.to_json()
        if self.subsystem is not None:
            out["subsystem"] = self.subsystem.describe().splitlines()
        if self.redundant:
            out["redundant_inputs"] = [v.label for v in self.redundant]
        if self.new_inputs:
            out["new_inputs"] = {k.label: to_text(v) for k, v in self.new_inputs}
        out["eliminated_outputs"] = [to_text(e) for e in self.eliminated_outputs]
        if self.assumptions:
            out["assumptions"] = [f"{to_text(a)} != 0" for a in self.assumptions]
        if self.notes:
            out["notes"] = list(self.notes)
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass
class FlatnessReport:
    verdict: str
    system: DiscreteSystem
    flat_output: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    parametrization: object = None
    verification: object = None
    assumptions: list = field(default_factory=list)
    seed: int = 42
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    branches: list = field(default_factory=list)
    reason: str = ""

    @property
    def verified(self):
        v = self.verification
        return {"symbolic": bool(v and v.symbolic), "numeric": bool(v and v.numeric)}

    def to_json(self):
        out = {
            "verdict": self.verdict,
            "flat_output": [to_text(e) for e in self.flat_output],
            "steps": [s.to_json() for s in self.steps],
            "assumptions": [f"{to_text(a)} != 0" for a in self.assumptions],
            "seed": self.seed,
            "verified": self.verified,
        }
        if self.reason:
            out["reason"] = self.reason
        if self.notes:
            out["notes"] = list(self.notes)
        if self.branches:
            out["branches"] = [[to_text(e) for e in b] for b in self.branches]
        if self.parametrization is not None:
            p = self.parametrization
            out["parametrization"] = {
                "R": list(p.R),
                "x": {s.label: to_text(e) for s, e in zip(self.system.states, p.F_x)},
                "u": {s.label: to_text(e) for s, e in zip(self.system.inputs, p.F_u)},
            }
        if self.verification is not None and self.verification.numeric is not None:
            out["numeric_certificate"] = self.verification.numeric.to_json()
        out["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return out


# ------------------------------------------------------------------ steps

def step_A(sys: DiscreteSystem):
    if sys.n <= sys.m:
        return Terminal(list(sys.states))
    return Continue()


def step_B(sys: DiscreteSystem, config: Config):
    """Projectable involutive subdistribution, NotFlat or Inconclusive."""
    try:
        chart = build_adapted_chart(sys, seed=config.seed, trials=config.trials)
    except (InversionFailed, SymbolicError) as exc:
        return Inconclusive(f"no invertible adapted chart: {exc}"), None
    try:
        res = analyze(sys, chart, config.seed, config.trials, config.one_dim)
    except (ProjectabilityUndecided, NotProjectable, SymbolicError) as exc:
        return Inconclusive(f"projectability search undecided: {exc}"), None
    if res.distribution is None:
        if res.certificate is not None and res.certificate.exact:
            return NotFlat("no projectable subdistribution", res.certificate), res
        return Inconclusive("empty null space without exact certificate"), res
    return res.distribution, res


@dataclass
class StepC:
    subsystem: DiscreteSystem
    eliminated: list            # redundant symbols (transformed states)
    input_transformation: Transformation
    state_transformation: Transformation
    state_origin: dict          # new subsystem state -> expr in previous states
    new_inputs: list            # (new input symbol, expr in transformed coords)
    redundant: list
    assumptions: list
    transformed_updates: dict
    notes: list


def _rename(sys_states, sys_inputs, updates, equilibrium, name, prefix_x="x",
            prefix_u="u"):
    xs = [Var(f"{prefix_x}{i + 1}") for i in range(len(sys_states))]
    us = [Var(f"{prefix_u}{i + 1}") for i in range(len(sys_inputs))]
    ren = dict(zip(sys_states, xs))
    ren.update(zip(sys_inputs, us))
    new_updates = [substitute(f, ren) for f in updates]
    eq = {ren[k]: v for k, v in equilibrium.items() if k in ren}
    return DiscreteSystem(xs, us, new_updates, eq, name), ren


def step_C(sys: DiscreteSystem, D: Distribution, fD: Distribution, config: Config,
           branch=0):
    """Straighten, split off the subsystem and remove redundant inputs.

    ``branch`` selects among the successful redundant-input eliminations
    (in enumeration order); IndexError signals that no such branch exists.
    """
    taken = list(sys.coords)
    ub = fresh_names("ub", sys.m, taken)
    xb = fresh_names("xb", sys.n, taken + ub)
    eq = sys.equilibrium
    Tin = straighten(D, sys.inputs, ub, base={u: eq[u] for u in sys.inputs},
                     reference=eq, enabled=config.straightening)
    states_of = {s.shifted(1): s for s in sys.states}
    Dx = Distribution(sys.states,
                      [type(g)(sys.states, [substitute(c, states_of) for c in g.coeffs])
                       for g in fD.generators])
    Tx = straighten(Dx, sys.states, xb, base={s: eq[s] for s in sys.states},
                    reference=eq, enabled=config.straightening)
    x_of = Tx.inverse_map()                              # x -> expr(xb)
    u_of = {u: substitute(e, x_of) for u, e in Tin.inverse_map().items()}
    on_f = dict(zip(sys.states, sys.updates))
    back = dict(x_of)
    back.update(u_of)
    fbar = {}
    for n_, fwd in zip(Tx.new, Tx.forward):
        fbar[n_] = substitute(substitute(fwd, on_f), back)
    x2 = [v for v in Tx.new if v in Tx.straightened]
    x1 = [v for v in Tx.new if v not in Tx.straightened]
    u2 = [v for v in Tin.new if v in Tin.straightened]
    u1 = [v for v in Tin.new if v not in Tin.straightened]
    for v in x1:
        if free_symbols(fbar[v]) & set(u2):
            raise StraighteningFailed("transformed system is not in decomposed form")
    # equilibrium in transformed coordinates
    eq_bar = {}
    for n_, fwd in zip(Tx.new, Tx.forward):
        eq_bar[n_] = _const_value(fwd, eq)
    for n_, fwd in zip(Tin.new, Tin.forward):
        eq_bar[n_] = _const_value(fwd, eq)
    inputs = x2 + u1
    f1 = [fbar[v] for v in x1]
    notes = []
    if not inputs:
        raise StraighteningFailed("subsystem has no inputs")
    r = generic_rank(jacobian(f1, inputs), x1 + inputs, config.trials, config.seed,
                     eq_bar)
    n_red = len(inputs) - r
    branches = list(_eliminations(f1, x1, x2, u1, r, n_red, eq_bar, config))
    if not branches:
        raise RedundantEliminationFailed("no subset of the transformed states "
                                         "completes the input elimination")
    Y, new_inputs, f1_new, assumptions = branches[branch]
    if n_red:
        notes.append(f"{n_red} redundant input(s) eliminated: "
                     + ", ".join(v.label for v in Y))
    zs = [z for z, _ in new_inputs]
    eq_sub = {v: eq_bar[v] for v in x1}
    for z, expr in new_inputs:
        eq_sub[z] = _const_value(expr, eq_bar)
    sub, ren = _rename(x1, zs, f1_new, eq_sub, f"{sys.name}'")
    origin = {ren[v]: dict(zip(Tx.new, Tx.forward))[v] for v in x1}
    new_inputs_named = [(ren[z], expr) for z, expr in new_inputs]
    return StepC(sub, Y, Tin, Tx, origin, new_inputs_named, Y,
                 list(Tin.assumptions) + list(Tx.assumptions) + assumptions,
                 fbar, notes)


def _const_value(e, point):
    v = value_at(e, point)
    if not isinstance(v, Const):
        raise SymbolicError(f"no rational equilibrium value for {e}")
    return v.value


def _eliminations(f1, x1, x2, u1, r, n_red, eq_bar, config):
    """Yield (Y, new inputs, updates, assumptions) for each valid branch."""
    inputs = x2 + u1
    if n_red == 0:
        yield [], [(v, v) for v in inputs], f1, []
        return
    for Y in combinations(x2, n_red):
        Y = list(Y)
        W = [v for v in inputs if v not in Y]
        # the subsystem may already ignore Y
        if all(differentiate(f, y) == ZERO for f in f1 for y in Y):
            if generic_rank(jacobian(f1, W), x1 + W, config.trials, config.seed,
                            eq_bar) == r:
                yield Y, [(v, v) for v in W], f1, []
                continue
        # otherwise use r independent components of f1 as new inputs
        rows = _independent_rows(f1, inputs, x1 + inputs, config, eq_bar)
        if len(rows) != r:
            continue
        zs = fresh_names("zh", r, x1 + inputs)
        eqs = [z - f1[i] for z, i in zip(zs, rows)]
        try:
            sol, assumptions = solve_triangular(eqs, W, reference=eq_bar)
        except (InversionFailed, SymbolicError):
            continue
        new_f1 = [substitute(f, sol) for f in f1]
        if any(free_symbols(f) & set(Y + W) for f in new_f1):
            continue
        yield Y, [(z, f1[i]) for z, i in zip(zs, rows)], new_f1, assumptions


def _independent_rows(exprs, wrt, sample, config, center):
    chosen = []
    for i in range(len(exprs)):
        J = jacobian([exprs[j] for j in chosen + [i]], wrt)
        if generic_rank(J, sample, config.trials, config.seed, center) == len(chosen) + 1:
            chosen.append(i)
    return chosen


# ------------------------------------------------------------------- run

def _branch_functions(sys):
    found = set()

    def walk(e):
        if isinstance(e, Apply) and e.func in ("sqrt", "log", "tan"):
            found.add(e.func)
        for c in getattr(e, "children", ()):
            walk(c)

    for f in sys.updates:
        walk(f)
    return found


def run(sys: DiscreteSystem, config: Config | None = None, branch_path=()):
    """Decide flatness of ``sys``; returns a FlatnessReport."""
    config = config or Config()
    t0 = time.perf_counter()
    report = FlatnessReport(INCONCLUSIVE, sys, seed=config.seed)
    eqc = check_equilibrium(sys)
    if eqc is not True:
        report.notes.append("declared point is not an equilibrium; residuals "
                            + ", ".join(to_text(r) for r in eqc))
    branch = sorted(_branch_functions(sys))
    if branch:
        report.notes.append("smoothness assumed away from the branch points of "
                            + ", ".join(branch) + "; not checked")
    try:
        if submersion_rank(sys, config.seed, config.trials) < sys.n:
            report.reason = "f is not a submersion (rank of ∂(x,u) f < n)"
            return _finish(report, t0)
        if input_rank(sys, config.seed, config.trials) < sys.m:
            report.reason = "the system has redundant inputs (rank of ∂u f < m)"
            return _finish(report, t0)
    except EvaluationError as exc:
        report.reason = f"rank test failed: {exc}"
        return _finish(report, t0)

    current = sys
    origin = {s: s for s in sys.states}       # current state -> original expr
    outputs_by_step = []
    branch_path = list(branch_path)
    for k in range(1, sys.n + 1):
        ts = time.perf_counter()
        step = DecompositionStep(k, current)
        report.steps.append(step)
        a = step_A(current)
        if isinstance(a, Terminal):
            step.kind = "terminal"
            step.eliminated_outputs = [origin[s] for s in a.outputs]
            outputs_by_step.append(step.eliminated_outputs)
            report.timings[f"step{k}"] = time.perf_counter() - ts
            break
        b, res = step_B(current, config)
        if res is not None:
            step.chart_h = list(res.chart.h)
            step.notes.extend(res.notes)
            step.assumptions.extend(res.chart.pivot_assumptions)
        if isinstance(b, NotFlat):
            step.kind = "stopped"
            step.reason = b.reason
            step.certificate = b.certificate
            report.verdict = NOT_FLAT
            report.reason = f"step {k}: {b.reason}"
            report.timings[f"step{k}"] = time.perf_counter() - ts
            return _finish(report, t0)
        if isinstance(b, Inconclusive):
            step.kind = "stopped"
            step.reason = b.reason
            report.reason = f"step {k}: {b.reason}"
            return _finish(report, t0)
        step.distribution = b
        step.pushforward = res.pushforward
        branch = branch_path.pop(0) if branch_path else 0
        try:
            c = step_C(current, b, res.pushforward, config, branch)
        except IndexError:
            step.kind = "stopped"
            step.reason = "requested elimination branch does not exist"
            report.reason = step.reason
            return _finish(report, t0)
        except (StraighteningFailed, RedundantEliminationFailed, SymbolicError) as exc:
            step.kind = "stopped"
            step.reason = f"{type(exc).__name__}: {exc}"
            report.reason = f"step {k}: {step.reason}"
            return _finish(report, t0)
        step.input_transformation = c.input_transformation
        step.state_transformation = c.state_transformation
        step.subsystem = c.subsystem
        step.redundant = c.redundant
        step.new_inputs = c.new_inputs
        step.assumptions.extend(c.assumptions)
        step.notes.extend(c.notes)
        xbar_origin = {n_: substitute(f, origin) for n_, f in
                       zip(c.state_transformation.new, c.state_transformation.forward)}
        step.eliminated_outputs = [xbar_origin[y] for y in c.eliminated]
        outputs_by_step.append(step.eliminated_outputs)
        origin = {s: substitute(e, origin) for s, e in c.state_origin.items()}
        current = c.subsystem
        report.timings[f"step{k}"] = time.perf_counter() - ts
    else:
        report.reason = "step budget exhausted"
        return _finish(report, t0)

    flat_output = [e for outs in reversed(outputs_by_step) for e in outs]
    report.flat_output = [simplify(e) for e in flat_output]
    inputs = set(sys.inputs)
    if any(v.name in {u.name for u in inputs} for e in report.flat_output
           for v in free_symbols(e)):
        report.reason = "assembled output depends on inputs"
        return _finish(report, t0)
    if config.verify_output:
        from .verify import verify_candidate, Verified
        tv = time.perf_counter()
        result = verify_candidate(sys, report.flat_output, config)
        report.timings["verify"] = time.perf_counter() - tv
        report.verification = result
        if isinstance(result, Verified):
            report.verdict = FLAT
            report.parametrization = result.parametrization
        else:
            report.reason = f"assembled output not verified: {result.reason}"
    else:
        report.verdict = FLAT
    if config.explore_branches and not branch_path:
        report.branches = explore(sys, config)
    return _finish(report, t0)


def _finish(report, t0):
    # later steps record assumptions in their own renamed coordinates; the
    # report keeps those of step 1 and of the parametrization, which live in
    # the original (x, u) and in the output jets
    seen = []
    if report.steps:
        seen.extend(report.steps[0].assumptions)
    if report.parametrization is not None:
        seen.extend(report.parametrization.assumptions)
    for a in seen:
        if a not in report.assumptions:
            report.assumptions.append(a)
    report.timings["total"] = time.perf_counter() - t0
    return report


def explore(sys, config, max_branches=16):
    """Flat outputs of every redundant-input elimination branch."""
    sub = Config(**{**config.__dict__, "explore_branches": False})
    found = []
    frontier = [()]
    while frontier and len(found) < max_branches:
        path = frontier.pop(0)
        rep = run(sys, sub, path)
        out = tuple(rep.flat_output)
        if rep.verdict == FLAT and out not in found:
            found.append(out)
        # branch on every step that eliminated something
        for i, s in enumerate(rep.steps):
            if s.redundant and len(path) <= i:
                nxt = path + (0,) * (i - len(path)) + (
                    (path[i] if i < len(path) else 0) + 1,)
                if nxt not in frontier:
                    frontier.append(nxt)
    return [list(o) for o in found]


# -------------------------------------------------------------- auditing

def composition_audit(report: FlatnessReport, points=100, seed=0, radius=None):
    """Max round-trip error of every recorded transformation at random points."""
    radius = radius or 1
    rng = make_rng(seed, "audit")
    worst = 0.0
    for step in report.steps:
        for T in (step.input_transformation, step.state_transformation):
            if T is None:
                continue
            params = set()
            for e in T.forward:
                params |= free_symbols(e)
            params -= set(T.old)
            center = {v: step.system.equilibrium.get(v, 0) for v in list(T.old) + list(params)}
            done = 0
            attempts = 0
            while done < points and attempts < 10 * points:
                attempts += 1
                pt = random_point(list(T.old) + sorted(params, key=lambda v: v.label),
                                  rng, center, radius)
                try:
                    newv = {n_: evaluate(f, pt) for n_, f in zip(T.new, T.forward)}
                    bind = dict(newv)
                    bind.update({p: pt[p] for p in params})
                    for o, inv in zip(T.old, T.inverse):
                        err = abs(evaluate(inv, bind) - float(pt[o]))
                        worst = max(worst, err / (1 + abs(float(pt[o]))))
                except EvaluationError:
                    continue
                done += 1
    return worst
