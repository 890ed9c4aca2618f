import numpy as np
import pytest

from flatkit.config import Config
from flatkit.geometry import Distribution, VectorField, plus
from flatkit.symbolic import Const, Var, equal, evaluate, free_symbols, parse, substitute
from flatkit.system import shift_output
from flatkit.verify import (InvalidCandidate, NotVerified, Refuted, Verified,
                            frelated_from_flat_output, numeric_certificate,
                            verify_candidate)

ACADEMIC_PARAM = {
    "x1": "y1/(y1@1 - y2 + 1)",
    "x2": "3*y1*(y1@2 - y2@1) + y2 - 3*y2@1",
    "x3": "y1@1 - y2",
    "x4": "y1*(y2@1 - y1@2) + y2@1",
    "u1": "2*y1 + 2*y1@1*(y1@3 - y2@2) + y1@2 - y2@1 - 2*y2@2",
    "u2": "-y1 + y1@1*(y2@2 - y1@3) + y2@2",
}


@pytest.fixture(scope="module")
def academic_result(academic):
    cand = [academic.parse("x1*(x3 + 1)"), academic.parse("x2 + 3*x4")]
    return verify_candidate(academic, cand)


def test_academic_parametrization_matches_reference(academic, academic_result):
    res = academic_result
    assert isinstance(res, Verified)
    assert tuple(res.R) == (3, 2)
    p = res.parametrization
    got = dict(zip([v.label for v in academic.coords], p.F_x + p.F_u))
    for name, text in ACADEMIC_PARAM.items():
        assert equal(got[name], parse(text)), name


def test_academic_both_routes(academic_result):
    assert academic_result.symbolic
    assert academic_result.numeric is not None
    assert academic_result.numeric.points == 100
    assert academic_result.numeric.max_residual < 1e-9


def test_shift_identity_at_random_points(academic, academic_result):
    """δ_y F_x = f∘F at 100 points of the trivial jet space."""
    p = academic_result.parametrization
    F = dict(zip(academic.states, p.F_x))
    F.update(zip(academic.inputs, p.F_u))
    names = [y.name for y in p.y]
    lhs = [shift_output(e, names) for e in p.F_x]
    rhs = [substitute(f, F) for f in academic.updates]
    rng = np.random.default_rng(0)
    jets = sorted({v for e in lhs + rhs for v in free_symbols(e)}, key=lambda v: v.label)
    checked = 0
    while checked < 100:
        pt = {v: float(rng.uniform(-0.5, 0.5)) for v in jets}
        try:
            a = [evaluate(e, pt) for e in lhs]
            b = [evaluate(e, pt) for e in rhs]
        except Exception:
            continue
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9)
        checked += 1


def test_non_flat_candidate_is_refuted(academic):
    res = verify_candidate(academic, [Var("x1"), Var("x2")])
    assert isinstance(res, Refuted)
    assert "stall" in res.reason


def test_second_branch_output_is_verified(academic):
    res = verify_candidate(academic, [academic.parse("x1*(x3 + 1)"), Var("x3")])
    assert isinstance(res, Verified) and tuple(res.R) == (3, 2)


def test_input_dependent_candidate(academic):
    cand = [academic.parse("x1*(x3 + 1) + exp(u1 + 2*u2)"), Var("x3")]
    res = verify_candidate(academic, cand)
    assert isinstance(res, Verified)
    assert res.symbolic


def test_wrong_component_count_is_rejected(academic):
    with pytest.raises(InvalidCandidate):
        verify_candidate(academic, [Var("x1")])


def test_euler_robot_verified_numerically(robot_euler):
    res = verify_candidate(robot_euler, [Var("x1"), Var("x2")])
    assert isinstance(res, Verified)
    assert res.numeric is not None and res.numeric.max_residual < 1e-9


def test_numeric_certificate_is_reproducible(academic):
    comps = [academic.parse("x1*(x3 + 1)"), academic.parse("x2 + 3*x4")]
    a, _ = numeric_certificate(academic, comps, (3, 2), Config(seed=7))
    b, _ = numeric_certificate(academic, comps, (3, 2), Config(seed=7))
    assert a.to_json() == b.to_json()


def test_frelated_pair_matches_reference(academic, academic_result):
    v, w = frelated_from_flat_output(academic, academic_result.parametrization, 0)
    g = academic.parse("x2 + x3 + 3*x4")
    assert all(equal(a, b) for a, b in zip(v.coeffs, [Const(0)] * 4 + [2 * g, -g]))
    h = parse("x1@1*(x3@1 + 1)")
    assert all(equal(a, b) for a, b in zip(w.coeffs, [Const(0), 3 * h, Const(0), -h]))


@pytest.mark.parametrize("constants", [{}, {"u1": 1}, {"u2": -2}, {"u1": 3, "u2": 1},
                                       {"u1": "1/2", "u2": "-1/3"}])
def test_frelated_pair_for_exponential_output(academic, constants):
    from fractions import Fraction
    cand = [academic.parse("x1*(x3 + 1) + exp(u1 + 2*u2)"), Var("x3")]
    res = verify_candidate(academic, cand)
    consts = {k: Fraction(v) for k, v in constants.items()}
    v, w = frelated_from_flat_output(academic, res.parametrization, 0, consts)
    D = Distribution(academic.coords, [VectorField(academic.coords, [0, 0, 0, 0, -2, 1])])
    assert Distribution(academic.coords, [v]).same_span(D)
    fD = Distribution(w.frame, [VectorField(w.frame, [0, -3, 0, 1])])
    assert Distribution(w.frame, [w]).same_span(fD)
