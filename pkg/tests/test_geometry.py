import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from flatkit.geometry import (Distribution, NotProjectable, StraighteningFailed,
                              Transformation, VectorField, analyze,
                              build_adapted_chart, check_f_related,
                              check_transformation, express_in_chart,
                              f_related_residuals, input_fields, is_involutive,
                              lie_bracket, plus, pushforward, straighten, try_chart)
from flatkit.symbolic import Const, Var, ZERO, equal, simplify, substitute
from flatkit.system import parse_system

x1, x2, x3, x4 = (Var(f"x{i}") for i in range(1, 5))
u1, u2 = Var("u1"), Var("u2")


def field(frame, **coeffs):
    frame = list(frame)
    return VectorField(frame, [coeffs.get(v.label, 0) for v in frame])


def same_span_up_to_scaling(D, fields):
    return D.same_span(Distribution(D.frame, fields))


# ------------------------------------------------------------- brackets

def test_bracket_of_coordinate_fields_vanishes():
    frame = [u1, u2]
    assert lie_bracket(VectorField.coordinate(frame, u1),
                       VectorField.coordinate(frame, u2)).is_zero()


def test_bracket_hand_computation():
    frame = [x1, x2]
    v = field(frame, x2=x1)
    w = VectorField.coordinate(frame, x1)
    assert lie_bracket(v, w) == field(frame, x2=-1)


# ----------------------------------------------------------------- charts

def test_academic_chart(academic):
    chart = build_adapted_chart(academic)
    assert chart.h == [x1, x3]
    assert chart.check_roundtrip()


def test_transformed_robot_chart(robot_transformed):
    chart = build_adapted_chart(robot_transformed)
    assert chart.h == [x3, Var("ub1")]


def test_single_state_chart_picks_the_state():
    s = parse_system("states x\ninputs u\nnext x = u\nequilibrium x=0 u=0\n")
    chart = build_adapted_chart(s)
    assert chart.h == [Var("x")]
    assert list(chart.forward_map().values()) == [Var("u"), Var("x")]


def test_input_field_in_academic_chart(academic):
    chart = build_adapted_chart(academic)
    v = express_in_chart(input_fields(academic)[0], chart)
    xi1, xi2 = chart.xi
    expected = {plus(x1): academic.parse("-x1/(x3+1)"), plus(x2): xi1 * (xi2 + 1),
                plus(x3): Const(1), plus(x4): ZERO, xi1: ZERO, xi2: ZERO}
    expected[plus(x1)] = substitute(expected[plus(x1)], {x1: plus(x1), x3: plus(x3)})
    for var, c in expected.items():
        assert equal(v.coeff(var), c), var


def test_input_field_in_transformed_robot_chart(robot_transformed):
    chart = build_adapted_chart(robot_transformed)
    v = express_in_chart(input_fields(robot_transformed)[0], chart)
    xi1, xi2 = chart.xi
    half = Const(Fraction(1, 2))
    arg = half * (plus(x3) + xi1)
    from flatkit.symbolic import cos, sin
    assert equal(v.coeff(plus(x1)), cos(arg))
    assert equal(v.coeff(plus(x2)), sin(arg))
    assert v.coeff(xi2) == Const(1)


def test_constant_field_in_identity_chart():
    s = parse_system("states x\ninputs u\nnext x = u\nequilibrium x=0 u=0\n")
    chart = build_adapted_chart(s)
    v = express_in_chart(VectorField.coordinate(s.coords, Var("u")), chart)
    assert v.coeffs == (Const(1), ZERO)


# ---------------------------------------------------------- projectability

def test_academic_step1_distribution(academic):
    res = analyze(academic, build_adapted_chart(academic))
    frame = academic.coords
    assert same_span_up_to_scaling(res.distribution, [field(frame, u1=-2, u2=1)])
    fr = [plus(x) for x in academic.states]
    assert same_span_up_to_scaling(res.pushforward, [field(fr, **{"x2@1": -3, "x4@1": 1})])


def test_transformed_robot_has_no_projectable_field(robot_transformed):
    res = analyze(robot_transformed, build_adapted_chart(robot_transformed))
    assert res.distribution is None
    assert res.certificate is not None and res.certificate.exact


def test_exact_robot_has_no_projectable_field(robot_exact):
    res = analyze(robot_exact, build_adapted_chart(robot_exact))
    assert res.distribution is None and res.certificate.exact


def test_academic_step2_full_input_span():
    s = parse_system("""states x1 x2 x3
inputs u1 u2
next x1 = (x2 + x3)/(u2 + 1)
next x2 = x1*(x3 + 1)*u2 + u1
next x3 = u2
equilibrium x1=0 x2=0 x3=0 u1=0 u2=0
""")
    res = analyze(s, build_adapted_chart(s))
    assert res.distribution.dim() == 2
    fr = [plus(x) for x in s.states]
    expected = [field(fr, **{"x2@1": 1}),
                VectorField(fr, [s.parse("-x1/(x3+1)").__class__ and
                                 substitute(s.parse("-x1/(x3+1)"),
                                            {x1: plus(x1), x3: plus(x3)}),
                                 ZERO, Const(1)])]
    assert same_span_up_to_scaling(res.pushforward, expected)
    assert is_involutive(res.distribution)


def test_projectability_chart_independence(academic):
    dims = set()
    for h in ([x1, x3], [x3, x1]):
        chart = try_chart(academic, h)
        dims.add(analyze(academic, chart).distribution.dim())
    assert dims == {1}


def test_pushforward_rejects_fibre_dependence(academic):
    chart = build_adapted_chart(academic)
    D = Distribution(academic.coords, [VectorField.coordinate(academic.coords, u1)])
    with pytest.raises(NotProjectable):
        pushforward(D, academic, chart)


SQRT = parse_system("""states x1 x2
inputs u1
next x1 = x2
next x2 = sqrt(u1 + 4) - 2 + x1
equilibrium x1=0 x2=0 u1=0
""")


def test_pushforward_uses_the_span_not_the_generator():
    # f_*(d/du1) depends on u1, its span does not
    chart = build_adapted_chart(SQRT)
    D = Distribution(SQRT.coords, [VectorField.coordinate(SQRT.coords, Var("u1"))])
    fD = pushforward(D, SQRT, chart)
    assert fD.same_span(Distribution(fD.frame, [field(fD.frame, **{"x2@1": 1})]))


def test_pushforward_of_zero_distribution(academic):
    chart = build_adapted_chart(academic)
    D = Distribution.zero(academic.coords)
    assert pushforward(D, academic, chart).dim() == 0


def test_pushforward_preserves_dimension(academic):
    res = analyze(academic, build_adapted_chart(academic))
    assert res.pushforward.dim() == res.distribution.dim()


# ------------------------------------------------------------ straightening

def test_straighten_input_distribution():
    frame = [u1, u2]
    D = Distribution(frame, [field(frame, u1=-2, u2=1)])
    T = straighten(D, frame, [Var("ub1"), Var("ub2")])
    fwd = T.forward_map()
    assert equal(fwd[Var("ub1")], u1 + 2 * u2)
    assert fwd[Var("ub2")] == u2
    assert T.check_roundtrip()


def test_straighten_state_distribution():
    frame = [x1, x2, x3, x4]
    D = Distribution(frame, [field(frame, x2=-3, x4=1)])
    names = [Var(f"xb{i}") for i in range(1, 5)]
    T = straighten(D, frame, names)
    fwd = T.forward_map()
    assert equal(fwd[names[1]], x2 + 3 * x4)
    assert [fwd[names[i]] for i in (0, 2, 3)] == [x1, x3, x4]


def test_straighten_step2_distribution(academic):
    frame = [x1, x2, x3]
    g = VectorField(frame, [academic.parse("-x1/(x3+1)"), ZERO, Const(1)])
    D = Distribution(frame, [VectorField.coordinate(frame, x2), g])
    names = [Var(f"xb{i}") for i in range(1, 4)]
    T = straighten(D, frame, names, base={x1: 0, x2: 0, x3: 0})
    fwd = T.forward_map()
    assert equal(fwd[names[0]], academic.parse("x1*(x3+1)"))
    assert fwd[names[1]] == x2 and fwd[names[2]] == x3
    assert T.check_roundtrip()


def test_straighten_identity_for_coordinate_fields():
    frame = [x1, x2]
    D = Distribution(frame, [VectorField.coordinate(frame, x2)])
    T = straighten(D, frame, [Var("a"), Var("b")])
    assert T.is_identity()


def test_straighten_disabled_raises():
    frame = [u1, u2]
    D = Distribution(frame, [field(frame, u1=-2, u2=1)])
    with pytest.raises(StraighteningFailed):
        straighten(D, frame, [Var("a"), Var("b")], enabled=False)


def test_user_transformation_is_checked():
    frame = [u1, u2]
    D = Distribution(frame, [field(frame, u1=-2, u2=1)])
    a, b = Var("a"), Var("b")
    good = Transformation(frame, [a, b], [u1 + 2 * u2, u2], [a - 2 * b, b], [b])
    bad = Transformation(frame, [a, b], [u1, u2], [a, b], [b])
    assert check_transformation(D, good)
    assert not check_transformation(D, bad)


@settings(max_examples=20, deadline=None)
@given(st.integers(-3, 3).filter(bool), st.integers(-3, 3), st.integers(-3, 3))
def test_straightened_generators_are_coordinate_fields(a, b, c):
    # span{a ∂x1 + (b + c x1) ∂x2} straightened on (x1, x2)
    frame = [x1, x2]
    g = VectorField(frame, [Const(a), Const(b) + Const(c) * x1])
    D = Distribution(frame, [g])
    new = [Var("p"), Var("q")]
    T = straighten(D, frame, new, base={x1: 0, x2: 0})
    inv = T.inverse_map()
    for n_, fwd in zip(T.new, T.forward):
        coeff = substitute(g.apply(fwd), inv)
        if n_ in T.straightened:
            assert simplify(coeff) != ZERO
        else:
            assert simplify(coeff) == ZERO


# ------------------------------------------------------------ f-relatedness

def test_reference_pair_is_f_related(academic):
    s = academic.parse("x2+x3+3*x4")
    v = VectorField(academic.coords, [0, 0, 0, 0, 2 * s, -s])
    fr = [plus(x) for x in academic.states]
    c = plus(x1) * (plus(x3) + 1)
    w = VectorField(fr, [0, 3 * c, 0, -c])
    assert check_f_related(v, w, academic)


def test_unrelated_pair_has_nonzero_residual(academic):
    v = VectorField.coordinate(academic.coords, u1)
    fr = [plus(x) for x in academic.states]
    w = VectorField(fr, [0, 0, 0, 0])
    assert not check_f_related(v, w, academic)
    res = f_related_residuals(v, w, academic)
    assert res[2] == Const(1)


def test_pushforward_pair_is_f_related(academic):
    res = analyze(academic, build_adapted_chart(academic))
    assert check_f_related(res.distribution.generators[0], res.pushforward.generators[0],
                           academic)
