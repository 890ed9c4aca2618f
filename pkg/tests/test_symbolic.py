import random
from fractions import Fraction

import pytest
from hypothesis import example, given, settings, strategies as st

from flatkit.symbolic import (Apply, Const, DivisionByZero, DomainError,
                              ExprSyntaxError, NoSolution, NonUnique, NotAffine,
                              Neg, Power, Product, Quotient, Sum, ZERO, Unique, UnknownSymbol, Var,
                              VarTable, differentiate, equal, evaluate, generic_rank,
                              jacobian, parse, parse_raw, simplify,
                              solve_linear_symbolic, substitute, to_text)
from flatkit.symbolic.numeric import evaluate_exact

from generators import random_expr

x1, x2, x3, x4 = (Var(f"x{i}") for i in range(1, 5))
u1, u2 = Var("u1"), Var("u2")
XI1 = Var("xi1")


def table(*names):
    t = VarTable()
    for n in names:
        t.add(n, "state")
    return t


ACADEMIC = table("x1", "x2", "x3", "x4", "u1", "u2")


# --------------------------------------------------------------- parsing

def test_parse_product_of_var_and_sum():
    e = parse("x1*(x3+1)", ACADEMIC)
    assert e == simplify(Product((x1, Sum((x3, Const(1))))))
    assert isinstance(e, Product) and e.factors[0] == x1
    assert to_text(e) == "x1*(x3 + 1)"


def test_parse_academic_update_is_quotient_of_sums():
    e = parse("(x2+x3+3*x4)/(u1+2*u2+1)", ACADEMIC)
    assert isinstance(e, Quotient)
    assert isinstance(e.num, Sum) and isinstance(e.den, Sum)
    assert equal(e.num, x2 + x3 + 3 * x4)
    assert equal(e.den, u1 + 2 * u2 + 1)


def test_parse_sin_product():
    e = parse("sin(x3)*u1", ACADEMIC)
    assert isinstance(e, Product)
    assert set(e.factors) == {u1, Apply("sin", x3)}


def test_parse_shifted_symbol():
    t = table("u1")
    assert parse("u1@2", t) == Var("u1", 2)
    assert parse("u1@0", t) == u1


@pytest.mark.parametrize("text,offset", [
    ("x1 + * x2", 5),
    ("(x1 + x2", 8),
    ("x1 $ x2", 3),
    ("x1 +", 4),
    ("x1 x2", 3),
])
def test_syntax_error_reports_byte_offset(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text, ACADEMIC)
    assert info.value.offset == offset


def test_syntax_error_offset_counts_utf8_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x1 + é", ACADEMIC)
    assert info.value.offset == 5


def test_unknown_symbol_names_offender():
    with pytest.raises(UnknownSymbol) as info:
        parse("x1 + zz", ACADEMIC)
    assert info.value.name == "zz"


def test_parameters_become_constants():
    t = table("x1")
    t.add_param("T", Fraction(1, 10))
    assert parse("T*x1", t) == Product((Const(Fraction(1, 10)), x1))


def test_number_token_is_greedy_rational():
    assert parse("1/2/3") == Const(Fraction(1, 6))
    # "2/3" is one number token, so this reads x1/(2/3)
    assert parse("x1/2/3", ACADEMIC) == parse("3/2*x1", ACADEMIC)
    assert parse("x1/2/(3)", ACADEMIC) == parse("x1/6", ACADEMIC)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
@example(93643653)
def test_parse_print_round_trip(seed):
    rng = random.Random(seed)
    e = random_expr(rng, [x1, x2, Var("u1", 2)], depth=3,
                    functions=("sin", "cos", "exp", "tan"))
    canon = simplify(e)
    assert parse(to_text(canon)) == canon
    assert parse(to_text(e)) == canon


# --------------------------------------------------------- canonical form

def test_canonical_flattening_and_folding():
    e = simplify(Sum((Sum((x1, Const(2))), Sum((x2, Const(-2)), ), Const(0))))
    assert e == simplify(x1 + x2)
    assert isinstance(e, Sum) and all(not isinstance(t, Sum) for t in e.terms)
    assert simplify(Product((Const(1), x1))) == x1


def test_canonical_ordering_is_structural():
    assert simplify(x2 + x1) == simplify(x1 + x2)
    assert simplify(x1 * x2) == simplify(x2 * x1)


def test_pythagorean_identity():
    s, c = Apply("sin", x3), Apply("cos", x3)
    assert simplify(s * s + c * c) == Const(1)


def test_rational_cancellation():
    e = (x1 * x1 - 1) / (x1 - 1)
    assert simplify(e) == simplify(x1 + 1)


def test_exp_of_rational_multiples_share_a_generator():
    half = Power(Apply("exp", Product((Const(Fraction(1, 2)), x1))), 2)
    assert simplify(Sum((half, Neg(Apply("exp", x1))))) == ZERO
    third = Apply("exp", Product((Const(Fraction(1, 3)), x1)))
    assert equal(third * Apply("exp", Product((Const(Fraction(1, 2)), x1))),
                 Apply("exp", Product((Const(Fraction(5, 6)), x1))))


def test_exp_of_sum_splits():
    assert equal(Apply("exp", x1 + x2), Apply("exp", x1) * Apply("exp", x2))


def test_constants_have_positive_denominators():
    c = simplify(Const(Fraction(3, -6)))
    assert c.value == Fraction(-1, 2) and c.value.denominator > 0


# --------------------------------------------------------- differentiation

def test_derivative_quotient_rule():
    e = parse("(x2+x3+3*x4)/(u1+2*u2+1)", ACADEMIC)
    assert equal(differentiate(e, u1), parse("-(x2+x3+3*x4)/(u1+2*u2+1)^2", ACADEMIC))


def test_derivative_of_product():
    assert differentiate(parse("x1*(x3+1)", ACADEMIC), x3) == x1


def test_derivative_academic_second_update_law():
    e = parse("x1*(x3+1)*(u1+2*u2-3)", ACADEMIC)
    assert equal(differentiate(e, u2), parse("2*x1*(x3+1)", ACADEMIC))


def test_chain_rule_through_functions():
    e = parse("sin(x1^2)", table("x1"))
    assert equal(differentiate(e, x1), parse("2*x1*cos(x1^2)", table("x1")))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.fractions(-5, 5, max_denominator=7),
       st.fractions(-5, 5, max_denominator=7))
def test_differentiation_is_linear(seed, a, b):
    rng = random.Random(seed)
    e1 = random_expr(rng, [x1, x2], depth=3)
    e2 = random_expr(rng, [x1, x2], depth=3)
    lhs = differentiate(Const(a) * e1 + Const(b) * e2, x1)
    rhs = simplify(Const(a) * differentiate(e1, x1) + Const(b) * differentiate(e2, x1))
    assert lhs == rhs or equal(lhs, rhs)


# ------------------------------------------------------------ substitution

def test_substitute_simple():
    f1 = Var("f1expr")
    assert equal(substitute(x1 + u1, {x1: f1}), f1 + u1)


def test_substitute_is_simultaneous():
    x, y = Var("x"), Var("y")
    assert substitute(x + y, {x: y, y: x}) == simplify(y + x)
    assert substitute(x - y, {x: y, y: x}) == simplify(y - x)


def test_substitute_empty_is_identity():
    e = parse("x1*(x3+1)", ACADEMIC)
    assert substitute(e, {}) == e


# -------------------------------------------------------------- evaluation

@pytest.mark.parametrize("text,point,value", [
    ("x1*(x3+1)", {"x1": 2, "x3": 3}, 8.0),
    ("(x2+x3+3*x4)/(u1+2*u2+1)", {v: 0 for v in ("x2", "x3", "x4", "u1", "u2")}, 0.0),
    ("sin(x3)*u1", {"x3": 0, "u1": 5}, 0.0),
])
def test_evaluate(text, point, value):
    e = parse(text, ACADEMIC)
    assert evaluate(e, {Var(k): v for k, v in point.items()}) == value


def test_evaluate_division_by_zero_carries_subexpression():
    e = parse("1/(x1-1)", table("x1"))
    with pytest.raises(DivisionByZero) as info:
        evaluate(e, {x1: 1})
    assert info.value.subexpr is not None


@pytest.mark.parametrize("text", ["log(x1)", "sqrt(x1)"])
def test_evaluate_domain_errors(text):
    with pytest.raises(DomainError):
        evaluate(parse(text, table("x1")), {x1: -1})


def test_exact_folding_of_rational_subexpressions():
    assert evaluate_exact(parse("x1/3 + 1/6", table("x1")), {x1: 1}) == Fraction(1, 2)


# ------------------------------------------------------------ linear solving

def test_solve_nonunique_null_space():
    c1, c2 = Var("c1"), Var("c2")
    res = solve_linear_symbolic([c1 + 2 * c2], [c1, c2])
    assert isinstance(res, NonUnique)
    assert len(res.basis) == 1
    b = res.basis[0]
    # the basis vector is (−2, 1) up to scaling
    assert equal(b[c1] + 2 * b[c2], Const(0)) and b[c2] != Const(0)
    assert simplify(b[c1] / b[c2]) == Const(-2)


def test_solve_unique_zero():
    c1, c2 = Var("c1"), Var("c2")
    res = solve_linear_symbolic([c1, c2], [c1, c2])
    assert isinstance(res, Unique)
    assert res[c1] == Const(0) and res[c2] == Const(0)


def test_solve_with_symbolic_coefficients():
    c1, c2 = Var("c1"), Var("c2")
    res = solve_linear_symbolic([c1 * XI1 + c2 * XI1, c1 - c2], [c1, c2])
    assert isinstance(res, Unique)
    assert res[c1] == Const(0) and res[c2] == Const(0)


def test_solve_inconsistent():
    c1 = Var("c1")
    assert isinstance(solve_linear_symbolic([c1, c1 - 1], [c1]), NoSolution)


def test_solve_rejects_nonaffine():
    c1 = Var("c1")
    with pytest.raises(NotAffine):
        solve_linear_symbolic([c1 * c1 - 1], [c1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_solution_substitutes_back_to_zero(seed):
    rng = random.Random(seed)
    cs = [Var(f"c{i}") for i in range(3)]
    eqs = []
    for _ in range(rng.randint(1, 3)):
        terms = [Const(rng.randint(-3, 3)) * random_expr(rng, [x1], depth=1,
                                                         functions=()) * c
                 for c in cs]
        eqs.append(simplify(Sum(tuple(terms)) - Const(rng.randint(-2, 2))))
    res = solve_linear_symbolic(eqs, cs)
    if isinstance(res, Unique):
        sol = dict(res)
        assert all(substitute(e, sol) == Const(0) for e in eqs)
    elif isinstance(res, NonUnique):
        sol = dict(res.particular)
        assert all(substitute(e, sol) == Const(0) for e in eqs)
        for b in res.basis:
            hom = [simplify(e - substitute(e, {c: Const(0) for c in cs})) for e in eqs]
            assert all(substitute(h, b) == Const(0) for h in hom)


# ------------------------------------------------------------------- rank

def test_generic_rank_of_academic_input_jacobian(academic):
    assert generic_rank(academic.input_jacobian(), academic.coords) == 2


def test_generic_rank_zero_matrix():
    assert generic_rank([[Const(0), Const(0)], [Const(0), Const(0)]]) == 0


def test_generic_rank_of_redundant_scalar_map():
    a, b = Var("xbb2"), Var("xbb3")
    assert generic_rank(jacobian([a + b], [a, b])) == 1


def test_generic_rank_is_deterministic(academic):
    J = academic.full_jacobian()
    assert generic_rank(J, seed=7) == generic_rank(J, seed=7) == 4
