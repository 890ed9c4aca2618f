"""Computer-algebra kernel: expressions, parsing, calculus, linear solving."""

from .calculus import differentiate, gradient, jacobian, substitute
from .canonical import equal, is_zero, simplify
from .elimination import solve_triangular
from .errors import (DivisionByZero, DomainError, EvaluationError,
                     ExprSyntaxError, InversionFailed, NotAffine, SymbolicError,
                     UnknownSymbol, UnsupportedExpression)
from .expr import (FUNCTIONS, ONE, ZERO, Apply, Const, Expr, Neg, Power,
                   Product, Quotient, Sum, Var, as_expr, cos, depends_on, exp,
                   free_symbols, is_const, sin, sort_key, to_text)
from .linsolve import (NoSolution, NonUnique, Unique, nullspace,
                       solve_linear_symbolic)
from .numeric import evaluate, evaluate_exact, evaluate_iv, evaluate_mp
from .parser import parse, parse_raw
from .sampling import generic_rank, make_rng, random_point, rank_at
from .vartable import VarTable

__all__ = [
    "Apply", "Const", "DivisionByZero", "DomainError", "EvaluationError",
    "Expr", "ExprSyntaxError", "FUNCTIONS", "InversionFailed", "Neg",
    "NoSolution", "NonUnique", "NotAffine", "ONE", "Power", "Product",
    "Quotient", "Sum", "SymbolicError", "Unique", "UnknownSymbol",
    "UnsupportedExpression", "Var", "VarTable", "ZERO", "as_expr", "cos",
    "depends_on", "differentiate", "equal", "evaluate", "evaluate_exact",
    "evaluate_iv", "evaluate_mp", "exp", "free_symbols", "generic_rank",
    "gradient", "is_const", "is_zero", "jacobian", "make_rng", "nullspace",
    "parse", "parse_raw", "random_point", "rank_at", "simplify", "sin",
    "solve_linear_symbolic", "solve_triangular", "sort_key", "substitute",
    "to_text",
]
