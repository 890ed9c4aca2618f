"""Exception hierarchy of the symbolic kernel."""


class SymbolicError(Exception):
    """Base class for all kernel errors."""


class ExprSyntaxError(SymbolicError):
    def __init__(self, message, offset, text=""):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.text = text


class UnknownSymbol(SymbolicError):
    def __init__(self, name, offset=None):
        where = "" if offset is None else f" at byte {offset}"
        super().__init__(f"unknown symbol {name!r}{where}")
        self.name = name
        self.offset = offset


class EvaluationError(SymbolicError):
    """Numeric evaluation failed; ``subexpr`` is the offending node."""

    def __init__(self, message, subexpr=None):
        super().__init__(message)
        self.subexpr = subexpr


class DivisionByZero(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


class NotAffine(SymbolicError):
    def __init__(self, equation, unknown):
        super().__init__(f"equation {equation} is not affine in {unknown}")
        self.equation = equation
        self.unknown = unknown


class UnsupportedExpression(SymbolicError):
    """Raised when a backend result falls outside the Expr language."""


class InversionFailed(SymbolicError):
    """Triangular elimination could not isolate every unknown."""

    def __init__(self, message, unsolved=()):
        super().__init__(message)
        self.unsolved = tuple(unsolved)
