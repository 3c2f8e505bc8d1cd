from __future__ import annotations

import numpy as np

from src.errors import DimensionMismatchError, ExprTypeError
from src.expr.nodes import Expr, Kind, evaluate, kind_of, pretty
from src.expr.parser import parse_expression
from src.integrate.field import ScalarField, as_points


class ExprField(ScalarField):
    """A scalar field defined by a parsed numeric expression."""

    def __init__(
        self,
        expr: Expr,
        dim: int,
        *,
        bounds: tuple[float, float] | None = None,
        floor: float | None = None,
    ):
        super().__init__(dim, bounds=bounds, floor=floor, label=pretty(expr))
        self.expr = expr

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return evaluate(self.expr, points)


class ExprPredicate:
    """A membership predicate point -> {True, False} defined by a boolean expression."""

    def __init__(self, expr: Expr, dim: int):
        self.expr = expr
        self.dim = dim
        self.label = pretty(expr)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = as_points(points, self.dim)
        if pts.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        return evaluate(self.expr, pts)

    def describe(self) -> str:
        return self.label


def _check_dim(dim: int) -> None:
    if not isinstance(dim, int) or dim < 1:
        raise DimensionMismatchError(f"dimension must be a positive integer, got {dim!r}")


def parse_field(
    source: str,
    dim: int,
    *,
    bounds: tuple[float, float] | None = None,
    floor: float | None = None,
) -> ExprField:
    _check_dim(dim)
    expr = parse_expression(source, dim)
    if kind_of(expr) is not Kind.number:
        raise ExprTypeError(f"field must be real-valued, got a boolean expression: {source!r}")
    return ExprField(expr, dim, bounds=bounds, floor=floor)


def parse_predicate(source: str, dim: int) -> ExprPredicate:
    _check_dim(dim)
    expr = parse_expression(source, dim)
    if kind_of(expr) is not Kind.boolean:
        raise ExprTypeError(f"predicate must be boolean, got a real-valued expression: {source!r}")
    return ExprPredicate(expr, dim)


def evaluate_constant(source: str | float) -> float:
    """Value of a variable-free expression such as "-pi/2"; numbers pass through."""
    if isinstance(source, (int, float)):
        return float(source)
    expr = parse_expression(str(source), 0)
    if kind_of(expr) is not Kind.number:
        raise ExprTypeError(f"expected a number, got a boolean expression: {source!r}")
    return float(evaluate(expr, np.zeros((1, 0)))[0])
