"""Syntax tree of the field/predicate language and its vectorized evaluator.

Nodes are frozen dataclasses, so a parsed tree can be shared between
workers without copying. Evaluation works on an (N, dim) array of points
and always walks the tree left to right.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Callable, Union

import numpy as np

from src.errors import DomainEvaluationError


class Kind(StrEnum):
    number = "number"
    boolean = "boolean"


CONSTANTS: dict[str, float] = {"pi": math.pi, "e": math.e}

# name -> (min arity, max arity or None for variadic)
FUNCTIONS: dict[str, tuple[int, int | None]] = {
    "sin": (1, 1),
    "cos": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "sqrt": (1, 1),
    "abs": (1, 1),
    "min": (2, None),
    "max": (2, None),
}

ARITHMETIC = ("+", "-", "*", "/", "^")
COMPARISONS = ("<", "<=", ">", ">=")
CONNECTIVES = ("and", "or")


@dataclass(frozen=True, slots=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Const:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Var:
    index: int
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Neg:
    operand: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Call:
    name: str
    args: tuple["Expr", ...]
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Not:
    operand: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Logic:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


Expr = Union[Num, Const, Var, Neg, BinOp, Call, Compare, Not, Logic]


def kind_of(expr: Expr) -> Kind:
    if isinstance(expr, (Compare, Not, Logic)):
        return Kind.boolean
    return Kind.number


def max_variable(expr: Expr) -> int:
    """Largest variable index referenced (0 when the tree has no variables)."""
    match expr:
        case Var(index=index):
            return index
        case Neg(operand=operand) | Not(operand=operand):
            return max_variable(operand)
        case BinOp(left=left, right=right) | Compare(left=left, right=right) | Logic(left=left, right=right):
            return max(max_variable(left), max_variable(right))
        case Call(args=args):
            return max((max_variable(a) for a in args), default=0)
        case _:
            return 0


# ----------------------------
# Printing
# ----------------------------

def pretty(expr: Expr) -> str:
    """Canonical, fully parenthesized text that re-parses to the same tree."""
    match expr:
        case Num(value=value):
            return repr(float(value))
        case Const(name=name):
            return name
        case Var(index=index):
            return f"x{index}"
        case Neg(operand=operand):
            return f"(-{pretty(operand)})"
        case BinOp(op=op, left=left, right=right) | Compare(op=op, left=left, right=right):
            return f"({pretty(left)} {op} {pretty(right)})"
        case Logic(op=op, left=left, right=right):
            return f"({pretty(left)} {op} {pretty(right)})"
        case Not(operand=operand):
            return f"(not {pretty(operand)})"
        case Call(name=name, args=args):
            return f"{name}({', '.join(pretty(a) for a in args)})"
    raise TypeError(f"not an expression node: {expr!r}")


# ----------------------------
# Evaluation
# ----------------------------

def _fail(message: str, points: np.ndarray, bad: np.ndarray) -> None:
    first = int(np.flatnonzero(bad)[0])
    raise DomainEvaluationError(message, points[first])


def _finite(values: np.ndarray, points: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if bad.any():
        _fail(f"non-finite value from {what}", points, bad)
    return values


def _unary(name: str, arg: np.ndarray, points: np.ndarray) -> np.ndarray:
    if name == "log" and (arg <= 0).any():
        _fail("log of a non-positive argument", points, arg <= 0)
    if name == "sqrt" and (arg < 0).any():
        _fail("sqrt of a negative argument", points, arg < 0)
    fn: Callable[[np.ndarray], np.ndarray] = {
        "sin": np.sin,
        "cos": np.cos,
        "exp": np.exp,
        "log": np.log,
        "sqrt": np.sqrt,
        "abs": np.abs,
    }[name]
    return _finite(fn(arg), points, name)


def _arith(op: str, left: np.ndarray, right: np.ndarray, points: np.ndarray) -> np.ndarray:
    match op:
        case "+":
            out = left + right
        case "-":
            out = left - right
        case "*":
            out = left * right
        case "/":
            zero = right == 0
            if zero.any():
                _fail("division by zero", points, zero)
            out = left / right
        case "^":
            fractional = (left < 0) & (right != np.floor(right))
            if fractional.any():
                _fail("negative base raised to a non-integer power", points, fractional)
            pole = (left == 0) & (right < 0)
            if pole.any():
                _fail("division by zero", points, pole)
            out = np.power(left, right)
        case _:
            raise ValueError(f"unknown operator {op}")
    return _finite(out, points, f"'{op}'")


def _compare(op: str, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    match op:
        case "<":
            return left < right
        case "<=":
            return left <= right
        case ">":
            return left > right
        case ">=":
            return left >= right
    raise ValueError(f"unknown comparison {op}")


def evaluate(expr: Expr, points: np.ndarray) -> np.ndarray:
    """Evaluate `expr` at every row of `points` (shape (N, dim)).

    Numeric trees return float64 arrays, boolean trees return bool arrays.
    Domain violations raise DomainEvaluationError naming the first bad point.
    `and`/`or` only evaluate their right operand where it can change the result.
    """
    n = points.shape[0]
    with np.errstate(all="ignore"):
        match expr:
            case Num(value=value):
                return np.full(n, float(value))
            case Const(name=name):
                return np.full(n, CONSTANTS[name])
            case Var(index=index):
                return np.array(points[:, index - 1], dtype=float)
            case Neg(operand=operand):
                return -evaluate(operand, points)
            case BinOp(op=op, left=left, right=right):
                lhs = evaluate(left, points)
                rhs = evaluate(right, points)
                return _arith(op, lhs, rhs, points)
            case Call(name=name, args=args):
                values = [evaluate(a, points) for a in args]
                if name == "min":
                    out = values[0]
                    for v in values[1:]:
                        out = np.minimum(out, v)
                    return out
                if name == "max":
                    out = values[0]
                    for v in values[1:]:
                        out = np.maximum(out, v)
                    return out
                return _unary(name, values[0], points)
            case Compare(op=op, left=left, right=right):
                lhs = evaluate(left, points)
                rhs = evaluate(right, points)
                return _compare(op, lhs, rhs)
            case Not(operand=operand):
                return ~evaluate(operand, points)
            case Logic(op=op, left=left, right=right):
                out = evaluate(left, points).copy()
                pending = out if op == "and" else ~out
                if pending.any():
                    out[pending] = evaluate(right, points[pending])
                return out
    raise TypeError(f"not an expression node: {expr!r}")
