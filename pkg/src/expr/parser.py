"""Recursive-descent parser for the field/predicate language.

Grammar, loosest binding first::

    disjunction := conjunction ("or" conjunction)*
    conjunction := negation ("and" negation)*
    negation    := "not" negation | comparison
    comparison  := sum (("<" | "<=" | ">" | ">=") sum)?
    sum         := product (("+" | "-") product)*
    product     := unary (("*" | "/") unary)*
    unary       := "-" unary | power
    power       := atom ("^" unary)?
    atom        := NUMBER | "pi" | "e" | x<i> | NAME "(" args ")" | "(" disjunction ")"

`^` is right-associative and binds tighter than unary minus, so
`-x1^2` is `-(x1^2)` and `2^-1` is `2^(-1)`. Comparisons do not chain.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from src.errors import ExprSyntaxError, ExprTypeError, UnknownFunctionError, UnknownVariableError
from src.expr.nodes import (
    COMPARISONS,
    CONSTANTS,
    FUNCTIONS,
    BinOp,
    Call,
    Compare,
    Const,
    Expr,
    Kind,
    Logic,
    Neg,
    Not,
    Num,
    Var,
    kind_of,
)

KEYWORDS = ("and", "or", "not")

_TOKEN = re.compile(
    r"""
    \s*(?:
        (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op><=|>=|[-+*/^(),<>])
    )
    """,
    re.VERBOSE,
)
_VARIABLE = re.compile(r"x([1-9][0-9]*)")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # number | name | op | end
    text: str
    pos: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup or "op"
        start = m.start(kind)
        tokens.append(Token(kind, m.group(kind), start))
        pos = m.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


class Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = tokenize(source)
        self.i = 0

    # ---- token stream helpers

    @property
    def current(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, *texts: str) -> bool:
        tok = self.current
        return tok.kind in ("op", "name") and tok.text in texts

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected '{text}'")
        return self.advance()

    def error(self, message: str, tok: Token | None = None) -> None:
        tok = tok or self.current
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"{message}, found {found}", tok.pos, self.source)

    def require(self, expr: Expr, kind: Kind, context: str) -> Expr:
        if kind_of(expr) is not kind:
            raise ExprTypeError(
                f"{context} needs a {kind} operand at column {expr.pos + 1}, got a {kind_of(expr)}"
            )
        return expr

    # ---- grammar

    def parse(self) -> Expr:
        expr = self.disjunction()
        if self.current.kind != "end":
            self.error("unexpected trailing input")
        return expr

    def disjunction(self) -> Expr:
        left = self.conjunction()
        while self.at("or"):
            tok = self.advance()
            right = self.conjunction()
            left = Logic(
                "or",
                self.require(left, Kind.boolean, "'or'"),
                self.require(right, Kind.boolean, "'or'"),
                tok.pos,
            )
        return left

    def conjunction(self) -> Expr:
        left = self.negation()
        while self.at("and"):
            tok = self.advance()
            right = self.negation()
            left = Logic(
                "and",
                self.require(left, Kind.boolean, "'and'"),
                self.require(right, Kind.boolean, "'and'"),
                tok.pos,
            )
        return left

    def negation(self) -> Expr:
        if self.at("not"):
            tok = self.advance()
            return Not(self.require(self.negation(), Kind.boolean, "'not'"), tok.pos)
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.sum()
        if self.current.kind == "op" and self.current.text in COMPARISONS:
            tok = self.advance()
            right = self.sum()
            node = Compare(
                tok.text,
                self.require(left, Kind.number, f"'{tok.text}'"),
                self.require(right, Kind.number, f"'{tok.text}'"),
                tok.pos,
            )
            if self.current.kind == "op" and self.current.text in COMPARISONS:
                self.error("comparisons cannot be chained")
            return node
        return left

    def sum(self) -> Expr:
        left = self.product()
        while self.current.kind == "op" and self.current.text in ("+", "-"):
            tok = self.advance()
            right = self.product()
            left = self._arith(tok, left, right)
        return left

    def product(self) -> Expr:
        left = self.unary()
        while self.current.kind == "op" and self.current.text in ("*", "/"):
            tok = self.advance()
            right = self.unary()
            left = self._arith(tok, left, right)
        return left

    def unary(self) -> Expr:
        if self.current.kind == "op" and self.current.text == "-":
            tok = self.advance()
            return Neg(self.require(self.unary(), Kind.number, "unary '-'"), tok.pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            tok = self.advance()
            exponent = self.unary()
            return self._arith(tok, base, exponent)
        return base

    def atom(self) -> Expr:
        tok = self.current
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number {tok.text!r} is out of range", tok.pos, self.source)
            return Num(value, tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.disjunction()
            self.expect(")")
            return inner
        if tok.kind == "name":
            return self.name()
        self.error("expected a number, variable, function call or '('")
        raise AssertionError("unreachable")

    def name(self) -> Expr:
        tok = self.advance()
        name = tok.text
        if name in KEYWORDS:
            self.error(f"misplaced keyword '{name}'", tok)
        if self.at("("):
            return self.call(tok)
        if name in CONSTANTS:
            return Const(name, tok.pos)
        m = _VARIABLE.fullmatch(name)
        if m and int(m.group(1)) <= self.dim:
            return Var(int(m.group(1)), tok.pos)
        raise UnknownVariableError(name, self.dim, tok.pos)

    def call(self, tok: Token) -> Expr:
        if tok.text not in FUNCTIONS:
            raise UnknownFunctionError(tok.text, tok.pos)
        self.expect("(")
        args: list[Expr] = []
        if not self.at(")"):
            args.append(self.disjunction())
            while self.at(","):
                self.advance()
                args.append(self.disjunction())
        self.expect(")")
        lo, hi = FUNCTIONS[tok.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            wanted = f"{lo}" if hi == lo else f"at least {lo}"
            raise ExprSyntaxError(
                f"{tok.text} takes {wanted} argument(s), got {len(args)}", tok.pos, self.source
            )
        for a in args:
            self.require(a, Kind.number, f"{tok.text}()")
        return Call(tok.text, tuple(args), tok.pos)

    def _arith(self, tok: Token, left: Expr, right: Expr) -> Expr:
        return BinOp(
            tok.text,
            self.require(left, Kind.number, f"'{tok.text}'"),
            self.require(right, Kind.number, f"'{tok.text}'"),
            tok.pos,
        )


def parse_expression(source: str, dim: int) -> Expr:
    """Parse `source` over variables x1..x`dim` into a syntax tree."""
    return Parser(source, dim).parse()
