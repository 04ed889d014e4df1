"""Coefficient expression language.

A closed grammar for the periodic coefficients (c, g, a) and the exterior
datum phi read from configuration files::

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | atom
    atom  := number | 'pi' | ident | func '(' expr ')' | '(' expr ')'
    func  := sin | cos | exp | abs

Exactly one free variable is allowed per expression: ``y`` for functions on
the unit torus and ``x`` for exterior data.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "Expr",
    "Num",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ParseError",
    "ParseErrorKind",
    "PeriodicityReport",
    "parse",
    "evaluate",
    "evaluate_array",
    "to_source",
    "validate_periodic",
]


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


# name -> (scalar implementation, vectorized implementation)
FUNCTIONS = {
    "sin": (math.sin, np.sin),
    "cos": (math.cos, np.cos),
    "exp": (_exp, np.exp),
    "abs": (abs, np.abs),
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    """The constant pi (the only named constant)."""

    name: str = "pi"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Const, Var, Neg, BinOp, Call]


class ParseErrorKind(enum.Enum):
    UnexpectedToken = "UnexpectedToken"
    UnbalancedParen = "UnbalancedParen"
    UnknownIdentifier = "UnknownIdentifier"
    EmptyInput = "EmptyInput"


class ParseError(InputError):
    def __init__(self, kind: ParseErrorKind, position: int, detail: str = ""):
        msg = f"{kind.value} at position {position}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.kind = kind
        self.position = position


_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PUNCT = set("+-*/()")
# Keeps recursive parsing and evaluation well inside the interpreter stack.
MAX_NESTING = 100
MAX_DEPTH = 400


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append(("op", ch, i))
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(("num", m.group(), i))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        raise ParseError(ParseErrorKind.UnexpectedToken, i, f"unexpected character {ch!r}")
    return tokens


class _Parser:
    def __init__(self, text: str, variable: str):
        self.text = text
        self.variable = variable
        self.tokens = _tokenize(text)
        self.pos = 0
        self.depth = 0
        self.nesting = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def end_position(self) -> int:
        return len(self.text)

    def fail_at_end(self, expected: str):
        kind = ParseErrorKind.UnbalancedParen if self.depth else ParseErrorKind.UnexpectedToken
        raise ParseError(kind, self.end_position(), f"input ended, expected {expected}")

    def expr(self) -> Expr:
        node = self.term()
        while (tok := self.peek()) is not None and tok[1] in ("+", "-") and tok[0] == "op":
            self.pos += 1
            node = BinOp(tok[1], node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while (tok := self.peek()) is not None and tok[1] in ("*", "/") and tok[0] == "op":
            self.pos += 1
            node = BinOp(tok[1], node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok is not None and tok == ("op", "-", tok[2]):
            self.pos += 1
            self.enter(tok[2])
            node = Neg(self.unary())
            self.nesting -= 1
            return node
        return self.atom()

    def enter(self, where: int):
        self.nesting += 1
        if self.nesting > MAX_NESTING:
            raise ParseError(ParseErrorKind.UnexpectedToken, where, "expression nested too deeply")

    def expect_close(self, open_pos: int):
        tok = self.peek()
        if tok is None:
            raise ParseError(
                ParseErrorKind.UnbalancedParen, self.end_position(),
                f"'(' at position {open_pos} is never closed",
            )
        if tok[1] != ")":
            raise ParseError(ParseErrorKind.UnexpectedToken, tok[2], f"expected ')', got {tok[1]!r}")
        self.pos += 1
        self.depth -= 1

    def atom(self) -> Expr:
        tok = self.peek()
        if tok is None:
            self.fail_at_end("an operand")
        kind, text, where = tok
        if kind == "num":
            self.pos += 1
            return Num(float(text))
        if kind == "ident":
            self.pos += 1
            if text == "pi":
                return Const()
            if text == self.variable:
                return Var(text)
            if text in FUNCTIONS:
                nxt = self.peek()
                if nxt is None:
                    self.fail_at_end("'(' after function name")
                if nxt[1] != "(":
                    raise ParseError(ParseErrorKind.UnexpectedToken, nxt[2], f"expected '(' after {text}")
                self.pos += 1
                self.depth += 1
                self.enter(nxt[2])
                arg = self.expr()
                self.expect_close(nxt[2])
                self.nesting -= 1
                return Call(text, arg)
            raise ParseError(ParseErrorKind.UnknownIdentifier, where, f"unknown identifier {text!r}")
        if text == "(":
            self.pos += 1
            self.depth += 1
            self.enter(where)
            inner = self.expr()
            self.expect_close(where)
            self.nesting -= 1
            return inner
        if text == ")":
            raise ParseError(ParseErrorKind.UnbalancedParen, where, "unmatched ')'")
        raise ParseError(ParseErrorKind.UnexpectedToken, where, f"unexpected {text!r}")


def parse(text: str | bytes, variable: str = "y") -> Expr:
    """Parse ``text`` into an immutable expression tree.

    Raises :class:`ParseError` carrying the first offending position; no
    partial tree is ever returned.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as err:
            raise ParseError(ParseErrorKind.UnexpectedToken, err.start, "input is not valid UTF-8") from None
    if not text.strip():
        raise ParseError(ParseErrorKind.EmptyInput, 0)
    p = _Parser(text, variable)
    node = p.expr()
    tok = p.peek()
    if tok is not None:
        if tok[1] == ")":
            raise ParseError(ParseErrorKind.UnbalancedParen, tok[2], "unmatched ')'")
        raise ParseError(ParseErrorKind.UnexpectedToken, tok[2], f"unexpected {tok[1]!r}")
    if _depth(node) > MAX_DEPTH:
        raise ParseError(ParseErrorKind.UnexpectedToken, len(text), "expression tree too deep")
    return node


def _depth(root: Expr) -> int:
    deepest = 0
    stack = [(root, 1)]
    while stack:
        node, d = stack.pop()
        deepest = max(deepest, d)
        if isinstance(node, BinOp):
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
        elif isinstance(node, (Neg, Call)):
            stack.append((node.operand if isinstance(node, Neg) else node.arg, d + 1))
    return deepest


def evaluate(e: Expr, value: float) -> float:
    """Evaluate ``e`` at a single point in double precision."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return math.pi
    if isinstance(e, Var):
        return float(value)
    if isinstance(e, Neg):
        return -evaluate(e.operand, value)
    if isinstance(e, Call):
        return float(FUNCTIONS[e.func][0](evaluate(e.arg, value)))
    a = evaluate(e.left, value)
    b = evaluate(e.right, value)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0.0:
        raise DomainError(f"division by zero evaluating {to_source(e)} at {value!r}")
    return a / b


def evaluate_array(e: Expr, values) -> np.ndarray:
    """Vectorized evaluation; returns a float array shaped like ``values``."""
    values = np.asarray(values, dtype=float)
    if isinstance(e, Num):
        return np.full_like(values, e.value)
    if isinstance(e, Const):
        return np.full_like(values, math.pi)
    if isinstance(e, Var):
        return values.copy()
    if isinstance(e, Neg):
        return -evaluate_array(e.operand, values)
    if isinstance(e, Call):
        with np.errstate(over="ignore"):
            return FUNCTIONS[e.func][1](evaluate_array(e.arg, values))
    a = evaluate_array(e.left, values)
    b = evaluate_array(e.right, values)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if np.any(b == 0.0):
        raise DomainError(f"division by zero evaluating {to_source(e)}")
    return a / b


def to_source(e: Expr) -> str:
    """Fully parenthesized source text; re-parsing gives an identical tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Const):
        return "pi"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    return f"({to_source(e.left)} {e.op} {to_source(e.right)})"


@dataclass(frozen=True)
class PeriodicityReport:
    passed: bool
    max_deviation: float
    samples: int
    tol: float


def validate_periodic(e: Expr, samples: int = 64, tol: float = 1e-9) -> PeriodicityReport:
    """Check ``|e(y) - e(y+1)| <= tol`` at ``samples`` equispaced points of [0, 1)."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    worst = 0.0
    for i in range(samples):
        y = i / samples
        try:
            dev = abs(evaluate(e, y) - evaluate(e, y + 1.0))
        except DomainError:
            dev = math.inf
        if math.isnan(dev):
            dev = math.inf
        worst = max(worst, dev)
    return PeriodicityReport(worst <= tol, worst, samples, tol)
