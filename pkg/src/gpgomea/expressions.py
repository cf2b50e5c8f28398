"""Plain expression ASTs: parsing, printing, evaluation, and node counts.

This is the grammar used for printed solutions and for user-supplied
ground-truth equations. Features are written ``x1``, ``x2``, ... (1-based),
functions are ``sin``, ``cos``, ``log``, ``sqrt`` plus infix ``+ - * /``
(the glyphs ``×`` and ``÷`` are accepted as aliases). Constants print via
``repr`` so the printed form parses back to the exact same float.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .symbols import (
    ADD,
    DIV,
    FUNCTIONS_BY_ID,
    MUL,
    SUB,
    Constant,
    Feature,
    FunctionSpec,
    NodeSymbol,
)


@dataclass(frozen=True)
class ExprNode:
    """One node of a plain (non-template) expression tree."""

    symbol: NodeSymbol
    args: tuple["ExprNode", ...] = ()


def count_nodes(expr: ExprNode) -> int:
    return 1 + sum(count_nodes(a) for a in expr.args)


def evaluate(expr: ExprNode, X: np.ndarray) -> np.ndarray:
    """Evaluate over the rows of X with protected operator semantics."""
    with np.errstate(all="ignore"):
        out = _eval(expr, X)
    if np.ndim(out) == 0:
        out = np.full(X.shape[0], float(out))
    return np.asarray(out, dtype=np.float64)


def _eval(expr: ExprNode, X: np.ndarray):
    s = expr.symbol
    if isinstance(s, Constant):
        return s.c
    if isinstance(s, Feature):
        return X[:, s.index]
    return s.kernel(*(_eval(a, X) for a in expr.args))


def format_expression(expr: ExprNode) -> str:
    """Deterministic infix rendering; inverse of :func:`parse_expression`."""
    s = expr.symbol
    if isinstance(s, Constant):
        return repr(s.c)
    if isinstance(s, Feature):
        return f"x{s.index + 1}"
    if s.arity == 2 and s.id in "+-*/":
        left, right = (format_expression(a) for a in expr.args)
        return f"({left} {s.id} {right})"
    inner = ", ".join(format_expression(a) for a in expr.args)
    return f"{s.id}({inner})"


class ParseError(ValueError):
    """The expression string does not conform to the grammar."""


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<feat>x\d+)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[()+\-*/×÷,]))"
)

_INFIX_ALIAS = {"×": "*", "÷": "/"}


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r} at position {pos}")
        tok = m.group("num") or m.group("feat") or m.group("name") or m.group("op")
        tokens.append(_INFIX_ALIAS.get(tok, tok))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    def expression(self) -> ExprNode:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = ADD if self.take() == "+" else SUB
            node = ExprNode(op, (node, self.term()))
        return node

    def term(self) -> ExprNode:
        node = self.factor()
        while self.peek() in ("*", "/"):
            op = MUL if self.take() == "*" else DIV
            node = ExprNode(op, (node, self.factor()))
        return node

    def factor(self) -> ExprNode:
        if self.peek() == "-":
            self.take()
            inner = self.factor()
            if isinstance(inner.symbol, Constant) and not inner.args:
                return ExprNode(Constant(-inner.symbol.c, inner.symbol.sigma))
            # General negation: fold into 0 - expr.
            return ExprNode(SUB, (ExprNode(Constant(0.0)), inner))
        return self.atom()

    def atom(self) -> ExprNode:
        tok = self.take()
        if tok == "(":
            node = self.expression()
            self.expect(")")
            return node
        if re.fullmatch(r"x\d+", tok):
            index = int(tok[1:]) - 1
            if index < 0:
                raise ParseError(f"feature indices start at x1, got {tok!r}")
            return ExprNode(Feature(index))
        if re.fullmatch(r"[A-Za-z_]\w*", tok):
            spec = FUNCTIONS_BY_ID.get(tok)
            if spec is None or spec.arity < 1:
                raise ParseError(f"unknown function {tok!r}")
            self.expect("(")
            args = [self.expression()]
            while self.peek() == ",":
                self.take()
                args.append(self.expression())
            self.expect(")")
            if len(args) != spec.arity:
                raise ParseError(
                    f"{tok} takes {spec.arity} argument(s), got {len(args)}"
                )
            return ExprNode(spec, tuple(args))
        try:
            return ExprNode(Constant(float(tok)))
        except ValueError:
            raise ParseError(f"unexpected token {tok!r}") from None


def parse_expression(text: str) -> ExprNode:
    """Parse an infix expression string into an :class:`ExprNode` tree."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    parser = _Parser(tokens)
    node = parser.expression()
    if parser.peek() is not None:
        raise ParseError(f"trailing input starting at {parser.peek()!r}")
    return node


def n_features_referenced(expr: ExprNode) -> int:
    """1 + the highest feature index used, or 0 for constant expressions."""
    best = 0
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node.symbol, Feature):
            best = max(best, node.symbol.index + 1)
        stack.extend(node.args)
    return best
