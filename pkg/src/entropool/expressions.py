"""Tiny expression language for deriving view columns from a scenario panel.

Supported grammar: linear combinations of factor columns and numeric
constants, optional scaling by a literal coefficient, parentheses, and
``abs(...)`` of a sub-expression.  Examples::

    X10y - X2y          # curve slope
    abs(XM)             # realized-volatility proxy
    0.5*a + 2           # scaled factor plus constant

Multiplication is only allowed between a numeric literal and a
sub-expression (the language is deliberately linear apart from abs).
"""

import re
from typing import List, Optional, Sequence

import numpy as np

from .scenarios import ScenarioPanel, ViewPanel


class ExpressionError(ValueError):
    """Malformed expression or reference to an unknown factor."""


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[+\-*()]))")


def _tokenize(text: str) -> List[tuple]:
    # normalize unicode minus signs so pasted formulas parse
    text = text.replace("−", "-")
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            remainder = text[pos:].strip()
            if not remainder:
                break
            raise ExpressionError(f"unexpected character at {remainder[:10]!r}")
        if match.group("number") is not None:
            tokens.append(("number", float(match.group("number"))))
        elif match.group("name") is not None:
            tokens.append(("name", match.group("name")))
        else:
            tokens.append(("op", match.group("op")))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: List[tuple], panel: ScenarioPanel):
        self.tokens = tokens
        self.pos = 0
        self.panel = panel

    def peek(self) -> Optional[tuple]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple:
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of expression")
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.take()
        if tok != ("op", op):
            raise ExpressionError(f"expected {op!r}, got {tok[1]!r}")

    def parse(self) -> np.ndarray:
        value = self.expr()
        if self.peek() is not None:
            raise ExpressionError(f"trailing input at {self.peek()[1]!r}")
        return value

    def expr(self) -> np.ndarray:
        sign = 1.0
        tok = self.peek()
        while tok is not None and tok[0] == "op" and tok[1] in "+-":
            self.take()
            if tok[1] == "-":
                sign = -sign
            tok = self.peek()
        value = sign * self.term()
        while True:
            tok = self.peek()
            if tok is None or tok[0] != "op" or tok[1] not in "+-":
                return value
            self.take()
            sign = 1.0 if tok[1] == "+" else -1.0
            value = value + sign * self.term()

    def term(self) -> np.ndarray:
        tok = self.peek()
        if tok is not None and tok[0] == "number":
            self.take()
            nxt = self.peek()
            if nxt == ("op", "*"):
                self.take()
                return tok[1] * self.atom()
            return np.full(self.panel.n_scenarios, tok[1])
        return self.atom()

    def atom(self) -> np.ndarray:
        tok = self.take()
        if tok[0] == "name":
            if tok[1] == "abs":
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return np.abs(inner)
            try:
                return self.panel.column(tok[1]).astype(float)
            except KeyError:
                raise ExpressionError(f"unknown factor {tok[1]!r}") from None
        if tok == ("op", "("):
            inner = self.expr()
            self.expect_op(")")
            return inner
        if tok[0] == "number":
            return np.full(self.panel.n_scenarios, tok[1])
        raise ExpressionError(f"unexpected token {tok[1]!r}")


def evaluate_expression(expression: str, panel: ScenarioPanel) -> np.ndarray:
    """Evaluate one column expression against every scenario row."""
    tokens = _tokenize(expression)
    if not tokens:
        raise ExpressionError("empty expression")
    return _Parser(tokens, panel).parse()


def evaluate_view_columns(panel: ScenarioPanel,
                          expressions: Sequence[str],
                          labels: Optional[Sequence[str]] = None) -> ViewPanel:
    """Build the J x K view panel from column expressions.

    Labels default to the expression strings themselves.
    """
    if labels is None:
        labels = list(expressions)
    columns = np.column_stack([evaluate_expression(e, panel) for e in expressions])
    return ViewPanel(list(labels), columns)
