"""Tiny expression language for config files.

Grammar: identifiers ``x1..xn`` (positions) and ``v1..vn`` (velocities),
numeric literals, the constant ``pi``, operators ``+ - * / ^`` with integer
exponents, the functions ``sin cos exp log sqrt``, and parentheses.  A parsed
expression evaluates either on jets (for exact derivatives) or on numpy
arrays (for vectorized path batches).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import jets
from .jets import Jet2, SmoothMap

__all__ = [
    "ExpressionError",
    "Expression",
    "parse_expression",
    "parse_expression_list",
    "vector_map",
    "batch_evaluator",
]


class ExpressionError(ValueError):
    """Malformed expression text."""


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_FUNCTIONS = {
    "sin": (jets.sin, np.sin),
    "cos": (jets.cos, np.cos),
    "exp": (jets.exp, np.exp),
    "log": (jets.log, np.log),
    "sqrt": (jets.sqrt, np.sqrt),
}

_CONSTANTS = {"pi": math.pi}


def _tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ExpressionError(f"bad character {text[pos]!r} at position {pos} in {text!r}")
        pos = m.end()
        for kind in ("num", "ident", "op"):
            val = m.group(kind)
            if val is not None:
                out.append((kind, val))
                break
    out.append(("end", ""))
    return out


# AST nodes are plain tuples:
#   ("num", value) ("var", slot) ("neg", node) ("bin", op, left, right)
#   ("pow", node, k) ("call", name, node)


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]], variables: dict[str, int], text: str):
        self.tokens = tokens
        self.i = 0
        self.variables = variables
        self.text = text

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, val = self.next()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r} in {self.text!r}, found {val!r}")

    def fail(self, msg: str):
        raise ExpressionError(f"{msg} in {self.text!r}")

    def parse(self):
        node = self.expr()
        kind, val = self.peek()
        if kind != "end":
            self.fail(f"unexpected {val!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.next()
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            _, op = self.next()
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.next()
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek() == ("op", "^"):
            self.next()
            return ("pow", node, self.exponent())
        return node

    def exponent(self) -> int:
        sign = 1
        if self.peek() == ("op", "-"):
            self.next()
            sign = -1
        kind, val = self.next()
        if kind != "num":
            self.fail(f"exponent must be an integer literal, found {val!r}")
        num = float(val)
        if num != int(num):
            self.fail(f"exponent must be an integer, found {val!r}")
        return sign * int(num)

    def atom(self):
        kind, val = self.next()
        if kind == "num":
            return ("num", float(val))
        if kind == "ident":
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return ("call", val, arg)
            if val in _CONSTANTS:
                return ("num", _CONSTANTS[val])
            if val in self.variables:
                return ("var", self.variables[val])
            self.fail(f"unknown identifier {val!r}")
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail(f"unexpected {val!r}")


def _eval(node, inputs, fn_slot: int):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return inputs[node[1]]
    if tag == "neg":
        return -_eval(node[1], inputs, fn_slot)
    if tag == "bin":
        left = _eval(node[2], inputs, fn_slot)
        right = _eval(node[3], inputs, fn_slot)
        op = node[1]
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        return left / right
    if tag == "pow":
        base = _eval(node[1], inputs, fn_slot)
        k = node[2]
        if isinstance(base, Jet2):
            return jets.powi(base, k)
        if fn_slot == 1 and isinstance(base, np.ndarray):
            return base.astype(float) ** k
        return float(base) ** k
    if tag == "call":
        arg = _eval(node[2], inputs, fn_slot)
        jet_fn, np_fn = _FUNCTIONS[node[1]]
        if fn_slot == 1 and isinstance(arg, np.ndarray):
            return np_fn(arg)
        return jet_fn(arg)
    raise AssertionError(f"bad node {node!r}")


@dataclass(frozen=True)
class Expression:
    """A parsed expression over ``n_positions`` + ``n_velocities`` inputs."""

    text: str
    n_positions: int
    n_velocities: int
    ast: tuple

    @property
    def n_inputs(self) -> int:
        return self.n_positions + self.n_velocities

    def eval_jets(self, inputs: Sequence[Jet2]):
        return _eval(self.ast, inputs, 0)

    def eval_columns(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        out = _eval(self.ast, list(columns), 1)
        if not isinstance(out, np.ndarray):
            out = np.full_like(np.asarray(columns[0], dtype=float), float(out))
        return out


def _variable_table(n_positions: int, n_velocities: int) -> dict[str, int]:
    table = {f"x{i + 1}": i for i in range(n_positions)}
    table.update({f"v{i + 1}": n_positions + i for i in range(n_velocities)})
    return table


def parse_expression(text: str, n_positions: int, n_velocities: int = 0) -> Expression:
    tokens = _tokenize(text)
    if tokens[0][0] == "end":
        raise ExpressionError("empty expression")
    parser = _Parser(tokens, _variable_table(n_positions, n_velocities), text)
    return Expression(text.strip(), n_positions, n_velocities, parser.parse())


def parse_expression_list(
    text: str, n_positions: int, n_velocities: int = 0
) -> list[Expression]:
    """Parse a comma-separated list of expressions (commas bind last)."""
    tokens = _tokenize(text)
    if tokens[0][0] == "end":
        raise ExpressionError("empty expression list")
    table = _variable_table(n_positions, n_velocities)
    parser = _Parser(tokens, table, text)
    parts = [parser.expr()]
    while parser.peek() == ("op", ","):
        parser.next()
        parts.append(parser.expr())
    kind, val = parser.peek()
    if kind != "end":
        parser.fail(f"unexpected {val!r}")
    return [Expression(text.strip(), n_positions, n_velocities, ast) for ast in parts]


def vector_map(exprs: Sequence[Expression], name: str = "") -> SmoothMap:
    """Bundle expressions into a smooth map on their shared input context."""
    if not exprs:
        raise ExpressionError("need at least one expression")
    n_in = exprs[0].n_inputs
    for e in exprs:
        if e.n_inputs != n_in:
            raise ExpressionError("expressions disagree on input context")
    asts = [e.ast for e in exprs]

    def fn(js):
        return [_eval(a, list(js), 0) for a in asts]

    return SmoothMap(n_in, len(exprs), fn, name=name)


def batch_evaluator(exprs: Sequence[Expression]):
    """Vectorized evaluator: (m, n) coordinate rows -> (m, len(exprs)) values."""
    asts = [e.ast for e in exprs]

    def fn(X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        cols = [X[:, i] for i in range(X.shape[1])]
        outs = []
        for a in asts:
            val = _eval(a, cols, 1)
            if not isinstance(val, np.ndarray):
                val = np.full(X.shape[0], float(val))
            outs.append(val)
        return np.stack(outs, axis=1)

    return fn
