"""Position-dependent boundary data such as ``-0.02 + 0.15*(x - 1)^2``.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ["^" unary]
    atom   := NUMBER | "x" | "y" | "z" | "(" expr ")"
"""
from dataclasses import dataclass

import numpy as np

from ..regions import COORDS, SelectorSyntaxError, TokenStream


class ExpressionSyntaxError(SelectorSyntaxError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    axis: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


def _found(tok):
    return "end of input" if tok.kind == "end" else repr(tok.text)


def _expr(ts):
    node = _term(ts)
    while ts.peek.kind == "op" and ts.peek.text in "+-":
        op = ts.next().text
        node = BinOp(op, node, _term(ts))
    return node


def _term(ts):
    node = _unary(ts)
    while ts.peek.kind == "op" and ts.peek.text in "*/":
        op = ts.next().text
        node = BinOp(op, node, _unary(ts))
    return node


def _unary(ts):
    if ts.peek.kind == "op" and ts.peek.text == "-":
        ts.next()
        return Neg(_unary(ts))
    if ts.peek.kind == "op" and ts.peek.text == "+":
        ts.next()
        return _unary(ts)
    base = _atom(ts)
    if ts.peek.kind == "op" and ts.peek.text == "^":
        ts.next()
        return BinOp("^", base, _unary(ts))
    return base


def _atom(ts):
    tok = ts.next()
    if tok.kind == "number":
        return Num(float(tok.text))
    if tok.kind == "ident":
        if tok.text not in COORDS:
            raise ExpressionSyntaxError(f"unknown variable {tok.text!r}; use x, y or z",
                                        tok.column)
        return Var(COORDS[tok.text])
    if tok.kind == "op" and tok.text == "(":
        node = _expr(ts)
        close = ts.next()
        if close.text != ")":
            raise ExpressionSyntaxError(f"expected ')', found {_found(close)}", close.column)
        return node
    raise ExpressionSyntaxError(f"expected a number, variable or '(', found {_found(tok)}",
                                tok.column)


def parse_expression(text: str):
    try:
        ts = TokenStream(text)
    except SelectorSyntaxError as exc:
        raise ExpressionSyntaxError(str(exc).split(": ", 1)[1], exc.column) from None
    node = _expr(ts)
    if ts.peek.kind != "end":
        raise ExpressionSyntaxError(f"unexpected {ts.peek.text!r}", ts.peek.column)
    return node


_OPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def evaluate(node, points):
    """Evaluate at points of shape (m, space_dim); returns (m,)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if isinstance(node, Num):
        return np.full(len(points), node.value)
    if isinstance(node, Var):
        if node.axis >= points.shape[1]:
            raise ValueError(f"variable {'xyz'[node.axis]!r} used with {points.shape[1]}D points")
        return points[:, node.axis].copy()
    if isinstance(node, Neg):
        return -evaluate(node.operand, points)
    if isinstance(node, BinOp):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = _OPS[node.op](evaluate(node.left, points), evaluate(node.right, points))
        if not np.all(np.isfinite(out)):
            raise ValueError(f"expression produced a non-finite value ({node.op})")
        return out
    raise TypeError(f"not an expression node: {node!r}")


def variables(node):
    if isinstance(node, Var):
        return {node.axis}
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return set()


@dataclass(frozen=True)
class Expression:
    """Compiled expression usable as boundary data ``g(points)``."""

    text: str
    ast: object

    def __call__(self, points):
        return evaluate(self.ast, points)


def compile_expression(text: str) -> Expression:
    return Expression(text, parse_expression(text))
