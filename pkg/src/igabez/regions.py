"""Region selectors.

Grammar::

    selector   := "all"
                | "vertices" "in" or_expr
                | "vertices" "of" "set" IDENT
    or_expr    := and_expr ("|" and_expr)*
    and_expr   := not_expr ("&" not_expr)*
    not_expr   := "~" not_expr | "(" or_expr ")" | comparison
    comparison := ("x" | "y" | "z") ("<" | ">" | "<=" | ">=") ["-"] NUMBER

Cell regions keep the cells whose vertices are *all* selected; facet regions
keep boundary facets whose vertices are all selected.
"""
import re
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

COORDS = {"x": 0, "y": 1, "z": 2}
COMPARATORS = ("<", ">", "<=", ">=")
KINDS = ("cell", "facet", "vertex")


class SelectorSyntaxError(ValueError):
    def __init__(self, message, column):
        super().__init__(f"column {column}: {message}")
        self.column = column


class UnknownSetError(LookupError):
    pass


# --- lexer (shared with the boundary-condition expressions) -------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|[<>&|~()+\-*/^])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "ident", "op" or "end"
    text: str
    column: int  # 1-based


def tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SelectorSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    tokens.append(Token("end", "", len(text) + 1))
    return tokens


class TokenStream:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        if tok.kind != "end":
            self.i += 1
        return tok

    def accept(self, text):
        if self.peek.text == text and self.peek.kind != "number":
            return self.next()
        return None

    def expect(self, text, what=None):
        tok = self.next()
        if tok.text != text or tok.kind == "number":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise SelectorSyntaxError(f"expected {what or repr(text)}, found {found}", tok.column)
        return tok

    def expect_end(self):
        tok = self.peek
        if tok.kind != "end":
            raise SelectorSyntaxError(f"unexpected {tok.text!r} after end of expression",
                                      tok.column)


# --- AST -------------------------------------------------------------------------

@dataclass(frozen=True)
class All:
    pass


@dataclass(frozen=True)
class NamedSet:
    name: str


@dataclass(frozen=True)
class CoordPredicate:
    axis: int
    op: str
    threshold: float


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[CoordPredicate, And, Or, Not]
SelectorAst = Union[All, NamedSet, Expr]


def parse_selector(text: str) -> SelectorAst:
    ts = TokenStream(text)
    tok = ts.next()
    if tok.text == "all" and tok.kind == "ident":
        ts.expect_end()
        return All()
    if tok.text != "vertices" or tok.kind != "ident":
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise SelectorSyntaxError(f"expected 'all' or 'vertices', found {found}", tok.column)
    tok = ts.next()
    if tok.text == "in" and tok.kind == "ident":
        expr = _parse_or(ts)
        ts.expect_end()
        return expr
    if tok.text == "of" and tok.kind == "ident":
        ts.expect("set")
        name = ts.next()
        if name.kind != "ident":
            found = "end of input" if name.kind == "end" else repr(name.text)
            raise SelectorSyntaxError(f"expected a set name, found {found}", name.column)
        ts.expect_end()
        return NamedSet(name.text)
    found = "end of input" if tok.kind == "end" else repr(tok.text)
    raise SelectorSyntaxError(f"expected 'in' or 'of', found {found}", tok.column)


def _parse_or(ts):
    left = _parse_and(ts)
    while ts.accept("|"):
        left = Or(left, _parse_and(ts))
    return left


def _parse_and(ts):
    left = _parse_not(ts)
    while ts.accept("&"):
        left = And(left, _parse_not(ts))
    return left


def _parse_not(ts):
    if ts.accept("~"):
        return Not(_parse_not(ts))
    if ts.accept("("):
        expr = _parse_or(ts)
        ts.expect(")")
        return expr
    return _parse_comparison(ts)


def _parse_comparison(ts):
    tok = ts.next()
    if tok.kind != "ident":
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise SelectorSyntaxError(f"expected a coordinate (x, y, z), found {found}", tok.column)
    if tok.text not in COORDS:
        raise SelectorSyntaxError(f"unknown coordinate {tok.text!r}; use x, y or z", tok.column)
    op = ts.next()
    if op.text not in COMPARATORS or op.kind != "op":
        found = "end of input" if op.kind == "end" else repr(op.text)
        raise SelectorSyntaxError(f"expected a comparison operator, found {found}", op.column)
    sign = -1.0 if ts.accept("-") else 1.0
    num = ts.next()
    if num.kind != "number":
        found = "end of input" if num.kind == "end" else repr(num.text)
        raise SelectorSyntaxError(f"expected a number, found {found}", num.column)
    value = sign * float(num.text)
    if not np.isfinite(value):
        raise SelectorSyntaxError("threshold must be finite", num.column)
    return CoordPredicate(COORDS[tok.text], op.text, value)


def _fmt_expr(node, top=False):
    if isinstance(node, CoordPredicate):
        return f"({'xyz'[node.axis]} {node.op} {node.threshold!r})"
    if isinstance(node, Not):
        return "~" + _fmt_expr(node.operand)
    if isinstance(node, (And, Or)):
        sym = "&" if isinstance(node, And) else "|"
        text = f"{_fmt_expr(node.left)} {sym} {_fmt_expr(node.right)}"
        return text if top else f"({text})"
    raise TypeError(f"not a selector expression node: {node!r}")


def format_selector(ast: SelectorAst) -> str:
    if isinstance(ast, All):
        return "all"
    if isinstance(ast, NamedSet):
        return f"vertices of set {ast.name}"
    return "vertices in " + _fmt_expr(ast, top=True)


# --- evaluation -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Region:
    """Selected mesh entities.

    ``ids`` is a sorted id array for cell and vertex regions and an
    (n, 2) array of ``(cell, local facet)`` pairs for facet regions.
    """

    name: str
    kind: str
    ids: np.ndarray
    selector: str = ""

    def __len__(self):
        return len(self.ids)

    @property
    def cells(self):
        if self.kind == "facet":
            return np.unique(self.ids[:, 0])
        if self.kind == "cell":
            return self.ids
        raise ValueError("vertex regions have no cells")


_CMP = {
    "<": np.less,
    ">": np.greater,
    "<=": np.less_equal,
    ">=": np.greater_equal,
}


def vertex_mask(ast, mesh):
    if isinstance(ast, All):
        return np.ones(mesh.n_vertices, dtype=bool)
    if isinstance(ast, NamedSet):
        if ast.name not in mesh.vertex_sets:
            raise UnknownSetError(f"unknown vertex set {ast.name!r}; available: "
                                  f"{', '.join(sorted(mesh.vertex_sets))}")
        mask = np.zeros(mesh.n_vertices, dtype=bool)
        mask[mesh.vertex_sets[ast.name]] = True
        return mask
    if isinstance(ast, CoordPredicate):
        if ast.axis >= mesh.vertices.shape[1]:
            raise ValueError(f"coordinate {'xyz'[ast.axis]!r} not available on a "
                             f"{mesh.vertices.shape[1]}D mesh")
        return _CMP[ast.op](mesh.vertices[:, ast.axis], ast.threshold)
    if isinstance(ast, And):
        return vertex_mask(ast.left, mesh) & vertex_mask(ast.right, mesh)
    if isinstance(ast, Or):
        return vertex_mask(ast.left, mesh) | vertex_mask(ast.right, mesh)
    if isinstance(ast, Not):
        return ~vertex_mask(ast.operand, mesh)
    raise TypeError(f"not a selector node: {ast!r}")


def eval_selector(ast, mesh, kind="cell", name=""):
    if kind not in KINDS:
        raise ValueError(f"region kind must be one of {KINDS}, got {kind!r}")
    mask = vertex_mask(ast, mesh)
    if kind == "vertex":
        ids = np.nonzero(mask)[0]
    elif kind == "cell":
        ids = np.nonzero(mask[mesh.cells].all(axis=1))[0]
    else:
        inside = mask[mesh.cell_facets()].all(axis=2) & mesh.boundary_facets()
        ids = np.argwhere(inside)
    if len(ids) == 0:
        warnings.warn(f"region {name or format_selector(ast)!r} ({kind}) is empty", stacklevel=2)
    return Region(name, kind, ids, format_selector(ast))


def define_region(mesh, name, definition):
    """``definition`` is a selector string or ``(selector, kind)``."""
    if isinstance(definition, str):
        text, kind = definition, "cell"
    else:
        text, kind = definition
    region = eval_selector(parse_selector(text), mesh, kind, name)
    return Region(name, kind, region.ids, text)
