"""A small expression language for coefficient fields a(x), p(x), q(x).

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | "pi" | "x1" .. "x3" | FUNC "(" expr ("," expr)* ")" | "(" expr ")"

Functions: abs, sign, sqrt, exp, log, sin, cos, norm(e1, ..., ek) (Euclidean
length of its arguments) and sdiv(a, b) (a / b with 0/0 taken as 0; it shows
up in derivatives of ``norm``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "ExprDomainError",
    "FieldExpression",
    "parse",
    "eval_on_grid",
    "grad_on_grid",
]


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, source: str, position: int, expected=()):
        self.source = source
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(f"{detail}\n  {source}\n  {' ' * position}^")


class ExprDomainError(ExprError):
    pass


FUNCTIONS = {"abs": 1, "sign": 1, "sqrt": 1, "exp": 1, "log": 1, "sin": 1, "cos": 1, "norm": None, "sdiv": 2}
MAX_DIM = 3


# -- syntax tree --------------------------------------------------------------

class Node:
    precedence = 100

    def is_const(self, value=None) -> bool:
        return False


@dataclass(frozen=True)
class Const(Node):
    value: float

    def is_const(self, value=None) -> bool:
        return value is None or self.value == value

    def __str__(self):
        v = self.value
        if v == math.pi:
            return "pi"
        if float(v).is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(float(v))

    @property
    def precedence(self):
        return 100 if self.value >= 0 else 2


@dataclass(frozen=True)
class Var(Node):
    index: int

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Neg(Node):
    arg: Node
    precedence = 2

    def __str__(self):
        return "-" + _wrap(self.arg, 3)


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    @property
    def precedence(self):
        return {"+": 0, "-": 0, "*": 1, "/": 1, "^": 3}[self.op]

    def __str__(self):
        prec = self.precedence
        if self.op == "^":
            return f"{_wrap(self.left, prec + 1)}^{_wrap(self.right, prec)}"
        sep = "" if self.op in "*/^" else " "
        # left-associative: the right operand needs strictly higher binding
        return f"{_wrap(self.left, prec)}{sep}{self.op}{sep}{_wrap(self.right, prec + 1)}"


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple

    def __str__(self):
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


def _wrap(node: Node, min_prec: int) -> str:
    return f"({node})" if node.precedence < min_prec else str(node)


# -- simplifying constructors --------------------------------------------------

ZERO, ONE = Const(0.0), Const(1.0)


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if a.is_const(0.0):
        return b
    if b.is_const(0.0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return BinOp("+", a, b)


def sub(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if b.is_const(0.0):
        return a
    if a.is_const(0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if a.is_const(0.0) or b.is_const(0.0):
        return ZERO
    if a.is_const(1.0):
        return b
    if b.is_const(1.0):
        return a
    if isinstance(b, Const) and not isinstance(a, Const):
        a, b = b, a
    if a.is_const(-1.0):
        return neg(b)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    return BinOp("*", a, b)


def div(a, b):
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if a.is_const(0.0) and not b.is_const(0.0):
        return ZERO
    if b.is_const(1.0):
        return a
    return BinOp("/", a, b)


def power(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        with np.errstate(all="ignore"):
            value = float(np.power(a.value, b.value))
        if math.isfinite(value):
            return Const(value)
    if b.is_const(1.0):
        return a
    if b.is_const(0.0):
        return ONE
    return BinOp("^", a, b)


def call(name, *args):
    if name == "sdiv":
        if args[0].is_const(0.0):
            return ZERO
        if args[1].is_const(1.0):
            return args[0]
    return Call(name, tuple(args))


# -- parser --------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    tokens, pos = [], 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            start = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {source[start]!r}", source, start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, dim: int | None):
        self.source = source
        self.dim = dim
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, expected=()):
        kind, text, pos = self.tok
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"{message}: found {what}", self.source, pos, expected)

    def accept(self, op):
        if self.tok[0] == "op" and self.tok[1] == op:
            self.i += 1
            return True
        return False

    def expect(self, op):
        if not self.accept(op):
            self.error("syntax error", (repr(op),))

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.error("unexpected token", ("operator", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while True:
            if self.accept("+"):
                node = BinOp("+", node, self.term())
            elif self.accept("-"):
                node = BinOp("-", node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            if self.accept("*"):
                node = BinOp("*", node, self.unary())
            elif self.accept("/"):
                node = BinOp("/", node, self.unary())
            else:
                return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.tok
        operand = ("number", "identifier", "'('", "'-'")
        if kind == "num":
            self.i += 1
            return Const(float(text))
        if kind == "op" and text == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            self.i += 1
            if text == "pi":
                return Const(math.pi)
            m = re.fullmatch(r"x([1-9]\d*)", text)
            if m:
                k = int(m.group(1))
                limit = self.dim if self.dim is not None else MAX_DIM
                if k > limit:
                    raise ExprSyntaxError(f"unknown identifier {text!r} (coordinates are x1..x{limit})", self.source, pos)
                return Var(k - 1)
            if text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[text]
                if arity is not None and len(args) != arity:
                    raise ExprSyntaxError(f"{text} takes {arity} argument(s), got {len(args)}", self.source, pos)
                return Call(text, tuple(args))
            raise ExprSyntaxError(f"unknown identifier {text!r}", self.source, pos)
        self.error("syntax error", operand)


# -- evaluation and differentiation ---------------------------------------------

def _sdiv(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.divide(a, b, out=np.zeros(a.shape), where=(b != 0.0))
    out = np.where((b == 0.0) & (a != 0.0), np.copysign(np.inf, a), out)
    return out


def _evaluate(node: Node, coords):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return coords[node.index]
    if isinstance(node, Neg):
        return -_evaluate(node.arg, coords)
    if isinstance(node, BinOp):
        a, b = _evaluate(node.left, coords), _evaluate(node.right, coords)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return np.divide(a, b)
        return np.power(a, b)
    args = [_evaluate(a, coords) for a in node.args]
    name = node.name
    if name == "norm":
        return np.sqrt(sum(np.square(a) for a in args))
    if name == "sdiv":
        return _sdiv(*args)
    return getattr(np, name)(args[0])


def _derivative(node: Node, j: int) -> Node:
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == j else ZERO
    if isinstance(node, Neg):
        return neg(_derivative(node.arg, j))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = _derivative(a, j), _derivative(b, j)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        if node.op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
        if _is_constant(b):
            return mul(mul(b, power(a, sub(b, ONE))), da)
        # general power: a^b (b' log a + b a'/a)
        return mul(node, add(mul(db, call("log", a)), div(mul(b, da), a)))
    name, args = node.name, node.args
    if name == "norm":
        terms = ZERO
        for e in args:
            terms = add(terms, mul(call("sdiv", e, node), _derivative(e, j)))
        return terms
    if name == "sdiv":
        a, b = args
        da, db = _derivative(a, j), _derivative(b, j)
        return call("sdiv", sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    (a,) = args
    da = _derivative(a, j)
    if da.is_const(0.0):
        return ZERO
    outer = {
        "abs": lambda: call("sign", a),
        "sign": lambda: ZERO,
        "sqrt": lambda: div(ONE, mul(Const(2.0), node)),
        "exp": lambda: node,
        "log": lambda: div(ONE, a),
        "sin": lambda: call("cos", a),
        "cos": lambda: neg(call("sin", a)),
    }[name]()
    return mul(outer, da)


def _is_constant(node: Node) -> bool:
    if isinstance(node, Const):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return _is_constant(node.arg)
    if isinstance(node, BinOp):
        return _is_constant(node.left) and _is_constant(node.right)
    return all(_is_constant(a) for a in node.args)


def _simplify(node: Node) -> Node:
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        return neg(_simplify(node.arg))
    if isinstance(node, BinOp):
        a, b = _simplify(node.left), _simplify(node.right)
        return {"+": add, "-": sub, "*": mul, "/": div, "^": power}[node.op](a, b)
    return call(node.name, *(_simplify(a) for a in node.args))


def _max_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index + 1
    if isinstance(node, Const):
        return 0
    if isinstance(node, Neg):
        return _max_var(node.arg)
    if isinstance(node, BinOp):
        return max(_max_var(node.left), _max_var(node.right))
    return max(_max_var(a) for a in node.args)


class FieldExpression:
    """A parsed coefficient field; immutable."""

    def __init__(self, source: str, ast: Node, dim: int | None = None):
        self.source = source
        self.ast = ast
        self.arity = _max_var(ast)
        self.dim = dim if dim is not None else max(self.arity, 1)

    def __repr__(self):
        return f"FieldExpression({self.source!r})"

    def __str__(self):
        return str(self.ast)

    @property
    def is_constant(self) -> bool:
        return self.arity == 0

    def __call__(self, *coords):
        if len(coords) < self.arity:
            raise ExprError(f"{self.source!r} uses x{self.arity} but only {len(coords)} coordinate(s) given")
        with np.errstate(all="ignore"):
            value = _evaluate(self.ast, [np.asarray(c, dtype=float) for c in coords])
        shape = np.broadcast_shapes(*(np.shape(c) for c in coords)) if coords else ()
        return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()

    def derivative(self, j: int) -> "FieldExpression":
        d = _simplify(_derivative(self.ast, j))
        return FieldExpression(str(d), d, self.dim)

    def gradient(self, dim: int | None = None) -> list["FieldExpression"]:
        return [self.derivative(j) for j in range(dim or self.dim)]


def parse(source: str, dim: int | None = None) -> FieldExpression:
    """Parse ``source``; with ``dim`` given, coordinates beyond x{dim} are rejected."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", str(source or ""), 0, ("number", "identifier", "'('"))
    ast = _Parser(source, dim).parse()
    return FieldExpression(source, ast, dim)


def _as_expr(expr, dim) -> FieldExpression:
    if isinstance(expr, FieldExpression):
        return expr
    if isinstance(expr, (int, float)):
        return FieldExpression(repr(float(expr)), Const(float(expr)), dim)
    return parse(expr, dim)


def _check_finite(values: np.ndarray, grid, label: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        point = [float(c[idx]) for c in grid.coords]
        raise ExprDomainError(f"{label} is not finite at node {idx} (x = {point}); "
                              f"{int(bad.sum())} bad node(s) in total")
    return values


def eval_on_grid(expr, grid) -> np.ndarray:
    e = _as_expr(expr, grid.dim)
    if e.arity > grid.dim:
        raise ExprError(f"{e.source!r} uses x{e.arity} on a {grid.dim}-d grid")
    return _check_finite(e(*grid.coords), grid, repr(e.source))


def grad_on_grid(expr, grid) -> np.ndarray:
    """Exact gradient by symbolic differentiation, shape ``(dim, *grid.shape)``."""
    e = _as_expr(expr, grid.dim)
    if e.arity > grid.dim:
        raise ExprError(f"{e.source!r} uses x{e.arity} on a {grid.dim}-d grid")
    comps = []
    for j, d in enumerate(e.gradient(grid.dim)):
        comps.append(_check_finite(d(*grid.coords), grid, f"d/dx{j + 1} of {e.source!r}"))
    return np.stack(comps)
