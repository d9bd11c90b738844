"""Tiny expression language for coordinate fields on a chart.

Grammar, informally::

    expr   := term  (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] INTEGER)?
    atom   := NUMBER | 'x'<digits> | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of ``exp``, ``log``, ``sin``, ``cos``, ``sqrt``.  ``^``
binds tighter than unary minus, which binds tighter than ``*`` and ``/``,
which bind tighter than ``+`` and ``-``.  Exponents are constant integer
literals, so every expression is smooth on its domain and differentiation
is total.

Evaluation is exact forward-mode up to second order: :func:`eval_jet`
returns value, gradient and Hessian at a point via truncated Taylor
arithmetic.  No finite differences are involved anywhere in this module;
those live in the test oracles only.

Variables are ``x1 .. xn`` (1-based).  Parsed trees are immutable and
compare structurally, ignoring source offsets, so pretty-print/re-parse
round-trips yield equal trees.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BinOp",
    "Call",
    "Const",
    "Expr",
    "ExprDomainError",
    "ExprSyntaxError",
    "Jet",
    "Neg",
    "Pow",
    "Var",
    "eval_jet",
    "eval_value",
    "parse",
    "to_text",
]

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


class ExprSyntaxError(ValueError):
    """Raised on malformed source text; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ExprDomainError(ArithmeticError):
    """Raised when evaluation leaves a function's domain.

    The offending subexpression is reported in the message.
    """

    def __init__(self, message: str, node: "Expr"):
        super().__init__(f"{message} in subexpression '{to_text(node)}'")
        self.node = node


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: float
    offset: int | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based, so Var(1) is x1
    offset: int | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    offset: int | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr
    offset: int | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr
    offset: int | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    offset: int | None = field(default=None, compare=False, repr=False)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if not text[pos:].strip():
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            stray = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[stray]!r}", stray)
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> int:
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", offset)
        self.advance()
        return offset

    def parse(self) -> Expr:
        node = self.sum_()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {text!r}", offset)
        return node

    def sum_(self) -> Expr:
        node = self.term()
        while True:
            kind, text, offset = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term(), offset=offset)
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, offset = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary(), offset=offset)
            else:
                return node

    def unary(self) -> Expr:
        kind, text, offset = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary(), offset=offset)
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        kind, text, offset = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            node = Pow(node, self.exponent(), offset=offset)
        return node

    def exponent(self) -> int:
        sign = 1
        kind, text, offset = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            sign = -1
            kind, text, offset = self.peek()
        if kind != "num" or any(c in text for c in ".eE"):
            raise ExprSyntaxError("exponent must be an integer literal", offset)
        self.advance()
        return sign * int(text)

    def atom(self) -> Expr:
        kind, text, offset = self.advance()
        if kind == "num":
            return Const(float(text), offset=offset)
        if kind == "name":
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.sum_()
                self.expect_op(")")
                return Call(text, arg, offset=offset)
            m = re.fullmatch(r"x(\d+)", text)
            if m is None:
                raise ExprSyntaxError(f"unknown identifier {text!r}", offset)
            index = int(m.group(1))
            if not 1 <= index <= self.dim:
                raise ExprSyntaxError(
                    f"variable {text} out of range for dimension {self.dim}", offset
                )
            return Var(index, offset=offset)
        if kind == "op" and text == "(":
            node = self.sum_()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(f"expected a value, got {text!r}" if text else "unexpected end of input", offset)


def parse(text: str, dim: int) -> Expr:
    """Parse ``text`` into an expression over variables x1..x<dim>."""
    return _Parser(text, dim).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _render(node: Expr, parent_prec: int) -> str:
    if isinstance(node, Const):
        out, prec = repr(node.value), 6
    elif isinstance(node, Var):
        out, prec = f"x{node.index}", 6
    elif isinstance(node, Call):
        out, prec = f"{node.fn}({_render(node.arg, 0)})", 6
    elif isinstance(node, Pow):
        out, prec = f"{_render(node.base, 5)}^{node.exponent}", 4
    elif isinstance(node, Neg):
        out, prec = f"-{_render(node.arg, 3)}", 3
    elif isinstance(node, BinOp):
        prec = _PREC[node.op]
        out = f"{_render(node.left, prec)} {node.op} {_render(node.right, prec + 1)}"
    else:
        raise TypeError(f"not an expression node: {node!r}")
    return f"({out})" if prec < parent_prec else out


def to_text(node: Expr) -> str:
    """Pretty-print with minimal parentheses; re-parsing gives an equal tree."""
    return _render(node, 0)


@dataclass
class Jet:
    """Truncated Taylor data of a scalar at a point.

    ``grad`` and ``hess`` are ``None`` beyond the requested order; the
    Hessian, when present, is exactly symmetric (the arithmetic below only
    ever forms symmetric combinations).
    """

    value: float
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None

    @property
    def order(self) -> int:
        return 0 if self.grad is None else (1 if self.hess is None else 2)

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(
            self.value + other.value,
            None if self.grad is None else self.grad + other.grad,
            None if self.hess is None else self.hess + other.hess,
        )

    def __sub__(self, other: "Jet") -> "Jet":
        return Jet(
            self.value - other.value,
            None if self.grad is None else self.grad - other.grad,
            None if self.hess is None else self.hess - other.hess,
        )

    def __neg__(self) -> "Jet":
        return Jet(
            -self.value,
            None if self.grad is None else -self.grad,
            None if self.hess is None else -self.hess,
        )

    def __mul__(self, other: "Jet") -> "Jet":
        v = self.value * other.value
        g = h = None
        if self.grad is not None:
            g = self.grad * other.value + self.value * other.grad
            if self.hess is not None:
                cross = np.outer(self.grad, other.grad)
                h = (
                    self.hess * other.value
                    + self.value * other.hess
                    + cross
                    + cross.T
                )
        return Jet(v, g, h)

    def scaled(self, c: float) -> "Jet":
        return Jet(
            c * self.value,
            None if self.grad is None else c * self.grad,
            None if self.hess is None else c * self.hess,
        )

    def reciprocal(self) -> "Jet":
        v = 1.0 / self.value
        g = h = None
        if self.grad is not None:
            g = -v * v * self.grad
            if self.hess is not None:
                outer = np.outer(self.grad, self.grad)
                h = -v * v * self.hess + 2.0 * v ** 3 * outer
        return Jet(v, g, h)

    def _chain(self, f: float, df: float, d2f: float) -> "Jet":
        # univariate chain rule through g(x) with g(a)=f, g'(a)=df, g''(a)=d2f
        g = h = None
        if self.grad is not None:
            g = df * self.grad
            if self.hess is not None:
                h = df * self.hess + d2f * np.outer(self.grad, self.grad)
        return Jet(f, g, h)


def _zero_like(point: np.ndarray, order: int) -> Jet:
    n = point.shape[0]
    grad = np.zeros(n) if order >= 1 else None
    hess = np.zeros((n, n)) if order >= 2 else None
    return Jet(0.0, grad, hess)


def eval_jet(node: Expr, point, order: int = 2) -> Jet:
    """Evaluate ``node`` at ``point`` with derivatives up to ``order``.

    Parameters
    ----------
    node : Expr
    point : array_like, shape (n,)
    order : {0, 1, 2}
        How many derivative levels to carry.  Gradients and Hessians are
        exact, not approximated.
    """
    point = np.asarray(point, dtype=float)
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    return _eval(node, point, order)


def eval_value(node: Expr, point) -> float:
    return _eval(node, np.asarray(point, dtype=float), 0).value


def _eval(node: Expr, point: np.ndarray, order: int) -> Jet:
    if isinstance(node, Const):
        out = _zero_like(point, order)
        out.value = node.value
        return out
    if isinstance(node, Var):
        out = _zero_like(point, order)
        out.value = float(point[node.index - 1])
        if order >= 1:
            out.grad[node.index - 1] = 1.0
        return out
    if isinstance(node, Neg):
        return -_eval(node.arg, point, order)
    if isinstance(node, BinOp):
        left = _eval(node.left, point, order)
        right = _eval(node.right, point, order)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right.value == 0.0:
            raise ExprDomainError("division by zero", node)
        return left * right.reciprocal()
    if isinstance(node, Pow):
        base = _eval(node.base, point, order)
        k = node.exponent
        if k == 0:
            out = _zero_like(point, order)
            out.value = 1.0
            return out
        if base.value == 0.0 and k < 0:
            raise ExprDomainError("zero raised to a negative power", node)
        try:
            v = base.value ** k
            dv = k * base.value ** (k - 1)
            d2v = k * (k - 1) * (base.value ** (k - 2) if k != 1 else 0.0)
        except OverflowError:
            raise ExprDomainError("power overflows a float", node) from None
        return base._chain(v, dv, d2v)
    if isinstance(node, Call):
        arg = _eval(node.arg, point, order)
        v = arg.value
        if node.fn == "exp":
            try:
                e = math.exp(v)
            except OverflowError:
                raise ExprDomainError("exp overflows a float", node) from None
            return arg._chain(e, e, e)
        if node.fn == "log":
            if v <= 0.0:
                raise ExprDomainError("log of a nonpositive value", node)
            return arg._chain(math.log(v), 1.0 / v, -1.0 / (v * v))
        if node.fn == "sin":
            return arg._chain(math.sin(v), math.cos(v), -math.sin(v))
        if node.fn == "cos":
            return arg._chain(math.cos(v), -math.sin(v), -math.cos(v))
        if node.fn == "sqrt":
            if v < 0.0 or (v == 0.0 and order >= 1):
                raise ExprDomainError("sqrt outside its smooth domain", node)
            s = math.sqrt(v)
            ds = 0.5 / s if v > 0.0 else 0.0
            return arg._chain(s, ds, -0.25 / (s * v) if v > 0.0 else 0.0)
        raise ValueError(f"unknown function {node.fn!r}")
    raise TypeError(f"not an expression node: {node!r}")
