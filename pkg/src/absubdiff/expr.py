"""Arithmetic expressions for problem data: ``4*x*(1-x)``, ``sin(pi*t)``, ``-u^3``.

Grammar (``^`` is right associative and binds tighter than unary minus)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := ("-" | "+") unary | power
    power := atom ("^" unary)?
    atom  := NUMBER | "pi" | VAR | FUNC "(" expr ")" | "(" expr ")"

Evaluation is vectorised over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExprEvalError, ExprSyntaxError, UnknownIdentifierError

VARIABLES = ("x", "t", "u")
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expr


Expr = Union[Num, Const, Var, Neg, BinOp, Call]


# --- parsing -----------------------------------------------------------------


def _tokenize(src: str):
    tokens = []
    pos = 0
    end = len(src.rstrip())
    while pos < end:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            start = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", _byte_offset(src, start))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), _byte_offset(src, start)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src, index):
    return len(src[:index].encode("utf-8"))


class _Parser:
    def __init__(self, src: str, variables):
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, offset = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", offset)

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text in ("-", "+"):
            self.take()
            operand = self.unary()
            return Neg(operand) if text == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, offset = self.take()
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"literal {text} is out of range", offset)
            return Num(value)
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in CONSTANTS:
                return Const(text)
            if text in self.variables:
                return Var(text)
            raise UnknownIdentifierError(text, offset)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"expected a number, name or '(', found {found}", offset)


def parse_expr(src: str, variables=VARIABLES) -> Expr:
    """Parse ``src``; identifiers outside ``variables`` are rejected with their offset."""
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(src, tuple(variables)).parse()


# --- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY_PREC = 3
_ATOM_PREC = 5


def _show(node: Expr) -> tuple[str, int]:
    if isinstance(node, Num):
        return repr(node.value), _ATOM_PREC
    if isinstance(node, (Const, Var)):
        return node.name, _ATOM_PREC
    if isinstance(node, Call):
        return f"{node.func}({_show(node.arg)[0]})", _ATOM_PREC
    if isinstance(node, Neg):
        text, prec = _show(node.operand)
        return "-" + (text if prec >= _UNARY_PREC else f"({text})"), _UNARY_PREC
    prec = _PREC[node.op]
    left, lp = _show(node.left)
    right, rp = _show(node.right)
    if node.op == "^":
        left_ok, right_ok = lp == _ATOM_PREC, rp >= _UNARY_PREC
    else:
        left_ok, right_ok = lp >= prec, rp > prec
    left = left if left_ok else f"({left})"
    right = right if right_ok else f"({right})"
    sep = "^" if node.op == "^" else f" {node.op} "
    return f"{left}{sep}{right}", prec


def to_source(node: Expr) -> str:
    """Shortest-parenthesised source text that parses back to ``node``."""
    return _show(node)[0]


def variables_of(node: Expr) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return variables_of(node.operand)
    if isinstance(node, Call):
        return variables_of(node.arg)
    if isinstance(node, BinOp):
        return variables_of(node.left) | variables_of(node.right)
    return set()


# --- evaluation --------------------------------------------------------------


def _finite(*arrays):
    ok = True
    for a in arrays:
        ok = ok & np.isfinite(a)
    return ok


def evaluate(node: Expr, env) -> np.ndarray:
    """Evaluate over the arrays (or scalars) in ``env``, broadcasting as numpy does."""
    if isinstance(node, Num):
        return np.asarray(node.value)
    if isinstance(node, Const):
        return np.asarray(CONSTANTS[node.name])
    if isinstance(node, Var):
        try:
            return np.asarray(env[node.name], dtype=float)
        except KeyError:
            raise ExprEvalError(f"variable {node.name!r} is not bound", node.name) from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, Call):
        arg = evaluate(node.arg, env)
        if node.func == "sqrt" and np.any(arg < 0.0):
            raise ExprEvalError("square root of a negative number", to_source(node))
        with np.errstate(all="ignore"):
            out = FUNCTIONS[node.func](arg)
        _check(out, node, arg)
        return out
    left = evaluate(node.left, env)
    right = evaluate(node.right, env)
    with np.errstate(all="ignore"):
        if node.op == "+":
            out = left + right
        elif node.op == "-":
            out = left - right
        elif node.op == "*":
            out = left * right
        elif node.op == "/":
            if np.any(right == 0.0):
                raise ExprEvalError("division by zero", to_source(node))
            out = left / right
        else:
            if np.any((left == 0.0) & (right < 0.0)):
                raise ExprEvalError("division by zero", to_source(node))
            out = np.power(left, right)
    _check(out, node, left, right)
    return out


def _check(out, node, *inputs):
    bad = ~np.isfinite(out) & _finite(*inputs)
    if np.any(bad):
        what = "undefined power" if np.any(np.isnan(out) & _finite(*inputs)) else "overflow"
        raise ExprEvalError(what, to_source(node))


def eval_expr(node: Expr, x: float = 0.0, t: float = 0.0, u: float = 0.0) -> float:
    return float(evaluate(node, {"x": x, "t": t, "u": u}))


@dataclass(frozen=True)
class CompiledExpr:
    """A parsed expression bound to an argument list, usable as problem data.

    ``CompiledExpr("4*x*(1-x)", ("x",))(xs)`` evaluates on an array; the
    result is broadcast to the shape of the first argument.
    """

    source: str
    args: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "_tree", parse_expr(self.source, self.args))

    @property
    def tree(self) -> Expr:
        return self._tree

    @property
    def uses(self) -> set[str]:
        return variables_of(self._tree)

    def __call__(self, *values):
        env = dict(zip(self.args, values))
        out = evaluate(self._tree, env)
        return np.broadcast_to(out, np.shape(values[0])) if values else out

    def __getstate__(self):
        return {"source": self.source, "args": self.args}

    def __setstate__(self, state):
        object.__setattr__(self, "source", state["source"])
        object.__setattr__(self, "args", state["args"])
        object.__setattr__(self, "_tree", parse_expr(self.source, self.args))
