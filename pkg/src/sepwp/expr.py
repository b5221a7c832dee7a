"""Arithmetic expressions for perturbed bifunctions.

Grammar (lowest to highest precedence)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)?
    exponent := '-'? INT ('^' exponent)?
    atom     := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

Variables are a namespace letter followed by a 1-based index (``p1``, ``z2``).
Exponents must be integer literals so that evaluation stays total on negative
bases. Evaluation works on floats and on broadcastable numpy arrays through a
single code path, so a scalar evaluation and a batched one agree bit for bit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

NAMESPACES = ("p", "z", "x", "w", "y")
FUNCTIONS = {"abs": 1, "sqrt": 1, "min2": 2, "max2": 2}


class ParseError(ValueError):
    def __init__(self, offset: int, message: str, token: str = ""):
        self.offset = offset
        self.message = message
        self.token = token
        where = f" near {token!r}" if token else ""
        super().__init__(f"{message} at offset {offset}{where}")


class EvaluationError(ArithmeticError):
    """Raised on division by zero or sqrt of a negative number."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    ns: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Const, Var, Neg, BinOp, Pow, Call]


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)
_VAR_RE = re.compile(r"([pzxwy])([1-9][0-9]*)$")


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(_byte_offset(text, pos), "unexpected character", text[pos])
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(text, len(text))))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind != "op":
            what = "end of input" if self.tok.kind == "end" else "token"
            raise ParseError(self.tok.offset, f"expected {text!r}, got {what}", self.tok.text)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            if self.tok.text == ")":
                raise ParseError(self.tok.offset, "unbalanced parentheses", ")")
            raise ParseError(self.tok.offset, "unexpected token", self.tok.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        start = self.tok
        sign = 1
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            sign = -1
        t = self.tok
        if t.kind != "number" or not t.text.isdigit():
            if t.kind == "end":
                raise ParseError(t.offset, "missing exponent")
            raise ParseError(t.offset, "non-integer exponent", t.text)
        self.advance()
        value = sign * int(t.text)
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            inner = self.exponent()
            if inner < 0:
                raise ParseError(start.offset, "non-integer exponent", start.text)
            value = value**inner
        return value

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Const(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS:
                return self.call(t)
            m = _VAR_RE.match(t.text)
            if m is None:
                raise ParseError(t.offset, "unknown identifier", t.text)
            return Var(m.group(1), int(m.group(2)))
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            if self.tok.text != ")":
                raise ParseError(self.tok.offset, "unbalanced parentheses", self.tok.text)
            self.advance()
            return node
        if t.kind == "end":
            raise ParseError(t.offset, "unexpected end of input")
        raise ParseError(t.offset, "unexpected token", t.text)

    def call(self, name_tok: _Token) -> Node:
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        if self.tok.text != ")":
            raise ParseError(self.tok.offset, "unbalanced parentheses", self.tok.text)
        self.advance()
        arity = FUNCTIONS[name_tok.text]
        if len(args) != arity:
            raise ParseError(
                name_tok.offset,
                f"arity mismatch: {name_tok.text} takes {arity} argument(s), got {len(args)}",
                name_tok.text,
            )
        return Call(name_tok.text, tuple(args))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _ipow(base, n: int):
    # binary exponentiation; identical rounding for scalars and arrays
    if n < 0:
        denom = _ipow(base, -n)
        if np.any(denom == 0):
            raise EvaluationError("division by zero (negative power of zero)")
        return 1.0 / denom
    result = None
    b = base
    while n:
        if n & 1:
            result = b if result is None else result * b
        n >>= 1
        if n:
            b = b * b
    if result is None:
        return np.ones_like(base, dtype=float) if isinstance(base, np.ndarray) else 1.0
    return result


def _eval(node: Node, env: Mapping[str, np.ndarray]):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            arr = env[node.ns]
        except KeyError:
            raise KeyError(f"no binding for namespace {node.ns!r}") from None
        if node.index > arr.shape[-1]:
            raise IndexError(f"{node.ns}{node.index} out of range for dimension {arr.shape[-1]}")
        return arr[..., node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise EvaluationError("division by zero")
        return a / b
    if isinstance(node, Pow):
        return _ipow(_eval(node.base, env), node.exponent)
    if isinstance(node, Call):
        vals = [_eval(a, env) for a in node.args]
        if node.name == "abs":
            return np.abs(vals[0])
        if node.name == "sqrt":
            if np.any(np.asarray(vals[0]) < 0):
                raise EvaluationError("sqrt of a negative number")
            return np.sqrt(vals[0])
        if node.name == "min2":
            return np.minimum(vals[0], vals[1])
        return np.maximum(vals[0], vals[1])
    raise TypeError(f"unknown node {node!r}")


def _format(node: Node) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return f"{node.ns}{node.index}"
    if isinstance(node, Neg):
        return f"(-{_format(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_format(node.left)} {node.op} {_format(node.right)})"
    if isinstance(node, Pow):
        return f"({_format(node.base)} ^ {node.exponent})"
    return f"{node.name}({', '.join(_format(a) for a in node.args)})"


def _collect(node: Node, out: set) -> None:
    if isinstance(node, Var):
        out.add((node.ns, node.index))
    elif isinstance(node, Neg):
        _collect(node.operand, out)
    elif isinstance(node, BinOp):
        _collect(node.left, out)
        _collect(node.right, out)
    elif isinstance(node, Pow):
        _collect(node.base, out)
    elif isinstance(node, Call):
        for a in node.args:
            _collect(a, out)


@dataclass(frozen=True)
class Expression:
    """A parsed expression. Immutable; evaluation is pure."""

    root: Node
    text: str = ""

    def __str__(self) -> str:
        return _format(self.root)

    def free_vars(self) -> frozenset:
        return free_vars(self)

    def __call__(self, **bindings):
        return evaluate_array(self, bindings)


def parse(text: str) -> Expression:
    return Expression(_Parser(text).parse(), text)


def free_vars(expr: Expression) -> frozenset:
    """Set of ``(namespace, index)`` pairs referenced by ``expr``."""
    out: set = set()
    _collect(expr.root, out)
    return frozenset(out)


def evaluate_array(expr: Expression, bindings: Mapping[str, object]) -> np.ndarray:
    """Evaluate with numpy broadcasting.

    Each binding is an array whose last axis holds the vector components;
    leading axes broadcast against each other. Returns an array of the
    broadcast leading shape.
    """
    env = {k: np.asarray(v, dtype=float) for k, v in bindings.items()}
    with np.errstate(over="ignore", invalid="ignore"):
        out = _eval(expr.root, env)
    shape = np.broadcast_shapes(*(a.shape[:-1] for a in env.values())) if env else ()
    return np.broadcast_to(np.asarray(out, dtype=float), shape)


def evaluate(expr: Expression, bindings: Mapping[str, object]) -> float:
    """Evaluate at a single point; each binding is one vector (or a scalar for 1-D)."""
    env = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in bindings.items()}
    for k, v in env.items():
        if v.ndim != 1:
            raise ValueError(f"binding {k!r} must be a vector")
    return float(evaluate_array(expr, env))
