"""Arithmetic expressions in the control variable ``u`` and the state ``x``.

Coefficients (drift, diffusion, running cost) are given as plain text
formulas over ``u`` and ``x`` with ``+ - * / ^`` (or ``**``), parentheses,
numeric literals, and the functions exp, log, sqrt, sin, cos, tanh, abs,
min, max.  Parsing produces an immutable AST; evaluation is pure, so
repeated calls on the same inputs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

__all__ = [
    "CoefficientExpr",
    "ExpressionError",
    "ExpressionSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "EvaluationDomainError",
    "parse_expression",
]


class ExpressionError(ValueError):
    """Base class for expression parse and evaluation failures."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, source: str, position: int):
        super().__init__(f"{message} at offset {position} in {source!r}")
        self.position = position


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name: str, source: str, position: int):
        super().__init__(
            f"unknown identifier {name!r} at offset {position} in {source!r}; "
            "variables are 'u' and 'x'"
        )
        self.name = name
        self.position = position


class ArityError(ExpressionError):
    def __init__(self, name: str, got: int, want: str, position: int):
        super().__init__(f"{name}() takes {want} argument(s), got {got} at offset {position}")
        self.position = position


class EvaluationDomainError(ExpressionError):
    """A sub-expression produced a non-finite value at finite inputs."""

    def __init__(self, fragment: str, position: int, detail: str = ""):
        msg = f"non-finite value in {fragment!r} at offset {position}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.fragment = fragment
        self.position = position


# one-argument functions; min/max are variadic (>= 2) and handled separately
_UNARY_FUNCS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "abs": np.abs,
}

_VARIADIC_FUNCS = {"min", "max"}


@dataclass(frozen=True)
class _Node:
    start: int
    end: int


@dataclass(frozen=True)
class _Num(_Node):
    value: float


@dataclass(frozen=True)
class _Var(_Node):
    name: str


@dataclass(frozen=True)
class _Unary(_Node):
    op: str
    operand: _Node


@dataclass(frozen=True)
class _Binary(_Node):
    op: str
    left: _Node
    right: _Node


@dataclass(frozen=True)
class _Call(_Node):
    name: str
    args: tuple


_Ast = Union[_Num, _Var, _Unary, _Binary, _Call]


class _Parser:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.n = len(source)

    def _skip_ws(self):
        while self.pos < self.n and self.src[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.src[self.pos] if self.pos < self.n else ""

    def parse(self) -> _Ast:
        node = self.expr()
        self._skip_ws()
        if self.pos < self.n:
            raise ExpressionSyntaxError(
                f"unexpected {self.src[self.pos]!r}", self.src, self.pos
            )
        return node

    def expr(self) -> _Ast:
        node = self.term()
        while True:
            c = self._peek()
            if c == "+" or c == "-":
                self.pos += 1
                rhs = self.term()
                node = _Binary(node.start, rhs.end, c, node, rhs)
            else:
                return node

    def term(self) -> _Ast:
        node = self.unary()
        while True:
            c = self._peek()
            if c == "*" and self.src[self.pos : self.pos + 2] == "**":
                return node  # power operator, handled below the unary level
            if c == "*" or c == "/":
                self.pos += 1
                rhs = self.unary()
                node = _Binary(node.start, rhs.end, c, node, rhs)
            else:
                return node

    def unary(self) -> _Ast:
        c = self._peek()
        if c == "+" or c == "-":
            start = self.pos
            self.pos += 1
            operand = self.unary()
            if c == "+":
                return operand
            return _Unary(start, operand.end, "-", operand)
        return self.power()

    def power(self) -> _Ast:
        base = self.atom()
        c = self._peek()
        if c == "^":
            self.pos += 1
        elif c == "*" and self.src[self.pos : self.pos + 2] == "**":
            self.pos += 2
        else:
            return base
        exponent = self.unary()  # right-associative, allows 2^-x
        return _Binary(base.start, exponent.end, "^", base, exponent)

    def atom(self) -> _Ast:
        c = self._peek()
        start = self.pos
        if c == "":
            raise ExpressionSyntaxError("unexpected end of input", self.src, self.pos)
        if c == "(":
            self.pos += 1
            node = self.expr()
            if self._peek() != ")":
                raise ExpressionSyntaxError("expected ')'", self.src, self.pos)
            self.pos += 1
            return node
        if c.isdigit() or c == ".":
            return self.number()
        if c.isalpha() or c == "_":
            return self.identifier()
        raise ExpressionSyntaxError(f"unexpected {c!r}", self.src, self.pos)

    def number(self) -> _Num:
        start = self.pos
        i = self.pos
        src, n = self.src, self.n
        while i < n and (src[i].isdigit() or src[i] == "."):
            i += 1
        if i < n and src[i] in "eE":
            j = i + 1
            if j < n and src[j] in "+-":
                j += 1
            if j < n and src[j].isdigit():
                i = j
                while i < n and src[i].isdigit():
                    i += 1
        text = src[start:i]
        try:
            value = float(text)
        except ValueError:
            raise ExpressionSyntaxError(f"bad numeric literal {text!r}", src, start) from None
        self.pos = i
        return _Num(start, i, value)

    def identifier(self) -> _Ast:
        start = self.pos
        i = self.pos
        src, n = self.src, self.n
        while i < n and (src[i].isalnum() or src[i] == "_"):
            i += 1
        name = src[start:i]
        self.pos = i
        if self._peek() == "(":
            return self.call(name, start)
        if name in ("u", "x"):
            return _Var(start, i, name)
        raise UnknownIdentifierError(name, src, start)

    def call(self, name: str, start: int) -> _Call:
        if name not in _UNARY_FUNCS and name not in _VARIADIC_FUNCS:
            raise UnknownIdentifierError(name, self.src, start)
        self.pos += 1  # consume '('
        args = [self.expr()]
        while self._peek() == ",":
            self.pos += 1
            args.append(self.expr())
        if self._peek() != ")":
            raise ExpressionSyntaxError("expected ')'", self.src, self.pos)
        self.pos += 1
        end = self.pos
        if name in _UNARY_FUNCS and len(args) != 1:
            raise ArityError(name, len(args), "1", start)
        if name in _VARIADIC_FUNCS and len(args) < 2:
            raise ArityError(name, len(args), ">= 2", start)
        return _Call(start, end, name, tuple(args))


def _eval_node(node: _Ast, u, x, source: str):
    if isinstance(node, _Num):
        return node.value
    if isinstance(node, _Var):
        return u if node.name == "u" else x
    with np.errstate(all="ignore"):
        if isinstance(node, _Unary):
            val = -_eval_node(node.operand, u, x, source)
        elif isinstance(node, _Binary):
            a = _eval_node(node.left, u, x, source)
            b = _eval_node(node.right, u, x, source)
            if node.op == "+":
                val = a + b
            elif node.op == "-":
                val = a - b
            elif node.op == "*":
                val = a * b
            elif node.op == "/":
                val = a / b
            else:
                val = np.power(a, b)
        else:
            fn_args = [_eval_node(arg, u, x, source) for arg in node.args]
            if node.name in _UNARY_FUNCS:
                val = _UNARY_FUNCS[node.name](fn_args[0])
            elif node.name == "min":
                val = fn_args[0]
                for other in fn_args[1:]:
                    val = np.minimum(val, other)
            else:
                val = fn_args[0]
                for other in fn_args[1:]:
                    val = np.maximum(val, other)
    bad = ~np.isfinite(val)
    if bad.any() if isinstance(bad, np.ndarray) else bad:
        fragment = source[node.start : node.end]
        if isinstance(bad, np.ndarray):
            idx = np.unravel_index(np.argmax(bad), bad.shape)
            uu = np.broadcast_to(np.asarray(u, dtype=float), bad.shape)[idx]
            xx = np.broadcast_to(np.asarray(x, dtype=float), bad.shape)[idx]
            detail = f"u={uu:g}, x={xx:g}"
        else:
            detail = f"u={float(np.asarray(u).ravel()[0]):g}, x={float(np.asarray(x).ravel()[0]):g}"
        raise EvaluationDomainError(fragment, node.start, detail)
    return val


_NUMPY_EMIT = {
    "exp": "np.exp",
    "log": "np.log",
    "sqrt": "np.sqrt",
    "sin": "np.sin",
    "cos": "np.cos",
    "tanh": "np.tanh",
    "abs": "np.abs",
    "min": "np.minimum",
    "max": "np.maximum",
}

_SCALAR_EMIT = {
    "exp": "math.exp",
    "log": "math.log",
    "sqrt": "math.sqrt",
    "sin": "math.sin",
    "cos": "math.cos",
    "tanh": "math.tanh",
    "abs": "abs",
    "min": "min",
    "max": "max",
}


def _emit(node: _Ast, table: dict, powfmt: str) -> str:
    if isinstance(node, _Num):
        return repr(node.value)
    if isinstance(node, _Var):
        return node.name
    if isinstance(node, _Unary):
        return f"(-{_emit(node.operand, table, powfmt)})"
    if isinstance(node, _Binary):
        a = _emit(node.left, table, powfmt)
        b = _emit(node.right, table, powfmt)
        if node.op == "^":
            return powfmt.format(a=a, b=b)
        return f"({a} {node.op} {b})"
    args = [_emit(arg, table, powfmt) for arg in node.args]
    fn = table[node.name]
    if node.name in ("min", "max"):
        out = args[0]
        for other in args[1:]:
            out = f"{fn}({out}, {other})"
        return out
    return f"{fn}({args[0]})"


@dataclass(frozen=True, eq=False)
class CoefficientExpr:
    """A parsed coefficient formula over the variables ``u`` and ``x``.

    ``evaluate`` walks the AST and pinpoints the offending sub-expression
    when a non-finite value appears; ``__call__`` is a compiled fast path
    used by the solvers, which check finiteness at a coarser granularity.
    """

    source: str
    root: _Ast = field(repr=False)
    _numpy_fn: Callable = field(repr=False, compare=False)

    def evaluate(self, u, x):
        """Evaluate with per-node domain checks.

        Parameters
        ----------
        u, x : float or ndarray
            Broadcastable inputs.

        Returns
        -------
        float or ndarray
        """
        val = _eval_node(self.root, np.asarray(u, dtype=float), np.asarray(x, dtype=float), self.source)
        if np.ndim(u) == 0 and np.ndim(x) == 0:
            return float(val)
        return np.broadcast_to(val, np.broadcast_shapes(np.shape(u), np.shape(x)))

    def __call__(self, u, x):
        with np.errstate(all="ignore"):
            return self._numpy_fn(u, x)

    @property
    def variables(self) -> frozenset:
        names = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, _Var):
                names.add(node.name)
            elif isinstance(node, _Unary):
                stack.append(node.operand)
            elif isinstance(node, _Binary):
                stack.extend((node.left, node.right))
            elif isinstance(node, _Call):
                stack.extend(node.args)
        return frozenset(names)

    def numpy_source(self) -> str:
        return _emit(self.root, _NUMPY_EMIT, "np.power({a}, {b})")

    def scalar_source(self) -> str:
        # math-module form, consumable by scalar JIT kernels
        return _emit(self.root, _SCALAR_EMIT, "({a}) ** ({b})")

    def as_scalar_function(self) -> Callable:
        """Compile to a scalar float function of (u, x) using ``math``."""
        namespace = {"math": math}
        exec(f"def _f(u, x):\n    return {self.scalar_source()}", namespace)
        return namespace["_f"]


def parse_expression(source: str) -> CoefficientExpr:
    """Parse a coefficient formula.

    Raises
    ------
    ExpressionSyntaxError
        Malformed input; carries the byte offset of the failure.
    UnknownIdentifierError
        Identifier other than ``u``, ``x``, or a known function name.
    ArityError
        Function called with the wrong number of arguments.
    """
    if not isinstance(source, str):
        raise ExpressionSyntaxError("expression must be a string", str(source), 0)
    if not source.strip():
        raise ExpressionSyntaxError("empty expression", source, 0)
    root = _Parser(source).parse()
    namespace = {"np": np}
    exec(f"def _f(u, x):\n    return {_emit(root, _NUMPY_EMIT, 'np.power({a}, {b})')}", namespace)
    return CoefficientExpr(source=source, root=root, _numpy_fn=namespace["_f"])
