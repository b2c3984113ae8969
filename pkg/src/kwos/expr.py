"""Tiny arithmetic expression language for boundary data in config files,
e.g. ``x^3 + y^2`` or ``exp(-x) * sin(y)``.

Grammar (whitespace insensitive):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' exponent)?          # right associative
    exponent := '-'* INT ('^' exponent)?    # integer exponents only
    atom   := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  Variables
are x, y, z by ambient dimension; functions are sin, cos, exp, sqrt, abs.
Parsing and evaluation are pure; ASTs are immutable and picklable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

__all__ = ["BoundaryFunction", "ExprError", "parse", "evaluate"]

_VARIABLES = ("x", "y", "z")
_FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
}


class ExprError(ValueError):
    """Syntax or evaluation error, carrying the byte offset for syntax."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def error(self, message: str) -> ExprError:
        return ExprError(message, self.pos)

    def skip_ws(self) -> None:
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def accept(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch: str) -> None:
        if not self.accept(ch):
            raise self.error(f"expected '{ch}'")

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while True:
            c = self.peek()
            if c == "+" or c == "-":
                self.pos += 1
                node = BinOp(c, node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Node:
        node = self.parse_unary()
        while True:
            c = self.peek()
            if c == "*" or c == "/":
                self.pos += 1
                node = BinOp(c, node, self.parse_unary())
            else:
                return node

    def parse_unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_atom()
        if self.peek() == "^":
            self.pos += 1
            return Pow(base, self.parse_exponent())
        return base

    def parse_exponent(self) -> int:
        sign = 1
        while self.accept("-"):
            sign = -sign
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.src) and self.src[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise self.error("exponent must be an integer")
        value = sign * int(self.src[start : self.pos])
        if self.peek() == "^":  # right associative: 2^3^2 = 2^(3^2)
            self.pos += 1
            value = value**self.parse_exponent()
        return value

    def parse_atom(self) -> Node:
        c = self.peek()
        if c == "(":
            self.pos += 1
            node = self.parse_expr()
            self.expect(")")
            return node
        if c.isdigit() or c == ".":
            return Num(self.parse_number())
        if c.isalpha():
            start = self.pos
            while self.pos < len(self.src) and self.src[self.pos].isalnum():
                self.pos += 1
            name = self.src[start : self.pos]
            if name in _VARIABLES:
                return Var(name)
            if name in _FUNCTIONS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Call(name, arg)
            self.pos = start
            raise self.error(f"unknown identifier '{name}'")
        raise self.error("expected a number, variable or '('")

    def parse_number(self) -> float:
        start = self.pos
        src = self.src
        while self.pos < len(src) and (src[self.pos].isdigit() or src[self.pos] == "."):
            self.pos += 1
        if self.pos < len(src) and src[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(src) and src[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(src) and src[self.pos].isdigit():
                while self.pos < len(src) and src[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark
        try:
            return float(src[start : self.pos])
        except ValueError:
            self.pos = start
            raise self.error(f"malformed number '{src[start:self.pos + 1]}'") from None


def _variables_of(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset((node.name,))
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return _variables_of(node.operand)
    if isinstance(node, BinOp):
        return _variables_of(node.left) | _variables_of(node.right)
    if isinstance(node, Pow):
        return _variables_of(node.base)
    return _variables_of(node.arg)


def _int_pow(base: float, k: int) -> float:
    if k < 0:
        return 1.0 / _int_pow(base, -k)
    result = 1.0
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


def _eval_node(node: Node, values: dict[str, float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return values[node.name]
        except KeyError:
            raise ExprError(f"variable '{node.name}' is not defined in this dimension") from None
    if isinstance(node, Neg):
        return -_eval_node(node.operand, values)
    if isinstance(node, BinOp):
        left = _eval_node(node.left, values)
        right = _eval_node(node.right, values)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right == 0.0:
            raise ExprError("division by zero")
        return left / right
    if isinstance(node, Pow):
        return _int_pow(_eval_node(node.base, values), node.exponent)
    arg = _eval_node(node.arg, values)
    try:
        return _FUNCTIONS[node.func](arg)
    except (ValueError, OverflowError) as exc:
        raise ExprError(f"{node.func}({arg}) is undefined: {exc}") from None


def _print_node(node: Node) -> str:
    # Fully parenthesized, so parse(print(ast)) rebuilds the identical tree.
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_print_node(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_print_node(node.left)} {node.op} {_print_node(node.right)})"
    if isinstance(node, Pow):
        exp = str(node.exponent) if node.exponent >= 0 else f"-{-node.exponent}"
        return f"({_print_node(node.base)} ^ {exp})"
    return f"{node.func}({_print_node(node.arg)})"


@dataclass(frozen=True)
class BoundaryFunction:
    """Parsed boundary expression over the variables x, y, z."""

    ast: Node
    source: str

    @property
    def variables(self) -> frozenset[str]:
        return _variables_of(self.ast)

    def max_dimension_needed(self) -> int:
        used = self.variables
        return max((_VARIABLES.index(v) + 1 for v in used), default=0)

    def __call__(self, point) -> float:
        return evaluate(self, point)

    def to_source(self) -> str:
        return _print_node(self.ast)


def parse(src: str) -> BoundaryFunction:
    """Parse an expression; raises ExprError with a byte offset on bad input."""
    parser = _Parser(src)
    node = parser.parse_expr()
    parser.skip_ws()
    if parser.pos != len(src):
        raise ExprError("unexpected trailing input", parser.pos)
    return BoundaryFunction(node, src)


def evaluate(f: BoundaryFunction, point) -> float:
    """Evaluate at a point whose coordinates bind x, y, z in order.

    Raises ExprError for missing variables, domain errors (e.g. sqrt of a
    negative) and non-finite results.
    """
    coords = [float(c) for c in point] if hasattr(point, "__len__") else [float(point)]
    values = dict(zip(_VARIABLES, coords))
    result = _eval_node(f.ast, values)
    if not math.isfinite(result):
        raise ExprError(f"expression '{f.source}' produced a non-finite value at {coords}")
    return result
