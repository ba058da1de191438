"""Parser, printer and jet evaluator for scalar expression strings.

Expressions define metric components g_ij(x) and scenario parameters on the
bundle chart.  Variables are fixed as x1..xn (base coordinates) and u1..un
(fiber coordinates).  Grammar, with `^` binding tightest:

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' integer)*
    atom   := number | variable | function '(' expr ')' | '(' expr ')'

Binary operators of equal precedence associate to the left.  Exponents are
integer literals only (optionally negative), and there is no implicit
multiplication.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .jets import Jet, JetDomainError, apply_function

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh")

_FLOAT_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "sinh": math.sinh, "cosh": math.cosh,
    "tanh": math.tanh,
}


class ExprError(ValueError):
    """Base class for expression failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprNameError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprDomainError(ExprError):
    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


# -- AST ----------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str   # 'x' or 'u'
    index: int  # 1-based


@dataclass(frozen=True)
class BinOp:
    op: str     # '+', '-', '*', '/'
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


# -- tokenizer ----------------------------------------------------------

_TOKEN_RE = re.compile(r"(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
                       r"|\d+(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
                       r"|(?P<op>[-+*/^()]))")

_VAR_RE = re.compile(r"^([xu])([0-9]+)$")


def _tokenize(source: str):
    tokens = []
    pos = 0
    length = len(source)
    while pos < length:
        while pos < length and source[pos].isspace():
            pos += 1
        if pos >= length:
            break
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        if match.group("num") is not None:
            tokens.append(("num", match.group("num"), pos))
        elif match.group("ident") is not None:
            tokens.append(("ident", match.group("ident"), pos))
        else:
            tokens.append(("op", match.group("op"), pos))
        pos = match.end()
    tokens.append(("end", "", length))
    return tokens


# -- parser -------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, n: int):
        self.source = source
        self.n = n
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected '{op}'", offset)
        return self.advance()

    def parse(self):
        node = self.parse_expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", offset)
        return node

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        node = self.parse_atom()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text == "^":
                self.advance()
                node = Pow(node, self.parse_exponent())
            else:
                return node

    def parse_exponent(self) -> int:
        sign = 1
        kind, text, offset = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            sign = -1
            kind, text, offset = self.peek()
        if kind != "num":
            raise ExprSyntaxError("expected integer exponent", offset)
        if not re.fullmatch(r"\d+", text):
            raise ExprSyntaxError(f"exponent must be an integer literal, got {text!r}", offset)
        self.advance()
        return sign * int(text)

    def parse_atom(self):
        kind, text, offset = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "op" and text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            nxt_kind, nxt_text, _ = self.peek()
            if nxt_kind == "op" and nxt_text == "(":
                if text not in FUNCTIONS:
                    raise ExprNameError(f"unknown function '{text}'", offset)
                self.advance()
                arg = self.parse_expr()
                self.expect_op(")")
                return Call(text, arg)
            var = _VAR_RE.match(text)
            if var is None:
                raise ExprNameError(f"unknown identifier '{text}'", offset)
            index = int(var.group(2))
            if not 1 <= index <= self.n:
                raise ExprNameError(
                    f"variable '{text}' out of range for dimension {self.n}", offset)
            return Var(var.group(1), index)
        raise ExprSyntaxError(f"expected a value, got {text!r}" if text else "unexpected end of input",
                              offset)


def parse(source: str, n: int):
    """Parse an expression over x1..xn, u1..un into an AST."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    if n < 1:
        raise ExprError(f"dimension must be >= 1, got {n}")
    return _Parser(source, n).parse()


# -- printer ------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _fmt_const(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_source(node) -> str:
    """Render an AST back to a string that reparses to an equal AST."""
    if isinstance(node, Const):
        if node.value < 0:
            return "-" + _fmt_const(-node.value)
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if _prec(node.operand) < 3:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Pow):
        base = to_source(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, BinOp):
        op_prec = _PREC[node.op]
        left = to_source(node.left)
        if _prec(node.left) < op_prec:
            left = f"({left})"
        right = to_source(node.right)
        if _prec(node.right) <= op_prec:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# -- evaluation ---------------------------------------------------------


def _var_slot(node: Var, n: int) -> int:
    return (node.index - 1) if node.kind == "x" else (n + node.index - 1)


def eval_jet(node, point, n: int, order: int) -> Jet:
    """Evaluate an AST as a Jet in 2n variables (x1..xn, u1..un) at `point`."""
    point = [float(c) for c in point]
    if len(point) != 2 * n:
        raise ExprError(f"point has {len(point)} coordinates, expected {2 * n}")
    nvars = 2 * n

    def walk(e) -> Jet:
        if isinstance(e, Const):
            return Jet.constant(e.value, nvars, order)
        if isinstance(e, Var):
            slot = _var_slot(e, n)
            return Jet.variable(slot, point[slot], nvars, order)
        if isinstance(e, Neg):
            return -walk(e.operand)
        if isinstance(e, BinOp):
            left = walk(e.left)
            right = walk(e.right)
            try:
                if e.op == "+":
                    return left + right
                if e.op == "-":
                    return left - right
                if e.op == "*":
                    return left * right
                return left / right
            except JetDomainError as err:
                raise ExprDomainError(str(err), to_source(e)) from None
        if isinstance(e, Pow):
            base = walk(e.base)
            try:
                return base.power(e.exponent)
            except JetDomainError as err:
                raise ExprDomainError(str(err), to_source(e)) from None
        if isinstance(e, Call):
            arg = walk(e.arg)
            try:
                return apply_function(e.func, arg)
            except JetDomainError as err:
                raise ExprDomainError(str(err), to_source(e)) from None
        raise TypeError(f"not an expression node: {e!r}")

    return walk(node)


def eval_float(node, point, n: int) -> float:
    """Plain float evaluation (same domain rules as eval_jet, cheaper)."""
    point = [float(c) for c in point]
    if len(point) != 2 * n:
        raise ExprError(f"point has {len(point)} coordinates, expected {2 * n}")

    def walk(e) -> float:
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Var):
            return point[_var_slot(e, n)]
        if isinstance(e, Neg):
            return -walk(e.operand)
        if isinstance(e, BinOp):
            left = walk(e.left)
            right = walk(e.right)
            if e.op == "+":
                return left + right
            if e.op == "-":
                return left - right
            if e.op == "*":
                return left * right
            if right == 0.0:
                raise ExprDomainError("division by zero", to_source(e))
            return left / right
        if isinstance(e, Pow):
            base = walk(e.base)
            if base == 0.0 and e.exponent < 0:
                raise ExprDomainError(f"zero raised to negative power {e.exponent}",
                                      to_source(e))
            return base ** e.exponent
        if isinstance(e, Call):
            arg = walk(e.arg)
            if e.func == "log" and arg <= 0.0:
                raise ExprDomainError(f"log of non-positive value {arg}", to_source(e))
            if e.func == "sqrt" and arg < 0.0:
                raise ExprDomainError(f"sqrt of negative value {arg}", to_source(e))
            return _FLOAT_FUNCS[e.func](arg)
        raise TypeError(f"not an expression node: {e!r}")

    return walk(node)


def variables_used(node) -> set:
    """Set of (kind, index) pairs appearing in the AST."""
    out: set = set()

    def walk(e):
        if isinstance(e, Var):
            out.add((e.kind, e.index))
        elif isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, (Neg,)):
            walk(e.operand)
        elif isinstance(e, Pow):
            walk(e.base)
        elif isinstance(e, Call):
            walk(e.arg)

    walk(node)
    return out
