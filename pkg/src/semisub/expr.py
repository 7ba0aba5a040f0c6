"""Scalar-field expressions over chart coordinates.

A small immutable AST with a recursive-descent parser and exact jet
evaluation.  Grammar (documented in docs/grammar.md):

    expression := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := atom ("^" ["-"] integer)*
    atom       := number | symbol | function "(" expression ")"
                | "(" expression ")"

Power binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  Exponents
must be integer literals.  Function application requires parentheses.
Named constants are bound at evaluation time, not parse time, so a single
AST serves parameter sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import (
    NVARS,
    DomainError,
    Poly,
    ScalarJet2,
    TAYLOR_FUNCTIONS,
)

FUNCTIONS = ("exp", "log", "sin", "cos", "sinh", "cosh", "tanh", "sqrt")


class ExprSyntaxError(ValueError):
    """Malformed expression text; carries the 0-based byte offset and
    1-based line/column of the offence."""

    def __init__(self, message: str, source: str, offset: int):
        self.offset = offset
        self.line = source.count("\n", 0, offset) + 1
        self.column = offset - (source.rfind("\n", 0, offset) + 1) + 1
        super().__init__(
            f"{message} at offset {offset} (line {self.line}, column {self.column})"
        )


class UnknownSymbolError(ValueError):
    """An identifier that is neither a declared coordinate, a declared
    constant, nor a function name."""

    def __init__(self, name: str, source: str, offset: int):
        self.name = name
        self.offset = offset
        self.line = source.count("\n", 0, offset) + 1
        self.column = offset - (source.rfind("\n", 0, offset) + 1) + 1
        super().__init__(
            f"unknown symbol '{name}' at offset {offset} "
            f"(line {self.line}, column {self.column})"
        )


class Expr:
    """Base class for AST nodes.  Nodes are frozen dataclasses; operator
    overloads allow building expressions programmatically."""

    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __sub__(self, other):
        return Sub(self, _lift(other))

    def __rsub__(self, other):
        return Sub(_lift(other), self)

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __truediv__(self, other):
        return Div(self, _lift(other))

    def __rtruediv__(self, other):
        return Div(_lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("exponent must be an integer")
        return Pow(self, n)

    def free_symbols(self) -> set:
        out = set()
        _collect_symbols(self, out)
        return out

    def __str__(self) -> str:
        return _to_string(self)


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        if x < 0:
            return Neg(Num(-float(x)))
        return Num(float(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Sym(Expr):
    name: str
    axis: int | None  # coordinate axis, or None for a named constant


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def _collect_symbols(e: Expr, out: set):
    if isinstance(e, Sym):
        out.add(e.name)
    elif isinstance(e, (Add, Sub, Mul, Div)):
        _collect_symbols(e.left, out)
        _collect_symbols(e.right, out)
    elif isinstance(e, Neg):
        _collect_symbols(e.arg, out)
    elif isinstance(e, Pow):
        _collect_symbols(e.base, out)
    elif isinstance(e, Call):
        _collect_symbols(e.arg, out)


# ---------------------------------------------------------------------------
# tokenizer / parser

_OPS = set("+-*/^()")


def _tokenize(source: str):
    tokens = []  # (kind, text, offset)
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            tokens.append(("num", source[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("name", source[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character '{ch}'", source, i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source, coords, constants):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.coords = {name: axis for axis, name in enumerate(coords)}
        self.constants = set(constants)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected '{op}'", self.source, off)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expression()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected '{text}'", self.source, off)
        return e

    def expression(self) -> Expr:
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                rhs = self.term()
                e = Add(e, rhs) if text == "+" else Sub(e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                rhs = self.unary()
                e = Mul(e, rhs) if text == "*" else Div(e, rhs)
            else:
                return e

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text == "^":
                self.advance()
                e = Pow(e, self.exponent())
            else:
                return e

    def exponent(self) -> int:
        sign = 1
        kind, text, off = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            sign = -1
            kind, text, off = self.peek()
        if kind != "num":
            raise ExprSyntaxError("expected an integer exponent", self.source, off)
        if any(c in text for c in ".eE"):
            raise ExprSyntaxError(
                "exponent must be an integer literal", self.source, off
            )
        self.advance()
        return sign * int(text)

    def atom(self) -> Expr:
        kind, text, off = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return Call(text, arg)
            if text in self.coords:
                return Sym(text, self.coords[text])
            if text in self.constants:
                return Sym(text, None)
            raise UnknownSymbolError(text, self.source, off)
        if kind == "op" and text == "(":
            e = self.expression()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(
            f"unexpected '{text}'" if text else "unexpected end of input",
            self.source,
            off,
        )


def parse(source: str, chart_coords, constants=()) -> Expr:
    """Parse an expression over the given coordinate names.  Identifiers in
    ``constants`` become late-bound named constants; anything else raises
    UnknownSymbolError."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", source, 0)
    return _Parser(source, tuple(chart_coords), constants).parse()


# ---------------------------------------------------------------------------
# pretty printer (parse -> str -> parse is structurally the identity)

def _format_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _needs_parens_in_product(e: Expr) -> bool:
    return isinstance(e, (Add, Sub, Neg))


def _to_string(e: Expr) -> str:
    if isinstance(e, Num):
        return _format_num(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Add):
        rhs = _to_string(e.right)
        if isinstance(e.right, (Add, Sub, Neg)):
            rhs = f"({rhs})"
        return f"{_to_string(e.left)} + {rhs}"
    if isinstance(e, Sub):
        rhs = _to_string(e.right)
        if isinstance(e.right, (Add, Sub, Neg)):
            rhs = f"({rhs})"
        return f"{_to_string(e.left)} - {rhs}"
    if isinstance(e, Mul):
        lhs = _to_string(e.left)
        if _needs_parens_in_product(e.left):
            lhs = f"({lhs})"
        rhs = _to_string(e.right)
        if _needs_parens_in_product(e.right) or isinstance(e.right, (Mul, Div)):
            rhs = f"({rhs})"
        return f"{lhs}*{rhs}"
    if isinstance(e, Div):
        lhs = _to_string(e.left)
        if _needs_parens_in_product(e.left):
            lhs = f"({lhs})"
        rhs = _to_string(e.right)
        if _needs_parens_in_product(e.right) or isinstance(e.right, (Mul, Div)):
            rhs = f"({rhs})"
        return f"{lhs}/{rhs}"
    if isinstance(e, Neg):
        # unary minus binds looser than ^ but tighter than * and /, so any
        # composite argument except a power needs parentheses
        arg = _to_string(e.arg)
        if isinstance(e.arg, (Add, Sub, Neg, Mul, Div)):
            arg = f"({arg})"
        return f"-{arg}"
    if isinstance(e, Pow):
        base = _to_string(e.base)
        if not isinstance(e.base, (Num, Sym, Call)):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.func}({_to_string(e.arg)})"
    raise TypeError(f"not an Expr node: {e!r}")


# ---------------------------------------------------------------------------
# evaluation

def _as_points(point) -> np.ndarray:
    pts = np.asarray(point, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[1] != NVARS:
        raise ValueError(f"points must have {NVARS} components")
    return pts


def _const_value(e: Sym, constants, nb):
    try:
        v = constants[e.name]
    except (KeyError, TypeError):
        raise DomainError("unbound constant", e.name) from None
    return np.broadcast_to(np.asarray(v, dtype=float), (nb,))


def eval_poly(e: Expr, points, constants=None, order: int = 2) -> Poly:
    """Evaluate an expression as a truncated Taylor polynomial at a batch of
    points.  DomainError carries the offending subexpression."""
    pts = _as_points(points)
    nb = pts.shape[0]
    return _eval_poly(e, pts, constants or {}, order, nb)


def _eval_poly(e, pts, constants, order, nb) -> Poly:
    if isinstance(e, Num):
        return Poly.const(e.value, order, nb)
    if isinstance(e, Sym):
        if e.axis is not None:
            return Poly.coordinate(e.axis, pts[:, e.axis], order)
        return Poly.const(_const_value(e, constants, nb), order, nb)
    if isinstance(e, Add):
        return _eval_poly(e.left, pts, constants, order, nb) + _eval_poly(
            e.right, pts, constants, order, nb
        )
    if isinstance(e, Sub):
        return _eval_poly(e.left, pts, constants, order, nb) - _eval_poly(
            e.right, pts, constants, order, nb
        )
    if isinstance(e, Mul):
        return _eval_poly(e.left, pts, constants, order, nb) * _eval_poly(
            e.right, pts, constants, order, nb
        )
    if isinstance(e, Div):
        num = _eval_poly(e.left, pts, constants, order, nb)
        den = _eval_poly(e.right, pts, constants, order, nb)
        try:
            return num / den
        except DomainError as err:
            raise DomainError(err.reason, str(e)) from None
    if isinstance(e, Neg):
        return -_eval_poly(e.arg, pts, constants, order, nb)
    if isinstance(e, Pow):
        base = _eval_poly(e.base, pts, constants, order, nb)
        try:
            return base.pow_int(e.exponent)
        except DomainError as err:
            raise DomainError(err.reason, str(e)) from None
    if isinstance(e, Call):
        arg = _eval_poly(e.arg, pts, constants, order, nb)
        try:
            return TAYLOR_FUNCTIONS[e.func](arg)
        except DomainError as err:
            raise DomainError(err.reason, str(e)) from None
    raise TypeError(f"not an Expr node: {e!r}")


def eval_values(e: Expr, points, constants=None) -> np.ndarray:
    """Plain values at a batch of points, the cheap path for finite
    differences and tables."""
    return eval_poly(e, points, constants, order=0).value


def eval_value(e: Expr, point, constants=None) -> float:
    return float(eval_values(e, point, constants)[0])


def eval_jet(e: Expr, point, constants=None) -> ScalarJet2:
    """Value, gradient and Hessian of the expression at one point, exact to
    rounding through every node type."""
    p = eval_poly(e, point, constants, order=2)
    return ScalarJet2.from_poly(p)
