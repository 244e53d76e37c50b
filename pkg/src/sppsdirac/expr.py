"""Coefficient expressions in ``x``.

Grammar (``^`` binds tightest and is right-associative, then unary minus,
then ``* /``, then ``+ -``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'pi' | 'i' | 'x' | FUNC '(' expr ')' | '(' expr ')'

Evaluation keeps every subexpression as ``x**e * s(x)`` with ``s`` finite at
the origin, so ``-1/x`` is stored as exponent ``-1`` and smooth part ``-1``.
"""
from __future__ import annotations

import difflib
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .numerics import GridFn, Mesh

__all__ = ["ExprError", "CoefficientExpr", "parse_coeff_expr"]

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
CONSTANTS = {"pi": np.pi, "i": 1j}
NAMES = sorted([*FUNCTIONS, *CONSTANTS, "x"])


class ExprError(ValueError):
    """Syntax or name error; ``pos`` is the byte offset into the UTF-8 source."""

    def __init__(self, msg: str, pos: int, src: str = ""):
        pos = len(src[:pos].encode())
        super().__init__(f"{msg} at offset {pos}" + (f": {src!r}" if src else ""))
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


def _tokens(src: str):
    pos = 0
    out = []
    while src[pos:].strip():
        m = _TOKEN.match(src, pos)
        num, name, op = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            out.append(("num", num, start))
        elif name is not None:
            out.append(("name", name, start))
        else:
            if op not in "+-*/^()":
                raise ExprError(f"unexpected character {op!r}", start, src)
            out.append(("op", op, start))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


# expression tree nodes are plain tuples: ("num", value), ("x",), ("neg", a),
# ("bin", op, a, b), ("call", name, a)
Node = tuple


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokens(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op: str):
        t = self.take()
        if t[1] != op or t[0] != "op":
            what = "end of input" if t[0] == "end" else repr(t[1])
            raise ExprError(f"expected {op!r}, found {what}", t[2], self.src)

    def parse(self) -> Node:
        node = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ExprError(f"unexpected {t[1]!r}", t[2], self.src)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = ("bin", op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = ("bin", op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return ("bin", "^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return ("num", float(text))
        if kind == "name":
            if text == "x":
                return ("x",)
            if text in CONSTANTS:
                return ("num", CONSTANTS[text])
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", text, arg)
            near = difflib.get_close_matches(text, NAMES, n=3)
            hint = f"; did you mean {', '.join(near)}?" if near else f"; known names: {', '.join(NAMES)}"
            raise ExprError(f"unknown identifier {text!r}{hint}", pos, self.src)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprError(f"unexpected {what}", pos, self.src)


def _const(node: Node) -> Union[complex, None]:
    """Value of a subtree that does not involve ``x``."""
    k = node[0]
    if k == "num":
        return node[1]
    if k == "x":
        return None
    if k == "neg":
        v = _const(node[1])
        return None if v is None else -v
    if k == "call":
        v = _const(node[2])
        return None if v is None else FUNCTIONS[node[1]](v)
    a, b = _const(node[2]), _const(node[3])
    if a is None or b is None:
        return None
    op = node[1]
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return a ** b


def _exponent_of(p) -> Fraction:
    if isinstance(p, complex) and p.imag != 0:
        raise ValueError("complex powers of x are not supported")
    p = float(np.real(p))
    fr = Fraction(p).limit_denominator(1000)
    if abs(float(fr) - p) > 1e-12:
        raise ValueError(f"power {p} of x is not a simple fraction")
    return fr


def _lift(x: np.ndarray, e: Fraction, s: np.ndarray, to: Fraction) -> np.ndarray:
    """Rewrite ``x**e s`` with the lower exponent ``to``."""
    d = e - to
    if d == 0:
        return s
    return s * x ** float(d)


def _analyse(node: Node, x: np.ndarray):
    """``(e, s)`` with ``value = x**e * s`` and ``s`` finite wherever defined."""
    k = node[0]
    if k == "num":
        return Fraction(0), np.full(x.shape, node[1], dtype=complex)
    if k == "x":
        return Fraction(1), np.ones(x.shape, dtype=complex)
    if k == "neg":
        e, s = _analyse(node[1], x)
        return e, -s
    if k == "call":
        e, s = _analyse(node[2], x)
        if e < 0:
            raise ValueError(f"{node[1]} of an expression singular at x = 0")
        arg = _lift(x, e, s, Fraction(0))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = FUNCTIONS[node[1]](arg + 0j if node[1] in ("log", "sqrt") else arg)
        return Fraction(0), np.asarray(val, dtype=complex)
    op = node[1]
    if op in "+-":
        ea, sa = _analyse(node[2], x)
        eb, sb = _analyse(node[3], x)
        m = min(ea, eb)
        a = _lift(x, ea, sa, m)
        b = _lift(x, eb, sb, m)
        return m, (a + b if op == "+" else a - b)
    if op == "*":
        ea, sa = _analyse(node[2], x)
        eb, sb = _analyse(node[3], x)
        return ea + eb, sa * sb
    if op == "/":
        ea, sa = _analyse(node[2], x)
        eb, sb = _analyse(node[3], x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return ea - eb, sa / sb
    # power
    p = _const(node[3])
    ea, sa = _analyse(node[2], x)
    if p is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            if ea == 0:
                return Fraction(0), sa ** p
            try:
                return ea * _exponent_of(p), sa ** p
            except ValueError:
                if ea > 0 and np.real(p) > 0:
                    return Fraction(0), _lift(x, ea, sa, Fraction(0)) ** p
                raise
    eb, sb = _analyse(node[3], x)
    if ea < 0 or eb < 0:
        raise ValueError("non-constant power of an expression singular at x = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        return Fraction(0), _lift(x, ea, sa, Fraction(0)) ** _lift(x, eb, sb, Fraction(0))


@dataclass(frozen=True)
class CoefficientExpr:
    source: str
    tree: Node

    @property
    def exponent(self) -> Fraction:
        """Leading power of ``x`` when negative (the coefficient is singular), else 0."""
        e, _ = _analyse(self.tree, np.array([0.5]))
        return min(e, Fraction(0))

    @property
    def is_constant(self) -> bool:
        return _const(self.tree) is not None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e, s = _analyse(self.tree, np.atleast_1d(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            v = s * np.atleast_1d(x) ** float(e) if e != 0 else s
        return v.reshape(x.shape) if x.ndim else v[0]

    def to_gridfn(self, mesh: Mesh) -> GridFn:
        """Sample on ``mesh``; singular coefficients keep their exponent."""
        e, s = _analyse(self.tree, mesh.x)
        if e >= 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                s = _lift(mesh.x, e, s, Fraction(0))
            e = Fraction(0)
        bad = ~np.isfinite(s)
        if np.any(bad):
            j = int(np.argmax(bad))
            raise ValueError(
                f"coefficient {self.source!r} is not finite at x = {mesh.x[j]:g}"
                + ("; write the singular factor as an explicit power of x" if j == 0 else "")
            )
        return GridFn(mesh, s, e)


def parse_coeff_expr(src: str) -> CoefficientExpr:
    """Parse ``src``; raises :class:`ExprError` with the offending offset."""
    if not isinstance(src, str):
        src = repr(src)
    tree = _Parser(src).parse()
    return CoefficientExpr(src, tree)
