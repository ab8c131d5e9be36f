"""Minimal arithmetic expression grammar for self-contained text configs.

    expr   := term { ("+" | "-") term }
    term   := unary { ("*" | "/") unary }
    unary  := "-" unary | power
    power  := atom [ "^" unary ]
    atom   := NUMBER | VAR | FUNC "(" expr { "," expr } ")" | "(" expr ")"
    VAR    := "x1" | "x2" | ... | "xn"
    FUNC   := "abs" | "min" | "max"

Numbers are floats; evaluation is vectorized over numpy arrays so
boundary expressions apply to whole grids at once.
"""

from __future__ import annotations

import re
from typing import Callable, Sequence

import numpy as np

from .errors import ParseError

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_FUNCS = {
    "abs": lambda args: np.abs(args[0]),
    "min": lambda args: np.minimum.reduce(args),
    "max": lambda args: np.maximum.reduce(args),
}


def _tokenize(text: str) -> list:
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"bad character at {text[pos:pos + 8]!r}")
        if m.lastgroup == "num":
            out.append(("num", float(m.group("num"))))
        elif m.lastgroup == "name":
            out.append(("name", m.group("name")))
        else:
            out.append(("op", m.group("op")))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        k, v = self.toks[self.i]
        if kind is not None and k != kind:
            raise ParseError(f"expected {kind}, got {k} {v!r}")
        if value is not None and v != value:
            raise ParseError(f"expected {value!r}, got {v!r}")
        self.i += 1
        return v

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take("op")
            rhs = self.term()
            node = ("bin", op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take("op")
            rhs = self.unary()
            node = ("bin", op, node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take("op")
            return ("neg", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take("op")
            return ("bin", "^", base, self.unary())
        return base

    def atom(self):
        k, v = self.peek()
        if k == "num":
            self.take()
            return ("num", v)
        if k == "name":
            self.take()
            if self.peek() == ("op", "("):
                if v not in _FUNCS:
                    raise ParseError(f"unknown function {v!r}")
                self.take("op", "(")
                args = [self.expr()]
                while self.peek() == ("op", ","):
                    self.take("op", ",")
                    args.append(self.expr())
                self.take("op", ")")
                return ("call", v, args)
            if not re.fullmatch(r"x[1-9]\d*", v):
                raise ParseError(f"unknown identifier {v!r} (variables are x1..xn)")
            return ("var", int(v[1:]) - 1)
        if (k, v) == ("op", "("):
            self.take("op", "(")
            node = self.expr()
            self.take("op", ")")
            return node
        raise ParseError(f"unexpected token {v!r}")


def _eval(node, coords):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        idx = node[1]
        if idx >= len(coords):
            raise ParseError(f"variable x{idx + 1} beyond dimension {len(coords)}")
        return coords[idx]
    if kind == "neg":
        return -_eval(node[1], coords)
    if kind == "call":
        return _FUNCS[node[1]]([_eval(a, coords) for a in node[2]])
    _, op, a, b = node
    va, vb = _eval(a, coords), _eval(b, coords)
    if op == "+":
        return va + vb
    if op == "-":
        return va - vb
    if op == "*":
        return va * vb
    if op == "/":
        return va / vb
    return np.power(va, vb)


def compile_expression(text: str) -> Callable:
    """Compile an expression into f(coords) over per-axis arrays or scalars."""
    parser = _Parser(_tokenize(text))
    tree = parser.expr()
    if parser.peek()[0] != "end":
        raise ParseError(f"trailing input after expression: {text!r}")

    def f(coords: Sequence):
        return _eval(tree, list(coords))

    return f
