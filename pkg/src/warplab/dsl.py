"""Profile expression language: AST, recursive-descent parser and unparser.

Grammar (whitespace insignificant)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | base ("^" ["-"] number)?
    base   := number | "t" | func "(" expr ")" | "(" expr ")"
    func   := exp | log | sqrt | sin | cos | tanh | atan

A leading minus directly in front of a number literal (and not followed by
``^``) folds into a negative constant; everywhere else it builds a ``neg`` node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import NonConstantExponentError, ParseError, UnknownIdentifierError

UNARY_FUNCS = ("exp", "log", "sqrt", "sin", "cos", "tanh", "atan")
BINARY_OPS = ("add", "sub", "mul", "div")
_OP_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
_SYMBOL_OP = {v: k for k, v in _OP_SYMBOL.items()}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCS
    arg: "Node"

    def __post_init__(self):
        if self.op != "neg" and self.op not in UNARY_FUNCS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


Node = Union[Const, Var, Unary, Binary, Pow]


_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind, text, offset):
        self.kind = kind  # "num", "ident", "op", "end"
        self.text = text
        self.offset = offset


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    # Offsets are reported in bytes of the UTF-8 source.
    pos = 0
    while pos < len(src):
        ch = src[pos]
        if ch.isspace():
            pos += 1
            continue
        off = len(src[:pos].encode("utf-8"))
        m = _NUMBER.match(src, pos)
        if m:
            tokens.append(_Token("num", m.group(), off))
            pos = m.end()
            continue
        m = _IDENT.match(src, pos)
        if m:
            tokens.append(_Token("ident", m.group(), off))
            pos = m.end()
            continue
        if ch in "+-*/^()":
            tokens.append(_Token("op", ch, off))
            pos += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", off)
    tokens.append(_Token("end", "", len(src.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _peek(self, k=1) -> _Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def _expect(self, text: str) -> None:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return
        found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
        raise ParseError(f"expected {text!r}, found {found}", self.tok.offset)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = _SYMBOL_OP[self.tok.text]
            self.i += 1
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = _SYMBOL_OP[self.tok.text]
            self.i += 1
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            nxt, after = self._peek(1), self._peek(2)
            if nxt.kind == "num" and not (after.kind == "op" and after.text == "^"):
                self.i += 2
                return Const(-float(nxt.text))
            self.i += 1
            return Unary("neg", self.factor())
        node = self.base()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            sign = 1.0
            if self.tok.kind == "op" and self.tok.text == "-":
                sign = -1.0
                self.i += 1
            if self.tok.kind != "num":
                if self.tok.kind == "end":
                    raise ParseError("expected exponent, found end of input", self.tok.offset)
                raise NonConstantExponentError(
                    "exponent must be a numeric literal", self.tok.offset
                )
            node = Pow(node, sign * float(self.tok.text))
            self.i += 1
        return node

    def base(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "ident":
            if tok.text == "t":
                self.i += 1
                return Var()
            if tok.text in UNARY_FUNCS:
                self.i += 1
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Unary(tok.text, arg)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.expr()
            self._expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(f"expected operand, found {found}", tok.offset)


def parse_profile(src: str) -> Node:
    """Parse profile source into an expression tree.

    >>> parse_profile("t")
    Var()
    """
    if not src or not src.strip():
        raise ParseError("empty profile source", 0)
    return _Parser(src).parse()


def unparse(node: Node) -> str:
    """Fully parenthesised source that parses back to an identical tree."""
    if isinstance(node, Const):
        text = repr(float(node.value))
        return f"(-{text[1:]})" if text.startswith("-") else text
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-({unparse(node.arg)}))"
        return f"{node.op}({unparse(node.arg)})"
    if isinstance(node, Binary):
        return f"({unparse(node.left)} {_OP_SYMBOL[node.op]} {unparse(node.right)})"
    if isinstance(node, Pow):
        return f"({unparse(node.base)})^{float(node.exponent)!r}"
    raise TypeError(f"not an expression node: {node!r}")
