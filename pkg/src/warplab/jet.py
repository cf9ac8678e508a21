"""Second-order forward-mode differentiation of profile expressions.

A :class:`Jet2` carries ``(f, f', f'')`` through the expression tree. The
components may be Python floats or numpy arrays of equal shape, so a whole
quadrature panel is evaluated in one tree walk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .dsl import Binary, Const, Node, Pow, Unary, Var
from .errors import DomainError


@dataclass(frozen=True)
class Jet2:
    v: Any
    d1: Any
    d2: Any

    def __add__(self, o: "Jet2") -> "Jet2":
        return Jet2(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    def __sub__(self, o: "Jet2") -> "Jet2":
        return Jet2(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.v, -self.d1, -self.d2)

    def __mul__(self, o: "Jet2") -> "Jet2":
        return Jet2(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )

    def __truediv__(self, o: "Jet2") -> "Jet2":
        if np.any(o.v == 0):
            raise DomainError("division by zero")
        q = self.v / o.v
        q1 = (self.d1 - q * o.d1) / o.v
        q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.v
        return Jet2(q, q1, q2)

    def chain(self, f, f1, f2) -> "Jet2":
        """Compose with a scalar function given its value and derivatives at ``self.v``."""
        return Jet2(f, f1 * self.d1, f1 * self.d2 + f2 * self.d1 * self.d1)

    def pow(self, p: float) -> "Jet2":
        if p == 0.0:
            return Jet2(self.v * 0.0 + 1.0, self.v * 0.0, self.v * 0.0)
        if p == 1.0:
            return self
        integral = float(p).is_integer()
        if not integral and np.any(self.v < 0):
            raise DomainError(f"non-integer power {p} of a negative value")
        if np.any(self.v == 0) and (p < 0 or (not integral and p < 2)):
            raise DomainError(f"power {p} is singular at zero")
        v = self.v
        f = v**p
        f1 = p * v ** (p - 1.0)
        f2 = p * (p - 1.0) * v ** (p - 2.0)
        return self.chain(f, f1, f2)


def _unary(op: str, a: Jet2) -> Jet2:
    x = a.v
    if op == "neg":
        return -a
    if op == "exp":
        e = np.exp(x)
        return a.chain(e, e, e)
    if op == "log":
        if np.any(x <= 0):
            raise DomainError("log of a nonpositive value")
        return a.chain(np.log(x), 1.0 / x, -1.0 / (x * x))
    if op == "sqrt":
        if np.any(x <= 0):
            # sqrt(0) has an infinite derivative; the jet is undefined there.
            raise DomainError("sqrt of a nonpositive value")
        s = np.sqrt(x)
        return a.chain(s, 0.5 / s, -0.25 / (s * x))
    if op == "sin":
        s, c = np.sin(x), np.cos(x)
        return a.chain(s, c, -s)
    if op == "cos":
        s, c = np.sin(x), np.cos(x)
        return a.chain(c, -s, -c)
    if op == "tanh":
        th = np.tanh(x)
        # 1/cosh^2 keeps full relative precision where 1 - tanh^2 would cancel.
        sech2 = 1.0 / np.cosh(x) ** 2
        return a.chain(th, sech2, -2.0 * th * sech2)
    if op == "atan":
        q = 1.0 / (1.0 + x * x)
        return a.chain(np.arctan(x), q, -2.0 * x * q * q)
    raise ValueError(f"unknown unary op {op!r}")


def _walk(node: Node, t) -> Jet2:
    if isinstance(node, Var):
        return Jet2(t, t * 0.0 + 1.0, t * 0.0)
    if isinstance(node, Const):
        zero = t * 0.0
        return Jet2(zero + node.value, zero, zero)
    if isinstance(node, Unary):
        return _unary(node.op, _walk(node.arg, t))
    if isinstance(node, Binary):
        left, right = _walk(node.left, t), _walk(node.right, t)
        if node.op == "add":
            return left + right
        if node.op == "sub":
            return left - right
        if node.op == "mul":
            return left * right
        return left / right
    if isinstance(node, Pow):
        return _walk(node.base, t).pow(node.exponent)
    raise TypeError(f"not an expression node: {node!r}")


def eval_jet2(expr: Node, t) -> Jet2:
    """Value, first and second t-derivative of ``expr`` at ``t`` (scalar or array).

    Raises DomainError if any point leaves the real domain or the result is not
    finite.
    """
    scalar = np.ndim(t) == 0
    tt = float(t) if scalar else np.asarray(t, dtype=float)
    with np.errstate(all="ignore"):
        jet = _walk(expr, tt)
    for comp in (jet.v, jet.d1, jet.d2):
        if not np.all(np.isfinite(comp)):
            raise DomainError("expression is not finite on the requested points")
    if scalar:
        return Jet2(float(jet.v), float(jet.d1), float(jet.d2))
    shape = np.shape(tt)
    return Jet2(*(np.broadcast_to(c, shape).astype(float) for c in (jet.v, jet.d1, jet.d2)))
