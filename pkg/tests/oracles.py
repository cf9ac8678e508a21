"""Independent high-precision evaluation of profile ASTs and a random
expression generator, shared by the jet tests and the acceptance suite."""

import random

import mpmath as mp

from warplab.dsl import UNARY_FUNCS, Binary, Const, Pow, Unary, Var

_MP = {
    "exp": mp.exp, "log": mp.log, "sqrt": mp.sqrt, "sin": mp.sin,
    "cos": mp.cos, "tanh": mp.tanh, "atan": mp.atan,
}


def mp_eval(node, t):
    if isinstance(node, Const):
        return mp.mpf(node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Unary):
        x = mp_eval(node.arg, t)
        if node.op == "neg":
            return -x
        if node.op in ("log", "sqrt") and x <= 0:
            raise ValueError("domain")
        return _MP[node.op](x)
    if isinstance(node, Binary):
        a, b = mp_eval(node.left, t), mp_eval(node.right, t)
        if node.op == "add":
            return a + b
        if node.op == "sub":
            return a - b
        if node.op == "mul":
            return a * b
        if b == 0:
            raise ValueError("domain")
        return a / b
    if isinstance(node, Pow):
        b = mp_eval(node.base, t)
        if b <= 0 and node.exponent != int(node.exponent):
            raise ValueError("domain")
        if b == 0 and node.exponent < 0:
            raise ValueError("domain")
        return b ** mp.mpf(node.exponent)
    raise TypeError(node)


def mp_jet(node, t, h="1e-5", dps=40):
    """Central differences with step ``h`` evaluated in ``dps``-digit arithmetic,
    so only the O(h^2) truncation error remains."""
    with mp.workdps(dps):
        t, h = mp.mpf(t), mp.mpf(h)
        fm, f0, fp = mp_eval(node, t - h), mp_eval(node, t), mp_eval(node, t + h)
        return float(f0), float((fp - fm) / (2 * h)), float((fp - 2 * f0 + fm) / (h * h))


def random_expr(rng: random.Random, depth: int = 6):
    """Random tree of depth at most ``depth`` covering every node kind."""
    if depth <= 1 or rng.random() < 0.2:
        return Var() if rng.random() < 0.6 else Const(round(rng.uniform(-2, 2), 3))
    kind = rng.random()
    if kind < 0.35:
        op = rng.choice(("neg",) + UNARY_FUNCS)
        return Unary(op, random_expr(rng, depth - 1))
    if kind < 0.85:
        op = rng.choice(("add", "sub", "mul", "div"))
        return Binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    p = rng.choice((2.0, 3.0, -1.0, 0.5, 1.5, -0.5))
    return Pow(random_expr(rng, depth - 1), p)
