"""Radial profiles: validated warping functions for pole manifolds.

A profile ``phi`` defines the metric ``dr^2 + phi(r)^2 * g_round`` on R^3.
Validation is grid based: it samples the pole conditions, positivity and the
two inequalities ``-phi'' >= 0`` and ``phi*phi'' <= 1 - phi'^2`` which are
exactly the nonnegativity of the radial and tangential Ricci eigenvalues.
It does not prove anything between grid points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .dsl import Binary, Const, Node, Unary, Var, parse_profile, unparse
from .errors import DomainError, ProfileError
from .jet import Jet2, eval_jet2

POLE_PROBE = 1e-8
POLE_TOL = 1e-6
SIGN_TOL = 1e-10
DEFAULT_T_MAX = 1e4
DEFAULT_GRID = 512


@dataclass(frozen=True)
class Failure:
    condition: str
    t: float
    value: float


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    failures: tuple[Failure, ...]
    grid: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failures": [
                {"condition": f.condition, "t": f.t, "value": f.value} for f in self.failures
            ],
            "grid_size": len(self.grid),
            "t_min": self.grid[0] if self.grid else None,
            "t_max": self.grid[-1] if self.grid else None,
        }


@dataclass(frozen=True)
class RadialProfile:
    expr: Node
    t_max: float
    validation: ValidationReport
    source: str = ""
    name: str = ""

    def jet(self, t) -> Jet2:
        return eval_jet2(self.expr, t)

    def __call__(self, t):
        return self.jet(t).v

    @property
    def label(self) -> str:
        return self.name or self.source or unparse(self.expr)

    @classmethod
    def from_source(cls, src: str, t_max: float = DEFAULT_T_MAX,
                    grid_size: int = DEFAULT_GRID, name: str = "") -> "RadialProfile":
        expr = parse_profile(src)
        report = validate_pole_profile(expr, t_max, grid_size)
        return cls(expr, float(t_max), report, source=src, name=name)


def validation_grid(t_max: float, grid_size: int) -> np.ndarray:
    lo = min(1e-3, t_max / grid_size)
    return np.geomspace(lo, t_max, grid_size)


def validate_pole_profile(expr: Node, t_max: float, grid_size: int = DEFAULT_GRID) -> ValidationReport:
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")

    failures: list[Failure] = []
    try:
        pole = eval_jet2(expr, POLE_PROBE)
        if abs(pole.v) > POLE_TOL:
            failures.append(Failure("phi(0) = 0", 0.0, pole.v))
        if abs(pole.d1 - 1.0) > POLE_TOL:
            failures.append(Failure("phi'(0) = 1", 0.0, pole.d1))
    except DomainError as exc:
        failures.append(Failure(f"domain: {exc}", 0.0, math.nan))

    grid = validation_grid(t_max, grid_size)
    for t in grid:
        t = float(t)
        try:
            j = eval_jet2(expr, t)
        except DomainError as exc:
            failures.append(Failure(f"domain: {exc}", t, math.nan))
            continue
        phi, d1, d2 = j.v, j.d1, j.d2
        if not phi > 0:
            failures.append(Failure("phi > 0", t, phi))
        if -d2 < -SIGN_TOL * (1.0 + abs(d2)):
            failures.append(Failure("-phi'' >= 0", t, -d2))
        lhs, rhs = phi * d2, 1.0 - d1 * d1
        if lhs > rhs + SIGN_TOL * (1.0 + abs(lhs) + 1.0 + d1 * d1):
            failures.append(Failure("phi*phi'' <= 1 - phi'^2", t, lhs - rhs))

    return ValidationReport(not failures, tuple(failures), tuple(float(t) for t in grid))


def _cone_tanh(alpha: float) -> Node:
    return Binary(
        "add",
        Binary("mul", Const(float(alpha)), Var()),
        Binary("mul", Const(float(1.0 - alpha)), Unary("tanh", Var())),
    )


BUILTINS = ("euclidean", "cone_tanh", "cylinderizing", "paraboloidal")


def builtin_expr(name: str, params=()) -> Node:
    params = [float(p) for p in params]
    if name == "euclidean":
        _expect_params(name, params, 0)
        return Var()
    if name == "cone_tanh":
        _expect_params(name, params, 1)
        alpha = params[0]
        if not 0.0 <= alpha <= 1.0:
            raise ProfileError(f"cone_tanh parameter must lie in [0, 1], got {alpha}")
        return _cone_tanh(alpha)
    if name == "cylinderizing":
        _expect_params(name, params, 0)
        return _cone_tanh(0.0)
    if name == "paraboloidal":
        _expect_params(name, params, 0)
        return Unary("log", Binary("add", Const(1.0), Var()))
    raise ProfileError(f"unknown builtin profile {name!r}; choose from {', '.join(BUILTINS)}")


def _expect_params(name, params, n):
    if len(params) != n:
        raise ProfileError(f"{name} takes {n} parameter(s), got {len(params)}")


def builtin_profile(name: str, params=(), t_max: float = DEFAULT_T_MAX,
                    grid_size: int = DEFAULT_GRID) -> RadialProfile:
    """Validated builtin profile. ``cone_tanh(a)`` is ``a*t + (1-a)*tanh(t)``."""
    expr = builtin_expr(name, params)
    report = validate_pole_profile(expr, t_max, grid_size)
    label = name if not params else f"{name}[{','.join(repr(float(p)) for p in params)}]"
    return RadialProfile(expr, float(t_max), report, source=unparse(expr), name=label)


_SPEC = re.compile(r"^builtin:([a-z_]+)(?:\[([^\]]*)\])?$")


def profile_from_spec(spec: str, t_max: float = DEFAULT_T_MAX,
                      grid_size: int = DEFAULT_GRID) -> RadialProfile:
    """Accept either ``builtin:name[p1,p2]`` or raw profile source."""
    spec = spec.strip()
    m = _SPEC.match(spec)
    if m:
        params = [p for p in (m.group(2) or "").split(",") if p.strip()]
        try:
            values = [float(p) for p in params]
        except ValueError as exc:
            raise ProfileError(f"bad builtin parameters in {spec!r}") from exc
        return builtin_profile(m.group(1), values, t_max, grid_size)
    if spec.startswith("builtin:"):
        raise ProfileError(f"malformed builtin spec {spec!r}")
    return RadialProfile.from_source(spec, t_max, grid_size)


def builtin_suite(t_max: float = DEFAULT_T_MAX) -> list[RadialProfile]:
    """The builtin family used by the verification suites."""
    return [
        builtin_profile("euclidean", t_max=t_max),
        builtin_profile("cone_tanh", [0.5], t_max=t_max),
        builtin_profile("cylinderizing", t_max=t_max),
        builtin_profile("paraboloidal", t_max=t_max),
    ]
