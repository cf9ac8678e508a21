"""Checkers for the volume comparison inequalities, the Jacobian slope bound,
mean-value radii and the annulus limits of ``-J''/J``.

Each checker returns an :class:`InequalityReport` whose margins are
``RHS - LHS`` normalised so that a single tolerance applies across scales.
The checkers are deliberately able to fail: see the negative controls in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convergence import ConvergenceReport, extrapolate_limit
from .errors import RootBracketError
from .geometry import WarpedManifold, jacobian_data, sphere_area_and_derivative
from .jacobi import JacobiSolution, shape_data, slope_on_grid
from .quadrature import annulus_neg_jpp_integral, integrate_adaptive

OMEGA3 = 4.0 * math.pi / 3.0
BG_TOL = 1e-9
SLOPE_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    inequality: str
    inputs: tuple
    lhs: float
    rhs: float


@dataclass(frozen=True)
class InequalityReport:
    name: str
    samples: int
    worst_margin: float
    violations: tuple[Violation, ...]
    tolerance: float
    max_margin: float = 0.0
    stopped_at: float | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "tolerance": self.tolerance,
            "worst_margin": self.worst_margin,
            "max_margin": self.max_margin,
            "passed": self.passed,
            "stopped_at": self.stopped_at,
            "violations": [
                {"inequality": v.inequality, "inputs": list(v.inputs), "lhs": v.lhs, "rhs": v.rhs}
                for v in self.violations
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InequalityReport":
        return cls(
            name=d["name"],
            samples=d["samples"],
            worst_margin=d["worst_margin"],
            violations=tuple(
                Violation(v["inequality"], tuple(v["inputs"]), v["lhs"], v["rhs"])
                for v in d["violations"]
            ),
            tolerance=d["tolerance"],
            max_margin=d["max_margin"],
            stopped_at=d["stopped_at"],
        )


class _Collector:
    def __init__(self, name, tol):
        self.name, self.tol = name, tol
        self.margins: list[float] = []
        self.violations: list[Violation] = []

    def add(self, inequality, inputs, lhs, rhs, margin):
        margin = float(margin)
        self.margins.append(margin)
        if not margin >= -self.tol:
            self.violations.append(Violation(inequality, tuple(float(x) for x in inputs),
                                             float(lhs), float(rhs)))

    def report(self, stopped_at=None) -> InequalityReport:
        worst = min(self.margins) if self.margins else math.inf
        best = max(self.margins) if self.margins else -math.inf
        viol = tuple(sorted(self.violations, key=lambda v: (v.inequality, v.inputs)))
        return InequalityReport(self.name, len(self.margins), worst, viol, self.tol,
                                best, stopped_at)


def _rel(lhs, rhs):
    return (rhs - lhs) / abs(rhs)


def log_spaced_pairs(lo: float = 0.1, hi: float = 1e3, n: int = 64) -> list[tuple[float, float]]:
    """``n`` deterministic (t, s) pairs with ``s >= t`` drawn from a log grid."""
    pts = np.geomspace(lo, hi, n)
    pairs = []
    for i in range(n):
        a, b = pts[i], pts[(7 * i + 23) % n]
        pairs.append((float(min(a, b)), float(max(a, b))))
    return pairs


def cumulative_volumes(m: WarpedManifold, radii, rel_tol=None, abs_tol=None) -> dict:
    """``Vol(B(r))`` for every radius, integrating only between consecutive radii."""
    rs = sorted(set(float(r) for r in radii))
    out, acc, prev = {}, [], 0.0
    f = lambda t: 4.0 * math.pi * m.profile.jet(t).v ** 2  # noqa: E731
    for r in rs:
        acc.append(integrate_adaptive(f, prev, r, rel_tol, abs_tol).value)
        out[r] = math.fsum(acc)
        prev = r
    return out


def check_bishop_gromov(m: WarpedManifold, pairs, tol: float = BG_TOL) -> InequalityReport:
    """All five volume-comparison inequalities at every ``(t, s)`` pair."""
    if not pairs:
        raise ValueError("pairs must be nonempty")
    col = _Collector("bishop_gromov", tol)
    vols = cumulative_volumes(m, [x for p in pairs for x in p])
    for t, s in pairs:
        if not s >= t > 0:
            raise ValueError(f"need s >= t > 0, got {(t, s)}")
        Jt, J1t, _ = jacobian_data(m, t)
        Js, _, _ = jacobian_data(m, s)
        ratio = (s / t) ** 2
        col.add("J(s)/J(t) <= (s/t)^2", (t, s), Js / Jt, ratio, _rel(Js / Jt, ratio))
        col.add("J'/J <= 2/t", (t, s), J1t / Jt, 2.0 / t, _rel(J1t / Jt, 2.0 / t))
        col.add("J(t) <= t^2", (t, s), Jt, t * t, _rel(Jt, t * t))
        Vt, Vs = vols[t], vols[s]
        vratio = (s / t) ** 3
        col.add("V(s)/V(t) <= (s/t)^3", (t, s), Vs / Vt, vratio, _rel(Vs / Vt, vratio))
        ball = OMEGA3 * t**3
        col.add("V(t) <= omega_3 t^3", (t, s), Vt, ball, _rel(Vt, ball))
    return col.report()


def check_bishop_gromov_directional(sol: JacobiSolution, stride: int = 1,
                                    tol: float = 1e-8) -> InequalityReport:
    """Per-direction Jacobian comparisons ``J(s)/J(t) <= (s/t)^2`` and ``J <= t^2``.

    Pairs are consecutive (strided) grid points before any conjugate point,
    plus every point paired with the last one.
    """
    col = _Collector(f"bishop_gromov_direction_{sol.direction}", tol)
    g, J = sol.grid, sol.J
    last = len(g) if sol.conjugate_point is None else int(np.searchsorted(g, sol.conjugate_point))
    idx = np.arange(0, last, stride)
    if idx.size < 2:
        return col.report(sol.conjugate_point)
    t, Jt = g[idx], J[idx]
    for k in range(len(idx)):
        col.add("J(t) <= t^2", (t[k],), Jt[k], t[k] ** 2, _rel(Jt[k], t[k] ** 2))
    pairs = [(k, k + 1) for k in range(len(idx) - 1)] + [(k, len(idx) - 1) for k in range(len(idx) - 1)]
    for i, j in pairs:
        lhs, rhs = Jt[j] / Jt[i], (t[j] / t[i]) ** 2
        col.add("J(s)/J(t) <= (s/t)^2", (t[i], t[j]), lhs, rhs, _rel(lhs, rhs))
    return col.report(sol.conjugate_point)


def check_slope_bound(source, grid=None, tol: float = SLOPE_TOL) -> InequalityReport:
    """``0 <= J'/J <= 2/t``; margins are multiplied by ``t`` so they are dimensionless.

    ``source`` is a :class:`WarpedManifold` (closed forms on ``grid``) or a
    :class:`JacobiSolution` (its own grid when ``grid`` is None, otherwise
    Hermite-interpolated). Points at or past a conjugate point are dropped and
    the report records where it stopped.
    """
    col = _Collector("slope_bound", tol)
    stopped = None
    if isinstance(source, JacobiSolution):
        stopped = source.conjugate_point
        if grid is None:
            ts, slope = slope_on_grid(source)
        else:
            ts = np.array([t for t in grid if stopped is None or t < stopped])
            slope = np.array([shape_data(source, float(t)).JoverJ for t in ts])
    else:
        if grid is None:
            raise ValueError("a grid is required for manifolds")
        ts = np.asarray(grid, dtype=float)
        J, J1, _ = jacobian_data(source, ts)
        slope = J1 / J
    for t, q in zip(ts, slope):
        col.add("J'/J >= 0", (t,), 0.0, q, q * t)
        col.add("J'/J <= 2/t", (t,), q, 2.0 / t, (2.0 / t - q) * t)
    return col.report(stopped)


@dataclass(frozen=True)
class MeanValueRadii:
    s: float
    eps: float
    b_s: float
    c_s: float
    slope_b: float
    slope_c: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


SCAN_POINTS = 64


def _area_slope(m, x):
    return sphere_area_and_derivative(m, x)[1]


def _smallest_root(m, lo, hi, target, s):
    """Smallest x in (lo, hi) with A'(x) = target: 64-point scan, then bisection."""
    xs = np.linspace(lo, hi, SCAN_POINTS)
    gs = _area_slope(m, xs) - target
    tol = 1e-9 * (1.0 + abs(target))
    for i in range(SCAN_POINTS - 1):
        if gs[i] == 0.0 and i > 0:
            return float(xs[i])
        if gs[i] * gs[i + 1] < 0:
            a, b, ga = float(xs[i]), float(xs[i + 1]), float(gs[i])
            while b - a > 1e-12 * s:
                mid = 0.5 * (a + b)
                gm = float(_area_slope(m, mid)) - target
                if gm == 0.0:
                    return mid
                if (gm < 0) == (ga < 0):
                    a, ga = mid, gm
                else:
                    b = mid
            return 0.5 * (a + b)
    # A' flat to rounding across the bracket: any interior point satisfies the
    # residual contract; take the smallest one that does.
    interior = np.abs(gs[1:-1]) <= tol
    if np.any(interior):
        return float(xs[1:-1][np.argmax(interior)])
    raise RootBracketError(
        f"no sign change of A'(x) - {target!r} on ({lo:g}, {hi:g})",
        list(zip(xs.tolist(), gs.tolist())),
    )


def mean_value_radii(m: WarpedManifold, s: float, eps: float) -> MeanValueRadii:
    """Radii ``b_s``, ``c_s`` where ``A'`` equals the difference quotients of
    ``A`` over ``[(1-eps)s, s]`` and ``[s, (1+eps)s]``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not s > 0 or (1 + eps) * s > m.t_max:
        raise ValueError(f"need (1+eps)*s <= t_max = {m.t_max:g}")
    lo, hi = (1 - eps) * s, (1 + eps) * s
    A_lo = sphere_area_and_derivative(m, lo)[0]
    A_s = sphere_area_and_derivative(m, s)[0]
    A_hi = sphere_area_and_derivative(m, hi)[0]
    slope_b = (A_s - A_lo) / (eps * s)
    slope_c = (A_hi - A_s) / (eps * s)
    b = _smallest_root(m, lo, s, slope_b, s)
    c = _smallest_root(m, s, hi, slope_c, s)
    return MeanValueRadii(float(s), float(eps), b, c, float(slope_b), float(slope_c))


@dataclass(frozen=True)
class AnnulusLimits:
    upper: ConvergenceReport
    lower: ConvergenceReport
    radii: tuple[MeanValueRadii, ...]

    def __iter__(self):
        return iter((self.upper, self.lower))


def annulus_limits(m: WarpedManifold, a: float, eps: float, s_sequence) -> AnnulusLimits:
    """Sequences ``(1/s) int_{A(a, c_s)} -J''/J`` (upper) and the same over
    ``A(a, b_s)`` (lower), each with an extrapolated limit.

    Every term goes through the dual-path annulus integral, so a J'' fault
    raises :class:`~warplab.errors.DualPathError`.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    seq = [float(s) for s in s_sequence]
    if any(b <= x for x, b in zip(seq, seq[1:])):
        raise ValueError("s_sequence must be increasing")
    if (1 + eps) * seq[-1] > m.t_max:
        raise ValueError("(1+eps)*max(s) exceeds t_max")
    up, low, radii = [], [], []
    for s in seq:
        mv = mean_value_radii(m, s, eps)
        if not mv.b_s > a:
            raise ValueError(f"b_s={mv.b_s:g} does not exceed a={a:g}; start the sequence later")
        radii.append(mv)
        up.append((s, annulus_neg_jpp_integral(m, a, mv.c_s) / s))
        low.append((s, annulus_neg_jpp_integral(m, a, mv.b_s) / s))
    return AnnulusLimits(extrapolate_limit(up), extrapolate_limit(low), tuple(radii))
