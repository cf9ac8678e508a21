"""End-to-end experiments on warped products with a pole and Rc >= 0.

Each experiment samples a quantity at increasing radii, extrapolates its
limit with :func:`extrapolate_limit` and compares against the value the
asymptotic volume ratio predicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convergence import ConvergenceReport, extrapolate_limit
from .errors import DualPathError
from .geometry import WarpedManifold, point_curvatures, sphere_area_and_derivative
from .quadrature import (
    annulus_ric_minus_jpp_integral,
    ball_radial_ricci_integral,
    ball_scalar_integral,
    integrate_adaptive,
)

OMEGA3 = 4.0 * math.pi / 3.0
EIGHT_PI = 8.0 * math.pi
REL_VERDICT = 0.01
ABS_VERDICT = 0.02
RADIAL_RICCI_TOL = 0.02
DECOMPOSITION_TOL = 1e-8
TOL_R = 1e-12
FLAT_R = 1e-10
FLAT_PHI = 1e-8


def default_r_sequence(base: float = 10.0, factor: float = 2.0, count: int = 8) -> list[float]:
    return [base * factor**k for k in range(count)]


def _check_sequence(m: WarpedManifold, rs) -> list[float]:
    rs = [float(r) for r in rs]
    if len(rs) < 4:
        raise ValueError("need at least 4 radii")
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise ValueError("radii must be strictly increasing")
    if rs[-1] > m.t_max:
        raise ValueError(f"largest radius {rs[-1]:g} exceeds t_max {m.t_max:g}")
    return rs


def verdict(limit: float, predicted: float, rel: float = REL_VERDICT,
            abs_: float = ABS_VERDICT) -> bool:
    return abs(limit - predicted) <= max(rel * abs(predicted), abs_)


@dataclass(frozen=True)
class AvrEstimate:
    area: ConvergenceReport
    volume: ConvergenceReport

    @property
    def limit(self) -> float:
        return self.area.limit


def _cumulative(f, rs):
    acc, out, prev = [], [], 0.0
    for r in rs:
        acc.append(integrate_adaptive(f, prev, r).value)
        out.append(math.fsum(acc))
        prev = r
    return out


def estimate_avr(m: WarpedManifold, r_sequence) -> AvrEstimate:
    """Asymptotic volume ratio two ways: ``A(r)/(4 pi r^2)`` and ``Vol(B(r))/(omega_3 r^3)``.

    Raises DualPathError if the two extrapolated limits differ by more than
    their combined error estimates.
    """
    rs = _check_sequence(m, r_sequence)
    area = [sphere_area_and_derivative(m, r)[0] / (4.0 * math.pi * r * r) for r in rs]
    vols = _cumulative(lambda t: 4.0 * math.pi * m.profile.jet(t).v ** 2, rs)
    vol = [v / (OMEGA3 * r**3) for v, r in zip(vols, rs)]
    a_rep = extrapolate_limit(zip(rs, area))
    v_rep = extrapolate_limit(zip(rs, vol))
    slack = a_rep.error_estimate + v_rep.error_estimate + 1e-12
    if abs(a_rep.limit - v_rep.limit) > slack:
        raise DualPathError(
            f"AVR estimates disagree: sphere-area {a_rep.limit!r} vs volume {v_rep.limit!r} "
            f"(allowed {slack!r})"
        )
    return AvrEstimate(a_rep, v_rep)


@dataclass(frozen=True)
class TheoremResult:
    name: str
    report: ConvergenceReport
    predicted: float
    verdict: bool
    details: dict

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "limit": self.report.limit,
            "predicted": self.predicted,
            "error_estimate": self.report.error_estimate,
            "verdict": self.verdict,
            "convergence": self.report.to_dict(),
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TheoremResult":
        return cls(d["name"], ConvergenceReport.from_dict(d["convergence"]), d["predicted"],
                   d["verdict"], d["details"])

    def __iter__(self):
        return iter((self.report, self.predicted, self.verdict))


def decomposition_residuals(m: WarpedManifold, rs, a: float = 1.0) -> list[float]:
    """Relative gap between ``int_{B(r)} R`` and
    ``8 pi (r - a) + int_{A(a,r)} (Rc(d_r) - J''/J) + int_{B(a)} R``."""
    inner = ball_scalar_integral(m, a)
    out = []
    for r in rs:
        total = ball_scalar_integral(m, r)
        parts = EIGHT_PI * (r - a) + annulus_ric_minus_jpp_integral(m, a, r) + inner
        out.append(abs(total - parts) / max(1.0, abs(total)))
    return out


def main_theorem_experiment(m: WarpedManifold, r_sequence, a: float = 1.0,
                            avr: AvrEstimate | None = None) -> TheoremResult:
    """``(1/r) int_{B(r)} R`` against ``8 pi (1 - V)``."""
    rs = _check_sequence(m, r_sequence)
    avr = avr or estimate_avr(m, rs)
    report = extrapolate_limit((r, ball_scalar_integral(m, r) / r) for r in rs)
    predicted = EIGHT_PI * (1.0 - avr.limit)
    resid = decomposition_residuals(m, [r for r in rs if r > a], a)
    worst = max(resid) if resid else 0.0
    if worst > DECOMPOSITION_TOL:
        raise DualPathError(f"scalar-curvature decomposition residual {worst!r} > {DECOMPOSITION_TOL}")
    ok = verdict(report.limit, predicted)
    return TheoremResult("main_theorem", report, predicted, ok,
                         {"avr": avr.limit, "decomposition_residual_max": worst})


def corollary_experiment(m: WarpedManifold, r_sequence,
                         avr: AvrEstimate | None = None) -> TheoremResult:
    """``A'(s)/s`` against ``8 pi V``."""
    rs = _check_sequence(m, r_sequence)
    avr = avr or estimate_avr(m, rs)
    report = extrapolate_limit((s, sphere_area_and_derivative(m, s)[1] / s) for s in rs)
    predicted = EIGHT_PI * avr.limit
    return TheoremResult("corollary", report, predicted, verdict(report.limit, predicted),
                         {"avr": avr.limit})


def radial_ricci_experiment(m: WarpedManifold, r_sequence) -> TheoremResult:
    """``(1/r) int_{B(r)} Rc(d_r, d_r)``; the limit should vanish."""
    rs = _check_sequence(m, r_sequence)
    values = [ball_radial_ricci_integral(m, r) / r for r in rs]
    report = extrapolate_limit(zip(rs, values))
    nonneg = min(values) >= -1e-10
    ok = abs(report.limit) <= RADIAL_RICCI_TOL and nonneg
    return TheoremResult("radial_ricci", report, 0.0, ok,
                         {"min_value": min(values), "nonnegative": nonneg})


@dataclass(frozen=True)
class PinchingReport:
    eps_star: float
    argmin_t: float
    R_max: float
    flat: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def pinching_grid(t_max: float, grid_size: int) -> np.ndarray:
    return np.geomspace(t_max * 1e-6, t_max, grid_size)


def pinching_infimum(m: WarpedManifold, t_max: float | None = None, grid_size: int = 1024,
                     tol_R: float = TOL_R) -> PinchingReport:
    """Smallest ratio ``min(Ricci eigenvalue) / R`` over a geometric grid.

    Where ``R <= tol_R`` the ratio is taken as 1/3, the isotropic value, since
    ``Rc >= eps R g`` holds there for every eps.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    t_max = m.t_max if t_max is None else t_max
    ts = pinching_grid(t_max, grid_size)
    q = point_curvatures(m, ts)
    R = np.asarray(q.R)
    lo = np.minimum(q.ric_radial, q.ric_tangential)
    curved = R > tol_R
    ratio = np.where(curved, lo / np.where(curved, R, 1.0), 1.0 / 3.0)
    k = int(np.argmin(ratio))
    # + 0.0 folds a -0.0 from underflowed curvature into 0.0
    return PinchingReport(float(ratio[k]) + 0.0, float(ts[k]), float(np.max(R)), not bool(np.any(curved)))


def flatness_test(m: WarpedManifold, t_max: float | None = None, grid_size: int = 1024) -> bool:
    """True iff ``|R| <= 1e-10`` and ``|phi(t) - t| <= 1e-8 t`` on the grid."""
    t_max = m.t_max if t_max is None else t_max
    ts = pinching_grid(t_max, grid_size)
    q = point_curvatures(m, ts)
    phi = m.profile.jet(ts).v
    return bool(np.max(np.abs(q.R)) <= FLAT_R and np.all(np.abs(phi - ts) <= FLAT_PHI * ts))
