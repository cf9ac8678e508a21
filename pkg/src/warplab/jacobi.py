"""Matrix Jacobi fields along radial geodesics.

For a radial curvature operator ``K(t, theta)`` (symmetric 2x2) we solve

    U'' + K U = 0,   U(0) = 0,   U'(0) = I

with classical RK4. ``J = det U`` is the polar volume density and
``S = U' U^{-1}`` is the shape operator of the geodesic sphere. The linear
form is used instead of the Riccati equation for ``S`` because it cannot blow
up in finite time; a conjugate point shows up as a zero of an eigenvalue of U.

Synthetic fields need not come from an actual metric. Only statements that
depend on radial data alone (the slope bound and the per-direction Jacobian
comparisons) are meaningful for them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dsl import parse_profile
from .errors import IntegrationError, ProfileError
from .jet import eval_jet2
from .profile import RadialProfile, profile_from_spec

DEFAULT_DIRECTIONS = 8
_POLE_CLIP = 1e-6


@dataclass(frozen=True)
class RadialCurvatureField:
    """``func(t, theta)`` returns an array of shape ``t.shape + (2, 2)``."""

    func: Callable[[np.ndarray, float], np.ndarray]
    n_directions: int = DEFAULT_DIRECTIONS
    label: str = ""
    nonneg_trace: bool = True

    def direction(self, index: int) -> float:
        if not 0 <= index < self.n_directions:
            raise IndexError(f"direction index {index} out of range")
        return 2.0 * math.pi * index / self.n_directions

    def eval(self, t, index: int) -> np.ndarray:
        tt = np.asarray(t, dtype=float)
        k = np.asarray(self.func(tt, self.direction(index)), dtype=float)
        return 0.5 * (k + np.swapaxes(k, -1, -2))

    def check_trace(self, t_max: float, samples: int = 256) -> float:
        """Smallest sampled trace over all directions (should be >= 0)."""
        grid = np.concatenate([[0.0], np.geomspace(1e-3, t_max, samples)])
        return min(float(np.min(np.trace(self.eval(grid, i), axis1=-2, axis2=-1)))
                   for i in range(self.n_directions))


def _diag(a, b):
    out = np.zeros(np.shape(a) + (2, 2))
    out[..., 0, 0] = a
    out[..., 1, 1] = b
    return out


def isotropic_field(profile: RadialProfile, n_directions=DEFAULT_DIRECTIONS) -> RadialCurvatureField:
    """``(-phi''/phi) I``; the warped-product field, solved exactly by ``U = phi I``."""

    def func(t, theta):
        tt = np.clip(t, _POLE_CLIP, None)
        j = eval_jet2(profile.expr, tt)
        k = -j.d2 / j.v
        return _diag(k, k)

    return RadialCurvatureField(func, n_directions, f"isotropic:{profile.label}")


def constant_field(k: float, n_directions=DEFAULT_DIRECTIONS) -> RadialCurvatureField:
    def func(t, theta):
        kk = np.full(np.shape(t), float(k))
        return _diag(kk, kk)

    return RadialCurvatureField(func, n_directions, f"constant:{k!r}", nonneg_trace=k >= 0)


def aniso_field(k_src: str, beta: float, n_directions=DEFAULT_DIRECTIONS) -> RadialCurvatureField:
    """``k(t) * diag(1 + beta cos(theta), 1 - beta cos(theta))``.

    ``k_src`` is a number or a profile-language expression in ``t``.
    """
    k_expr = parse_profile(k_src)

    def func(t, theta):
        kk = np.broadcast_to(eval_jet2(k_expr, t).v, np.shape(t))
        c = beta * math.cos(theta)
        return _diag(kk * (1.0 + c), kk * (1.0 - c))

    return RadialCurvatureField(func, n_directions, f"aniso:{k_src},{beta!r}")


def field_from_label(label: str, n_directions=DEFAULT_DIRECTIONS,
                     profile_t_max: float = 1e4) -> RadialCurvatureField:
    """Build a field from ``isotropic:<profile>``, ``constant:<k>`` or ``aniso:<k>,<beta>``."""
    kind, _, arg = label.partition(":")
    if kind == "isotropic":
        profile = profile_from_spec(arg, t_max=profile_t_max)
        return isotropic_field(profile, n_directions)
    if kind == "constant":
        return constant_field(float(arg), n_directions)
    if kind == "aniso":
        k_src, sep, beta = arg.rpartition(",")
        if not sep:
            raise ProfileError(f"aniso field needs '<k>,<beta>', got {arg!r}")
        field = aniso_field(k_src, float(beta), n_directions)
        if field.check_trace(profile_t_max) < 0:
            raise ProfileError(f"aniso field {label!r} has negative trace 2k(t)")
        return field
    raise ProfileError(f"unknown field label {label!r}")


@dataclass(frozen=True)
class JacobiSolution:
    direction: int
    theta: float
    grid: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    K: np.ndarray
    J: np.ndarray
    conjugate_point: float | None
    field: RadialCurvatureField

    def interpolate(self, t: float):
        """Cubic Hermite values of ``U`` and ``U'`` at ``t`` (``U'' = -K U``)."""
        g = self.grid
        if not g[0] <= t <= g[-1]:
            raise ValueError(f"t={t:g} outside the solution grid [{g[0]:g}, {g[-1]:g}]")
        i = int(np.searchsorted(g, t, side="right")) - 1
        i = min(max(i, 0), len(g) - 2)
        h = g[i + 1] - g[i]
        s = (t - g[i]) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        U = h00 * self.U[i] + h10 * h * self.dU[i] + h01 * self.U[i + 1] + h11 * h * self.dU[i + 1]
        ddU0 = -self.K[i] @ self.U[i]
        ddU1 = -self.K[i + 1] @ self.U[i + 1]
        dU = h00 * self.dU[i] + h10 * h * ddU0 + h01 * self.dU[i + 1] + h11 * h * ddU1
        return U, dU


def _rk4(kgrid: np.ndarray, t0: float, h: float, U0, V0):
    """Integrate on a uniform grid. ``kgrid[2*i + j]`` is K at ``t0 + (i + j/2) h``."""
    n = (len(kgrid) - 1) // 2
    k = [(float(m[0, 0]), float(m[0, 1]), float(m[1, 1])) for m in kgrid]
    Us = np.empty((n + 1, 2, 2))
    Vs = np.empty((n + 1, 2, 2))
    a, b, c, d = (float(x) for x in U0.ravel())
    e, f, g, p = (float(x) for x in V0.ravel())
    Us[0], Vs[0] = U0, V0
    hh = 0.5 * h
    h6 = h / 6.0
    for i in range(n):
        k11, k12, k22 = k[2 * i]
        m11, m12, m22 = k[2 * i + 1]
        n11, n12, n22 = k[2 * i + 2]
        # stage 1: dU = V, dV = -K U
        a1, b1, c1, d1 = e, f, g, p
        e1 = -(k11 * a + k12 * c); f1 = -(k11 * b + k12 * d)
        g1 = -(k12 * a + k22 * c); p1 = -(k12 * b + k22 * d)
        # stage 2
        ua, ub, uc, ud = a + hh * a1, b + hh * b1, c + hh * c1, d + hh * d1
        a2, b2, c2, d2 = e + hh * e1, f + hh * f1, g + hh * g1, p + hh * p1
        e2 = -(m11 * ua + m12 * uc); f2 = -(m11 * ub + m12 * ud)
        g2 = -(m12 * ua + m22 * uc); p2 = -(m12 * ub + m22 * ud)
        # stage 3
        ua, ub, uc, ud = a + hh * a2, b + hh * b2, c + hh * c2, d + hh * d2
        a3, b3, c3, d3 = e + hh * e2, f + hh * f2, g + hh * g2, p + hh * p2
        e3 = -(m11 * ua + m12 * uc); f3 = -(m11 * ub + m12 * ud)
        g3 = -(m12 * ua + m22 * uc); p3 = -(m12 * ub + m22 * ud)
        # stage 4
        ua, ub, uc, ud = a + h * a3, b + h * b3, c + h * c3, d + h * d3
        a4, b4, c4, d4 = e + h * e3, f + h * f3, g + h * g3, p + h * p3
        e4 = -(n11 * ua + n12 * uc); f4 = -(n11 * ub + n12 * ud)
        g4 = -(n12 * ua + n22 * uc); p4 = -(n12 * ub + n22 * ud)

        a += h6 * (a1 + 2 * a2 + 2 * a3 + a4)
        b += h6 * (b1 + 2 * b2 + 2 * b3 + b4)
        c += h6 * (c1 + 2 * c2 + 2 * c3 + c4)
        d += h6 * (d1 + 2 * d2 + 2 * d3 + d4)
        e += h6 * (e1 + 2 * e2 + 2 * e3 + e4)
        f += h6 * (f1 + 2 * f2 + 2 * f3 + f4)
        g += h6 * (g1 + 2 * g2 + 2 * g3 + g4)
        p += h6 * (p1 + 2 * p2 + 2 * p3 + p4)
        Us[i + 1] = ((a, b), (c, d))
        Vs[i + 1] = ((e, f), (g, p))
    if not (np.all(np.isfinite(Us)) and np.all(np.isfinite(Vs))):
        raise IntegrationError("non-finite Jacobi state; the curvature field blew up")
    return Us, Vs


def integrate_jacobi(field: RadialCurvatureField, direction: int, t_max: float,
                     h: float) -> JacobiSolution:
    """RK4 solution along one direction, seeded at ``t0 = h`` by a third-order Taylor step.

    The step is shrunk slightly if needed so the grid ends exactly at ``t_max``.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    if t_max < 10 * h:
        raise ValueError("t_max must be at least 10 h")
    t0 = h
    n = max(1, int(round((t_max - t0) / h)))
    step = (t_max - t0) / n
    half_grid = t0 + 0.5 * step * np.arange(2 * n + 1)
    half_grid[-1] = t_max
    kgrid = field.eval(half_grid, direction)
    if not np.all(np.isfinite(kgrid)):
        raise IntegrationError("curvature field is not finite on the integration grid")
    K0 = field.eval(np.array([0.0]), direction)[0]
    eye = np.eye(2)
    U0 = t0 * eye - (t0**3 / 6.0) * K0
    V0 = eye - (t0**2 / 2.0) * K0
    with np.errstate(all="ignore"):
        Us, Vs = _rk4(kgrid, t0, step, U0, V0)
    grid = half_grid[::2].copy()
    J = Us[:, 0, 0] * Us[:, 1, 1] - Us[:, 0, 1] * Us[:, 1, 0]
    sol = JacobiSolution(direction, field.direction(direction), grid, Us, Vs,
                         kgrid[::2].copy(), J, None, field)
    return _with_conjugate(sol, conjugate_point_scan(sol))


def _with_conjugate(sol: JacobiSolution, tc):
    return JacobiSolution(sol.direction, sol.theta, sol.grid, sol.U, sol.dU, sol.K,
                          sol.J, tc, sol.field)


def integrate_all_directions(field: RadialCurvatureField, t_max: float, h: float,
                             executor=None) -> list[JacobiSolution]:
    idx = range(field.n_directions)
    if executor is None:
        return [integrate_jacobi(field, i, t_max, h) for i in idx]
    return list(executor.map(lambda i: integrate_jacobi(field, i, t_max, h), idx))


def _min_eig(U: np.ndarray) -> np.ndarray:
    """Smallest real part among the eigenvalues of each 2x2 matrix in ``U``."""
    tr = U[..., 0, 0] + U[..., 1, 1]
    det = U[..., 0, 0] * U[..., 1, 1] - U[..., 0, 1] * U[..., 1, 0]
    disc = 0.25 * tr * tr - det
    root = np.sqrt(np.clip(disc, 0.0, None))
    return np.where(disc >= 0, 0.5 * tr - root, 0.5 * tr)


def conjugate_point_scan(sol: JacobiSolution) -> float | None:
    """First radius where ``U`` becomes singular, or None.

    The indicator is the smallest eigenvalue of ``U``, which changes sign at a
    conjugate point even when ``det U`` only touches zero (isotropic fields,
    where ``det U = u^2``). The crossing is refined by bisection on the Hermite
    dense output.
    """
    ind = _min_eig(sol.U)
    bad = np.nonzero((ind <= 0) | (sol.J <= 0))[0]
    if bad.size == 0:
        return None
    i = int(bad[0])
    if i == 0:
        return float(sol.grid[0])
    lo, hi = float(sol.grid[i - 1]), float(sol.grid[i])

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(_min_eig(sol.interpolate(mid)[0])) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ShapeData:
    lam1: float
    lam2: float
    JoverJ: float
    ric_radial: float


def shape_operator(U: np.ndarray, dU: np.ndarray) -> np.ndarray:
    return dU @ np.linalg.inv(U)


def shape_data(sol: JacobiSolution, t: float) -> ShapeData:
    if sol.conjugate_point is not None and t >= sol.conjugate_point:
        raise ValueError(f"t={t:g} is at or beyond the conjugate point {sol.conjugate_point:g}")
    U, dU = sol.interpolate(t)
    S = shape_operator(U, dU)
    eig = np.sort(np.real(np.linalg.eigvals(S)))
    K = sol.field.eval(np.array([t]), sol.direction)[0]
    return ShapeData(float(eig[0]), float(eig[1]), float(np.trace(S)), float(np.trace(K)))


def slope_on_grid(sol: JacobiSolution) -> tuple[np.ndarray, np.ndarray]:
    """Grid radii before any conjugate point and ``J'/J = trace(U' U^{-1})`` there."""
    mask = np.ones(len(sol.grid), bool)
    if sol.conjugate_point is not None:
        mask = sol.grid < sol.conjugate_point
        # drop the last sample before the crossing: U is nearly singular there
        idx = np.nonzero(mask)[0]
        if idx.size:
            mask[idx[-1]] = False
    U, dU = sol.U[mask], sol.dU[mask]
    # trace(dU adj(U)) / det(U)
    adj = np.empty_like(U)
    adj[:, 0, 0] = U[:, 1, 1]
    adj[:, 1, 1] = U[:, 0, 0]
    adj[:, 0, 1] = -U[:, 0, 1]
    adj[:, 1, 0] = -U[:, 1, 0]
    num = np.trace(dU @ adj, axis1=1, axis2=2)
    return sol.grid[mask], num / sol.J[mask]
