"""Adaptive Gauss-Kronrod quadrature and the radial ball/annulus integrals.

Every ball integral is reduced to a radial integral by rotational symmetry and
assembled in measure form (quantity times ``4*pi*phi^2``) so the integrand
stays finite at the pole. Kronrod nodes are interior, so ``t = 0`` itself is
never sampled.
"""

from __future__ import annotations

import contextvars
import heapq
import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import DualPathError, QuadratureError
from .geometry import WarpedManifold, check_domain, point_curvatures

REL_TOL = 1e-10
ABS_TOL = 1e-12
MAX_DEPTH = 60
MAX_INTERVALS = 4000

_TOLS = contextvars.ContextVar("quad_tolerances", default=(REL_TOL, ABS_TOL))


@contextmanager
def quad_tolerances(rel_tol: float, abs_tol: float):
    """Override the default tolerances of every radial integral in this context."""
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    token = _TOLS.set((float(rel_tol), float(abs_tol)))
    try:
        yield
    finally:
        _TOLS.reset(token)


# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes.
_GW = np.zeros(15)
_GW[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool = True


def _panel(f, a, b):
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    x = c + h * _NODES
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    if not np.all(np.isfinite(y)):
        raise QuadratureError(f"non-finite integrand sample on [{a:g}, {b:g}]")
    k = h * float(np.dot(_KW, y))
    g = h * float(np.dot(_GW, y))
    return k, abs(k - g)


def integrate_adaptive(f, a: float, b: float, rel_tol: float | None = None,
                       abs_tol: float | None = None) -> QuadResult:
    """Globally adaptive G7/K15 bisection.

    ``f`` must accept a numpy array of abscissae. The interval with the largest
    error estimate is split until the summed estimate meets
    ``max(abs_tol, rel_tol * |value|)``. If a panel reaches depth 60 or the
    interval budget runs out, the best value is returned with
    ``converged=False``. Tolerances left as None come from
    :func:`quad_tolerances` (default ``1e-10`` relative, ``1e-12`` absolute).
    """
    ctx_rel, ctx_abs = _TOLS.get()
    rel_tol = ctx_rel if rel_tol is None else rel_tol
    abs_tol = ctx_abs if abs_tol is None else abs_tol
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    if b < a:
        raise ValueError("need a <= b")
    if a == b:
        return QuadResult(0.0, 0.0, 0)

    k, e = _panel(f, a, b)
    evals = 15
    # heap entries: (-error, left, right, value, depth)
    heap = [(-e, a, b, k, 0)]
    converged = True
    while True:
        total = math.fsum(item[3] for item in heap)
        err = math.fsum(-item[0] for item in heap)
        if err <= max(abs_tol, rel_tol * abs(total)):
            break
        if len(heap) >= MAX_INTERVALS or heap[0][4] >= MAX_DEPTH:
            converged = False
            break
        neg_e, lo, hi, _, depth = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        for l, r in ((lo, mid), (mid, hi)):
            kv, ke = _panel(f, l, r)
            heapq.heappush(heap, (-ke, l, r, kv, depth + 1))
        evals += 30

    # Sum by position, not heap order, so the result is independent of ties.
    parts = sorted(heap, key=lambda item: item[1])
    value = math.fsum(item[3] for item in parts)
    error = math.fsum(-item[0] for item in parts)
    return QuadResult(value, error, evals, converged)


def _integrate(f, a, b, rel_tol, abs_tol) -> float:
    return integrate_adaptive(f, a, b, rel_tol, abs_tol).value


FOUR_PI = 4.0 * math.pi


def ball_volume(m: WarpedManifold, r: float, rel_tol=None, abs_tol=None) -> float:
    check_domain(m, r)
    return _integrate(lambda t: FOUR_PI * m.profile.jet(t).v ** 2, 0.0, r, rel_tol, abs_tol)


def scalar_density(m: WarpedManifold, t):
    """``R * 4*pi*phi^2`` written without division: ``4*pi*(2 - 2 phi'^2 - 4 phi phi'')``."""
    j = m.profile.jet(t)
    return FOUR_PI * (2.0 - 2.0 * j.d1 * j.d1 - 4.0 * j.v * j.d2)


def ball_scalar_integral(m: WarpedManifold, r: float, rel_tol=None, abs_tol=None) -> float:
    check_domain(m, r)
    return _integrate(lambda t: scalar_density(m, t), 0.0, r, rel_tol, abs_tol)


def annulus_scalar_integral(m: WarpedManifold, a: float, s: float,
                            rel_tol=None, abs_tol=None) -> float:
    check_domain(m, [a, s])
    return _integrate(lambda t: scalar_density(m, t), a, s, rel_tol, abs_tol)


def phi_prime_sq_integral(m: WarpedManifold, r: float, rel_tol=None, abs_tol=None) -> float:
    return _integrate(lambda t: m.profile.jet(t).d1 ** 2, 0.0, r, rel_tol, abs_tol)


def scalar_integral_closed_form(m: WarpedManifold, r: float, rel_tol=None,
                                abs_tol=None) -> float:
    """``8 pi r - 16 pi phi'(r) phi(r) + 8 pi int_0^r phi'^2``.

    Obtained by integrating ``phi * phi''`` by parts; uses no second
    derivative, which keeps it independent of :func:`ball_scalar_integral`.
    """
    check_domain(m, r)
    j = m.profile.jet(r)
    tail = phi_prime_sq_integral(m, r, rel_tol, abs_tol)
    return 8.0 * math.pi * r - 16.0 * math.pi * j.d1 * j.v + 8.0 * math.pi * tail


def radial_ricci_density(m: WarpedManifold, t):
    j = m.profile.jet(t)
    return -2.0 * FOUR_PI * j.v * j.d2


def ball_radial_ricci_integral(m: WarpedManifold, r: float, rel_tol=None,
                               abs_tol=None) -> float:
    """``int_{B(r)} Rc(d_r, d_r) = -8 pi int_0^r phi phi''``."""
    check_domain(m, r)
    return _integrate(lambda t: radial_ricci_density(m, t), 0.0, r, rel_tol, abs_tol)


def neg_jpp_density(m: WarpedManifold, t):
    """``(-J''/J) * 4*pi*phi^2 = -4*pi*J''``."""
    j = m.profile.jet(t)
    return -FOUR_PI * (2.0 * j.d1 * j.d1 + 2.0 * j.v * j.d2)


def annulus_neg_jpp_integral(m: WarpedManifold, a: float, s: float,
                             rel_tol=None, abs_tol=None, check_tol=1e-8) -> float:
    """``int_{A(a,s)} -J''/J``, returned from the closed form ``A'(a) - A'(s)``.

    The quadrature path is always evaluated as well; a disagreement beyond
    ``check_tol`` raises :class:`DualPathError`.
    """
    if not 0 < a < s:
        raise ValueError("need 0 < a < s")
    check_domain(m, [a, s])
    ja, js = m.profile.jet(a), m.profile.jet(s)
    closed = 8.0 * math.pi * (ja.v * ja.d1 - js.v * js.d1)
    quad = _integrate(lambda t: neg_jpp_density(m, t), a, s, rel_tol, abs_tol)
    scale = max(abs(closed), abs(quad), 8.0 * math.pi * abs(ja.v * ja.d1))
    if abs(quad - closed) > check_tol * scale + (abs_tol or _TOLS.get()[1]):
        raise DualPathError(
            f"annulus -J''/J integral on [{a:g}, {s:g}]: quadrature {quad!r} "
            f"vs closed form {closed!r}"
        )
    return closed


def sphere_scalar_annulus_integral(m: WarpedManifold, a: float, s: float,
                                   rel_tol=None, abs_tol=None) -> float:
    """Co-area integral of the intrinsic sphere curvature over ``A(a, s)``."""
    check_domain(m, [a, s])

    def density(t):
        q = point_curvatures(m, t)
        return q.R_sphere * FOUR_PI * q.J

    return _integrate(density, a, s, rel_tol, abs_tol)


def annulus_ric_minus_jpp_integral(m: WarpedManifold, a: float, s: float,
                                   rel_tol=None, abs_tol=None) -> float:
    """``int_{A(a,s)} (Rc(d_r, d_r) - J''/J)`` assembled from point quantities."""
    check_domain(m, [a, s])

    def density(t):
        q = point_curvatures(m, t)
        return FOUR_PI * (q.ric_radial * q.J - q.J2)

    return _integrate(density, a, s, rel_tol, abs_tol)
