"""Pointwise geometry of the warped product ``dr^2 + phi(r)^2 * g_round`` on R^3.

Geodesic spheres are umbilic here, so both principal curvatures equal
``phi'/phi``. All functions accept a scalar radius or a numpy array of radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ProfileError
from .profile import RadialProfile


@dataclass(frozen=True)
class WarpedManifold:
    profile: RadialProfile

    def __post_init__(self):
        if not getattr(self, "_skip_check", False) and not self.profile.validation.passed:
            bad = self.profile.validation.failures[0]
            raise ProfileError(
                f"profile {self.profile.label!r} failed validation: {bad.condition} "
                f"at t={bad.t:g}"
            )

    @classmethod
    def unvalidated(cls, profile: RadialProfile) -> "WarpedManifold":
        """Bypass the validation guard. Only for negative controls."""
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_skip_check", True)
        object.__setattr__(obj, "profile", profile)
        return obj

    @property
    def t_max(self) -> float:
        return self.profile.t_max

    def jet(self, t):
        check_domain(self, t)
        return self.profile.jet(t)


def check_domain(m: WarpedManifold, t) -> None:
    tt = np.asarray(t, dtype=float)
    if tt.size and (np.any(tt <= 0) or np.any(tt > m.t_max * (1 + 1e-12))):
        raise ValueError(f"radius outside (0, {m.t_max:g}]")


@dataclass(frozen=True)
class PointQuantities:
    t: Any
    J: Any
    J1: Any
    J2: Any
    lam: Any
    ric_radial: Any
    ric_tangential: Any
    R: Any
    R_sphere: Any

    def to_dict(self) -> dict:
        return {k: _plain(v) for k, v in self.__dict__.items()}


def _plain(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    return float(v)


def jacobian_data(m: WarpedManifold, t):
    """Polar volume density ``J = phi^2`` and its first two radial derivatives."""
    j = m.jet(t)
    phi, d1, d2 = j.v, j.d1, j.d2
    return phi * phi, 2.0 * phi * d1, 2.0 * d1 * d1 + 2.0 * phi * d2


def point_curvatures(m: WarpedManifold, t) -> PointQuantities:
    j = m.jet(t)
    phi, d1, d2 = j.v, j.d1, j.d2
    J, J1, J2 = phi * phi, 2.0 * phi * d1, 2.0 * d1 * d1 + 2.0 * phi * d2
    lam = d1 / phi
    ric_radial = -2.0 * d2 / phi
    bend = (1.0 - d1 * d1) / (phi * phi)
    ric_tangential = -d2 / phi + bend
    R = -4.0 * d2 / phi + 2.0 * bend
    R_sphere = 2.0 / (phi * phi)
    return PointQuantities(t, J, J1, J2, lam, ric_radial, ric_tangential, R, R_sphere)


def gauss_codazzi_residual(m: WarpedManifold, t):
    """``R - (R_sphere + 2 Rc(d_r, d_r) - 2 lambda_1 lambda_2)``; zero up to rounding."""
    q = point_curvatures(m, t)
    return q.R - (q.R_sphere + 2.0 * q.ric_radial - 2.0 * q.lam * q.lam)


def sphere_area_and_derivative(m: WarpedManifold, t):
    j = m.jet(t)
    return 4.0 * math.pi * j.v * j.v, 8.0 * math.pi * j.v * j.d1


def sphere_area_derivative(m: WarpedManifold, t):
    return sphere_area_and_derivative(m, t)[1]
