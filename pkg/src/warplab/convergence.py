"""Limit extrapolation for sequences sampled at increasing radii."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MODEL = "constant-plus-c-over-r"


@dataclass(frozen=True)
class ConvergenceReport:
    samples: tuple[tuple[float, float], ...]
    limit: float
    c: float
    rms_residual: float
    error_estimate: float
    model: str = MODEL

    @property
    def radii(self) -> np.ndarray:
        return np.array([r for r, _ in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.samples])

    def fit(self, r):
        return self.limit + self.c / np.asarray(r, dtype=float)

    def fit_residuals(self) -> np.ndarray:
        return self.values - self.fit(self.radii)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "limit": self.limit,
            "c": self.c,
            "rms_residual": self.rms_residual,
            "error_estimate": self.error_estimate,
            "samples": [[r, v] for r, v in self.samples],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        return cls(
            samples=tuple((float(r), float(v)) for r, v in d["samples"]),
            limit=d["limit"],
            c=d["c"],
            rms_residual=d["rms_residual"],
            error_estimate=d["error_estimate"],
            model=d.get("model", MODEL),
        )


def _fit(r: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    A = np.column_stack([np.ones_like(r), 1.0 / r])
    (L, c), *_ = np.linalg.lstsq(A, v, rcond=None)
    return float(L), float(c)


def extrapolate_limit(samples) -> ConvergenceReport:
    """Least-squares ``L + c/r`` fit over the tail half of the samples.

    The error estimate is the largest of the tail RMS residual, the misfit at
    the last sample, and the shift between the tail fit and a fit over all
    samples.
    """
    pts = [(float(r), float(v)) for r, v in samples]
    if len(pts) < 4:
        raise ValueError("need at least 4 samples")
    r = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(np.diff(r) <= 0):
        if np.all(r == r[0]):
            raise ValueError("degenerate design: all radii equal")
        raise ValueError("radii must be strictly increasing")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite sample value")

    tail = max(2, math.ceil(len(pts) / 2))
    rt, vt = r[-tail:], v[-tail:]
    L, c = _fit(rt, vt)
    L_all, _ = _fit(r, v)
    resid = vt - (L + c / rt)
    rms = float(np.sqrt(np.mean(resid**2)))
    last = abs(float(resid[-1]))
    err = max(rms, last, abs(L - L_all))
    return ConvergenceReport(tuple(pts), L, c, rms, err)
