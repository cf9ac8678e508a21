"""Experiment configuration, orchestration and serialisation.

Config file schema (JSON, every field except ``profile`` optional)::

    {
      "profile": "builtin:cone_tanh[0.5]",      # or raw profile source
      "r_max": 1280.0,                          # largest sampling radius
      "r_sequence": {"base": 10.0, "factor": 2.0, "count": 8},
      "eps": 0.2,                               # mean-value epsilon
      "a": 1.0,                                 # annulus inner radius
      "quad": {"rel_tol": 1e-10, "abs_tol": 1e-12},
      "grids": {"validation": 512, "bg_pairs": 64, "slope": 256, "pinching": 1024},
      "riccati": {"field": "aniso:0.15/(1+t)^2,0.5", "h": 0.001,
                  "t_max": 50.0, "n_directions": 8},          # or null
      "output": {"json": null, "csv_dir": null}
    }

Every radius in ``r_sequence`` must be at most ``r_max``. The profile is
validated and evaluated on ``(0, (1 + eps) * r_max]`` so the mean-value
windows ``[(1 - eps) s, (1 + eps) s]`` stay inside the domain. The mean-value
sequence uses the radii with ``(1 - eps) s > a``; at least four must remain.
"""

from __future__ import annotations

import contextvars
import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .comparison import (
    check_bishop_gromov,
    check_bishop_gromov_directional,
    check_slope_bound,
    annulus_limits,
    log_spaced_pairs,
)
from .errors import DualPathError, WarplabError
from .geometry import WarpedManifold, gauss_codazzi_residual, point_curvatures
from .jacobi import field_from_label, integrate_jacobi
from .lab import (
    corollary_experiment,
    estimate_avr,
    flatness_test,
    radial_ricci_experiment,
    main_theorem_experiment,
    pinching_infimum,
    verdict,
)
from .profile import profile_from_spec
from .quadrature import quad_tolerances

EXIT_OK = 0
EXIT_VERDICT = 2
EXIT_VALIDATION = 3
EXIT_DIAGNOSTIC = 4

WORKERS_ENV = "WARPLAB_WORKERS"
PINCHING_EPS = 1e-3
ANNULUS_REL = 0.02
ANNULUS_ABS = 0.05


def _default_r_sequence():
    return {"base": 10.0, "factor": 2.0, "count": 8}


def _default_quad():
    return {"rel_tol": 1e-10, "abs_tol": 1e-12}


def _default_grids():
    return {"validation": 512, "bg_pairs": 64, "slope": 256, "pinching": 1024}


def _default_output():
    return {"json": None, "csv_dir": None}


@dataclass
class ExperimentConfig:
    profile: str
    r_max: float = 1280.0
    r_sequence: dict = field(default_factory=_default_r_sequence)
    eps: float = 0.2
    a: float = 1.0
    quad: dict = field(default_factory=_default_quad)
    grids: dict = field(default_factory=_default_grids)
    riccati: dict | None = None
    output: dict = field(default_factory=_default_output)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"profile", "r_max", "r_sequence", "eps", "a", "quad", "grids", "riccati", "output"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "profile" not in d:
            raise ValueError("config needs a 'profile'")
        cfg = cls(profile=d["profile"])
        cfg.r_max = float(d.get("r_max", cfg.r_max))
        cfg.r_sequence = {**cfg.r_sequence, **d.get("r_sequence", {})}
        cfg.eps = float(d.get("eps", cfg.eps))
        cfg.a = float(d.get("a", cfg.a))
        cfg.quad = {**cfg.quad, **d.get("quad", {})}
        cfg.grids = {**cfg.grids, **d.get("grids", {})}
        if d.get("riccati") is not None:
            cfg.riccati = {"h": 1e-3, "t_max": 50.0, "n_directions": 8, **d["riccati"]}
            if "field" not in cfg.riccati:
                raise ValueError("riccati section needs a 'field' label")
        cfg.output = {**cfg.output, **d.get("output", {})}
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "r_max": self.r_max,
            "r_sequence": dict(self.r_sequence),
            "eps": self.eps,
            "a": self.a,
            "quad": dict(self.quad),
            "grids": dict(self.grids),
            "riccati": None if self.riccati is None else dict(self.riccati),
            "output": dict(self.output),
        }

    def radii(self) -> list[float]:
        rs = self.r_sequence
        return [float(rs["base"]) * float(rs["factor"]) ** k for k in range(int(rs["count"]))]

    @property
    def domain(self) -> float:
        return (1.0 + self.eps) * self.r_max

    def annulus_radii(self) -> list[float]:
        return [s for s in self.radii() if s * (1.0 - self.eps) > self.a]

    def validate(self) -> None:
        if not (self.quad["rel_tol"] > 0 and self.quad["abs_tol"] > 0):
            raise ValueError("quadrature tolerances must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not self.a > 0:
            raise ValueError("a must be positive")
        rs = self.radii()
        if len(rs) < 4 or float(self.r_sequence["factor"]) <= 1 or rs[0] <= 0:
            raise ValueError("r_sequence needs count >= 4, base > 0 and factor > 1")
        if rs[-1] > self.r_max:
            raise ValueError(f"largest radius {rs[-1]:g} exceeds r_max {self.r_max:g}")
        if len(self.annulus_radii()) < 4:
            raise ValueError("fewer than 4 radii satisfy (1-eps)*s > a")
        if self.riccati is not None:
            r = self.riccati
            if not (r["h"] > 0 and r["t_max"] >= 10 * r["h"] and int(r["n_directions"]) >= 1):
                raise ValueError("riccati needs h > 0, t_max >= 10 h, n_directions >= 1")


@dataclass
class ExperimentReport:
    """JSON-native report. ``timing`` is excluded from the determinism hash."""

    version: str
    config: dict
    validation: dict
    quantities: list | None = None
    theorems: list | None = None
    inequalities: list | None = None
    annulus: dict | None = None
    pinching: dict | None = None
    riccati: dict | None = None
    verdict: bool = False
    exit_code: int = EXIT_OK
    error: str | None = None
    determinism_hash: str = ""
    timing: dict = field(default_factory=dict)

    _ORDER = ("version", "config", "validation", "quantities", "theorems", "inequalities",
              "annulus", "pinching", "riccati", "verdict", "exit_code", "error",
              "determinism_hash", "timing")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self._ORDER}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**{k: d[k] for k in cls._ORDER})

    def content_hash(self) -> str:
        body = {k: getattr(self, k) for k in self._ORDER if k not in ("timing", "determinism_hash")}
        # output paths say where the report goes, not what it contains
        body["config"] = {k: v for k, v in self.config.items() if k != "output"}
        blob = json.dumps(body, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _fan_out(tasks: dict) -> dict:
    """Run callables, possibly on a thread pool; results keyed and ordered as given."""
    n = _workers()
    if n == 1:
        return {k: f() for k, f in tasks.items()}
    with ThreadPoolExecutor(max_workers=n) as pool:
        futs = {k: pool.submit(contextvars.copy_context().run, f) for k, f in tasks.items()}
        return {k: futs[k].result() for k in tasks}


def _quantities(m: WarpedManifold, radii) -> list:
    out = []
    for r in radii:
        q = point_curvatures(m, r).to_dict()
        q["gauss_codazzi_residual"] = float(gauss_codazzi_residual(m, r))
        out.append(q)
    return out


def _riccati_section(cfg: dict) -> tuple[dict, bool]:
    field_ = field_from_label(cfg["field"], int(cfg["n_directions"]))
    dirs, ok = [], True
    for i in range(field_.n_directions):
        sol = integrate_jacobi(field_, i, float(cfg["t_max"]), float(cfg["h"]))
        slope = check_slope_bound(sol)
        bg = check_bishop_gromov_directional(sol, stride=max(1, len(sol.grid) // 512))
        passed = slope.passed and (bg.passed or not field_.nonneg_trace)
        ok = ok and passed
        dirs.append({
            "direction": i,
            "theta": sol.theta,
            "conjugate_point": sol.conjugate_point,
            "J_end": float(sol.J[-1]),
            "slope_bound": slope.to_dict(),
            "bishop_gromov": bg.to_dict(),
        })
    return {"field": field_.label, "h": cfg["h"], "t_max": cfg["t_max"],
            "nonneg_trace": field_.nonneg_trace, "directions": dirs, "passed": ok}, ok


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Validate, then run every suite. Never raises for numerical failures:
    they are reflected in ``verdict``/``exit_code``/``error``."""
    timing = {}
    t_start = time.perf_counter()
    profile = profile_from_spec(config.profile, t_max=config.domain,
                                grid_size=int(config.grids["validation"]))
    report = ExperimentReport(__version__, config.to_dict(), profile.validation.to_dict())
    timing["validation_s"] = time.perf_counter() - t_start
    if not profile.validation.passed:
        report.exit_code = EXIT_VALIDATION
        report.error = "profile failed validation"
        return _finish(report, timing, t_start)

    m = WarpedManifold(profile)
    rs = config.radii()
    try:
        with quad_tolerances(config.quad["rel_tol"], config.quad["abs_tol"]):
            _run_suites(report, m, rs, config, timing)
    except DualPathError as exc:
        report.exit_code = EXIT_DIAGNOSTIC
        report.error = str(exc)
        report.verdict = False
    return _finish(report, timing, t_start)


def _run_suites(report, m, rs, config, timing):
    t0 = time.perf_counter()
    report.quantities = _quantities(m, rs)

    hi = min(1e3, config.domain)
    pairs = log_spaced_pairs(min(0.1, hi / 10), hi, int(config.grids["bg_pairs"]))
    slope_grid = np.geomspace(1e-3, hi, int(config.grids["slope"]))
    avr = estimate_avr(m, rs)
    timing["setup_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    results = _fan_out({
        "bg": lambda: check_bishop_gromov(m, pairs),
        "slope": lambda: check_slope_bound(m, slope_grid),
        "main": lambda: main_theorem_experiment(m, rs, config.a, avr=avr),
        "corollary": lambda: corollary_experiment(m, rs, avr=avr),
        "radial_ricci": lambda: radial_ricci_experiment(m, rs),
        "annulus": lambda: annulus_limits(m, config.a, config.eps, config.annulus_radii()),
        "pinching": lambda: pinching_infimum(m, config.r_max, int(config.grids["pinching"])),
        "flat": lambda: flatness_test(m, config.r_max, int(config.grids["pinching"])),
    })
    timing["suites_s"] = time.perf_counter() - t0

    V = avr.limit
    avr_row = {
        "name": "avr",
        "limit": avr.area.limit,
        "predicted": None,
        "error_estimate": avr.area.error_estimate,
        "verdict": True,
        "convergence": avr.area.to_dict(),
        "details": {"volume_form": avr.volume.to_dict()},
    }
    theorems = [avr_row] + [results[k].to_dict() for k in ("main", "corollary", "radial_ricci")]

    l22 = results["annulus"]
    eps = config.eps
    rows = []
    for name, rep, target in (("annulus_upper", l22.upper, 4 * math.pi * V * (-2 - eps)),
                              ("annulus_lower", l22.lower, 4 * math.pi * V * (-2 + eps))):
        ok = verdict(rep.limit, target, ANNULUS_REL, ANNULUS_ABS)
        rows.append({"name": name, "limit": rep.limit, "predicted": target,
                     "error_estimate": rep.error_estimate, "verdict": ok,
                     "convergence": rep.to_dict(), "details": {}})
    theorems += rows
    report.annulus = {"a": config.a, "eps": eps,
                      "radii": [mv.to_dict() for mv in l22.radii]}

    pin, flat = results["pinching"], results["flat"]
    consistent = flat or pin.eps_star < PINCHING_EPS
    report.pinching = {**pin.to_dict(), "flatness_test": flat,
                       "consistent_with_flatness_theorem": consistent}

    report.theorems = theorems
    report.inequalities = [results["bg"].to_dict(), results["slope"].to_dict()]
    ok = all(t["verdict"] for t in theorems) and all(i["passed"] for i in report.inequalities)
    ok = ok and consistent

    if config.riccati is not None:
        t0 = time.perf_counter()
        report.riccati, ric_ok = _riccati_section(config.riccati)
        timing["riccati_s"] = time.perf_counter() - t0
        ok = ok and ric_ok

    report.verdict = bool(ok)
    report.exit_code = EXIT_OK if ok else EXIT_VERDICT


def _finish(report, timing, t_start):
    timing["total_s"] = time.perf_counter() - t_start
    report.timing = timing
    report.determinism_hash = report.content_hash()
    return report


def run_riccati(config: ExperimentConfig) -> dict:
    if config.riccati is None:
        raise ValueError("config has no 'riccati' section")
    section, ok = _riccati_section(config.riccati)
    section["exit_code"] = EXIT_OK if ok else EXIT_VERDICT
    return section


def emit_report(report: ExperimentReport, format: str = "json"):
    """Serialise a report.

    ``json`` returns UTF-8 bytes of the full report with keys in fixed order.
    ``csv`` returns ``{filename: bytes}``, one table ``r,value,fit_residual``
    per convergence sequence.
    """
    if format == "json":
        text = json.dumps(report.to_dict(), indent=2, allow_nan=False)
        return (text + "\n").encode("utf-8")
    if format == "csv":
        return csv_tables(report)
    raise ValueError(f"unknown format {format!r}")


def _csv_bytes(conv: dict) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "value", "fit_residual"])
    L, c = conv["limit"], conv["c"]
    for r, v in conv["samples"]:
        w.writerow([repr(float(r)), repr(float(v)), repr(float(v - (L + c / r)))])
    return buf.getvalue().encode("utf-8")


def csv_tables(report: ExperimentReport) -> dict:
    tables = {}
    for row in report.theorems or []:
        tables[f"{row['name']}.csv"] = _csv_bytes(row["convergence"])
        if row["name"] == "avr":
            tables["avr_volume.csv"] = _csv_bytes(row["details"]["volume_form"])
    return tables


def load_report(path) -> ExperimentReport:
    with open(path, encoding="utf-8") as fh:
        return ExperimentReport.from_dict(json.load(fh))


def write_outputs(report: ExperimentReport, json_path=None, csv_dir=None) -> None:
    if json_path:
        with open(json_path, "wb") as fh:
            fh.write(emit_report(report, "json"))
    if csv_dir:
        os.makedirs(csv_dir, exist_ok=True)
        for name, data in emit_report(report, "csv").items():
            with open(os.path.join(csv_dir, name), "wb") as fh:
                fh.write(data)


__all__ = [
    "ExperimentConfig", "ExperimentReport", "run_experiment", "run_riccati", "emit_report",
    "csv_tables", "load_report", "write_outputs", "WarplabError",
]
