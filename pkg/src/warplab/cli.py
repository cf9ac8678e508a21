"""Command line entry point: ``warplab <command> ...``.

Commands::

    validate <profile>                      check the pole conditions
    quantities <profile> --t 1,10,100       curvature quantities at radii
    verify <config.json>                    run every suite, write report
    riccati <config.json>                   Jacobi/Riccati suite only
    report <config-or-report.json> --format json|csv --out PATH

``<profile>`` is DSL source such as ``"0.5*t+0.5*tanh(t)"`` or a builtin
spec such as ``builtin:cone_tanh[0.5]``. The worker count for ``verify`` is
read from ``WARPLAB_WORKERS`` (default 1) unless ``--workers`` is given.

Exit codes: 0 success, 1 usage or input error, 2 verdict failure,
3 profile validation failure, 4 dual-path diagnostic.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import WarplabError
from .geometry import WarpedManifold, gauss_codazzi_residual, point_curvatures
from .profile import DEFAULT_GRID, DEFAULT_T_MAX, profile_from_spec
from .report import (
    EXIT_OK,
    EXIT_VALIDATION,
    WORKERS_ENV,
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    run_experiment,
    run_riccati,
    write_outputs,
)

EXIT_USAGE = 1


def _dump(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _load_config(args) -> ExperimentConfig:
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    # flags override file fields
    if getattr(args, "profile", None):
        raw["profile"] = args.profile
    for key in ("r_max", "eps", "a"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    quad = dict(raw.get("quad", {}))
    if getattr(args, "rel_tol", None) is not None:
        quad["rel_tol"] = args.rel_tol
    if getattr(args, "abs_tol", None) is not None:
        quad["abs_tol"] = args.abs_tol
    if quad:
        raw["quad"] = quad
    ric = raw.get("riccati")
    for flag, key in (("field", "field"), ("h", "h"), ("ric_t_max", "t_max"),
                      ("n_directions", "n_directions")):
        val = getattr(args, flag, None)
        if val is not None:
            ric = dict(ric or {})
            ric[key] = val
    raw["riccati"] = ric
    out = dict(raw.get("output", {}))
    if getattr(args, "json_out", None):
        out["json"] = args.json_out
    if getattr(args, "csv_dir", None):
        out["csv_dir"] = args.csv_dir
    raw["output"] = out
    return ExperimentConfig.from_dict(raw)


def cmd_validate(args) -> int:
    profile = profile_from_spec(args.profile, t_max=args.t_max, grid_size=args.grid)
    _dump({"profile": profile.label, "t_max": args.t_max, **profile.validation.to_dict()})
    return EXIT_OK if profile.validation.passed else EXIT_VALIDATION


def cmd_quantities(args) -> int:
    profile = profile_from_spec(args.profile, t_max=args.t_max, grid_size=args.grid)
    if not profile.validation.passed:
        _dump({"profile": profile.label, **profile.validation.to_dict()})
        return EXIT_VALIDATION
    m = WarpedManifold(profile)
    rows = []
    for t in args.t:
        q = point_curvatures(m, t).to_dict()
        q["gauss_codazzi_residual"] = float(gauss_codazzi_residual(m, t))
        rows.append(q)
    _dump({"profile": profile.label, "quantities": rows})
    return EXIT_OK


def _summary(report: ExperimentReport) -> str:
    lines = [f"profile: {report.config['profile']}"]
    if report.error:
        lines.append(f"error: {report.error}")
    for row in report.theorems or []:
        pred = "-" if row["predicted"] is None else f"{row['predicted']:.6g}"
        lines.append(f"  {row['name']:<16} limit={row['limit']:.6g} predicted={pred} "
                     f"verdict={row['verdict']}")
    for ineq in report.inequalities or []:
        lines.append(f"  {ineq['name']:<16} violations={len(ineq['violations'])} "
                     f"worst_margin={ineq['worst_margin']:.3g}")
    if report.riccati is not None:
        lines.append(f"  riccati          passed={report.riccati['passed']}")
    lines.append(f"verdict={report.verdict} exit={report.exit_code} hash={report.determinism_hash[:16]}")
    return "\n".join(lines)


def cmd_verify(args) -> int:
    if args.workers is not None:
        os.environ[WORKERS_ENV] = str(args.workers)
    cfg = _load_config(args)
    report = run_experiment(cfg)
    write_outputs(report, cfg.output.get("json"), cfg.output.get("csv_dir"))
    print(_summary(report))
    return report.exit_code


def cmd_riccati(args) -> int:
    cfg = _load_config(args)
    section = run_riccati(cfg)
    _dump(section)
    return section["exit_code"]


def cmd_report(args) -> int:
    with open(args.source, encoding="utf-8") as fh:
        raw = json.load(fh)
    if "determinism_hash" in raw:
        report = ExperimentReport.from_dict(raw)
    else:
        report = run_experiment(ExperimentConfig.from_dict(raw))
    data = emit_report(report, args.format)
    if args.format == "json":
        if args.out in (None, "-"):
            sys.stdout.write(data.decode("utf-8"))
        else:
            with open(args.out, "wb") as fh:
                fh.write(data)
    else:
        out = args.out or "."
        os.makedirs(out, exist_ok=True)
        for name, blob in data.items():
            with open(os.path.join(out, name), "wb") as fh:
                fh.write(blob)
        print(f"wrote {len(data)} CSV tables to {out}")
    return report.exit_code


def _add_profile_args(p):
    p.add_argument("profile", help="DSL source or builtin:name[params]")
    p.add_argument("--t-max", type=float, default=DEFAULT_T_MAX,
                   help=f"domain upper end (default {DEFAULT_T_MAX:g})")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID,
                   help=f"validation grid size (default {DEFAULT_GRID})")


def _add_config_overrides(p):
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("--profile", help="override the config profile")
    p.add_argument("--r-max", dest="r_max", type=float, help="override r_max (default 1280)")
    p.add_argument("--eps", type=float, help="override mean-value eps (default 0.2)")
    p.add_argument("--a", type=float, help="override annulus inner radius (default 1)")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, help="quadrature rel tol (default 1e-10)")
    p.add_argument("--abs-tol", dest="abs_tol", type=float, help="quadrature abs tol (default 1e-12)")
    p.add_argument("--field", help="riccati field label, e.g. aniso:0.15/(1+t)^2,0.5")
    p.add_argument("--h", type=float, help="riccati step (default 1e-3)")
    p.add_argument("--ric-t-max", dest="ric_t_max", type=float, help="riccati t_max (default 50)")
    p.add_argument("--n-directions", dest="n_directions", type=int,
                   help="riccati directions (default 8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warplab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"warplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check pole conditions of a profile")
    _add_profile_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("quantities", help="curvature quantities at given radii")
    _add_profile_args(p)
    p.add_argument("--t", type=_float_list, required=True, help="comma-separated radii")
    p.set_defaults(func=cmd_quantities)

    p = sub.add_parser("verify", help="run every suite from a config")
    _add_config_overrides(p)
    p.add_argument("--json", dest="json_out", help="write the JSON report here")
    p.add_argument("--csv-dir", dest="csv_dir", help="write CSV convergence tables here")
    p.add_argument("--workers", type=int, help=f"worker threads (default ${WORKERS_ENV} or 1)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("riccati", help="run the Jacobi/Riccati suite from a config")
    _add_config_overrides(p)
    p.set_defaults(func=cmd_riccati)

    p = sub.add_parser("report", help="emit a report as JSON or CSV")
    p.add_argument("source", help="config JSON (runs it) or an existing report JSON")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="default json")
    p.add_argument("--out", help="output file (json, default stdout) or directory (csv, default .)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (WarplabError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
