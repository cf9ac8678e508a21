import csv
import io
import json
import math

import pytest

from warplab import report as rp
from warplab.cli import main
from warplab.errors import DualPathError
from warplab.report import (
    EXIT_DIAGNOSTIC,
    EXIT_OK,
    EXIT_VALIDATION,
    EXIT_VERDICT,
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    run_experiment,
)


@pytest.fixture(scope="module")
def euclid_report():
    return run_experiment(ExperimentConfig(profile="builtin:euclidean"))


@pytest.fixture(scope="module")
def cone_report():
    return run_experiment(ExperimentConfig.from_dict({"profile": "builtin:cone_tanh[0.5]", "r_max": 1280}))


def by_name(report):
    return {row["name"]: row for row in report.theorems}


def test_config_defaults_and_round_trip():
    cfg = ExperimentConfig.from_dict({"profile": "t"})
    assert cfg.radii()[0] == 10.0 and cfg.radii()[-1] == 1280.0
    assert cfg.domain == pytest.approx(1.2 * 1280)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [
    {"profile": "t", "eps": 1.0},
    {"profile": "t", "eps": 0.0},
    {"profile": "t", "quad": {"rel_tol": 0.0}},
    {"profile": "t", "quad": {"abs_tol": -1.0}},
    {"profile": "t", "r_max": 100.0},
    {"profile": "t", "r_sequence": {"count": 3}},
    {"profile": "t", "bogus": 1},
    {"eps": 0.2},
    {"profile": "t", "riccati": {"h": 0.1}},
])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(bad)


def test_euclidean_report(euclid_report):
    r = euclid_report
    assert r.exit_code == EXIT_OK and r.verdict
    rows = by_name(r)
    assert abs(rows["main_theorem"]["limit"]) <= 1e-12
    assert all(row["verdict"] for row in r.theorems)
    assert all(i["passed"] for i in r.inequalities)
    assert r.pinching["flat"] and r.riccati is None


def test_cone_report(cone_report):
    rows = by_name(cone_report)
    assert rows["main_theorem"]["limit"] == pytest.approx(6 * math.pi, rel=0.01)
    assert all(i["passed"] for i in cone_report.inequalities)
    assert cone_report.exit_code == EXIT_OK


def test_validation_failure_only_has_validation():
    r = run_experiment(ExperimentConfig(profile="t + t^2"))
    assert r.exit_code == EXIT_VALIDATION and not r.verdict
    assert not r.validation["passed"]
    assert r.theorems is None and r.inequalities is None and r.quantities is None


def test_dual_path_error_surfaces_verbatim(monkeypatch):
    msg = "AVR estimates disagree: sphere-area 0.25 vs volume 0.3 (allowed 1e-06)"

    def boom(*args, **kwargs):
        raise DualPathError(msg)

    monkeypatch.setattr(rp, "estimate_avr", boom)
    r = run_experiment(ExperimentConfig(profile="builtin:euclidean"))
    assert r.exit_code == EXIT_DIAGNOSTIC and r.error == msg


def test_verdict_failure_exit_code(monkeypatch):
    monkeypatch.setattr(rp, "verdict", lambda *a, **k: False)
    r = run_experiment(ExperimentConfig(profile="builtin:euclidean"))
    assert r.exit_code == EXIT_VERDICT and not r.verdict


def test_json_round_trip(cone_report):
    data = emit_report(cone_report, "json")
    back = json.loads(data)
    assert list(back) == list(ExperimentReport._ORDER)
    again = ExperimentReport.from_dict(back)
    assert again == cone_report
    assert emit_report(again, "json") == data


def test_shortest_round_trip_floats(cone_report):
    text = emit_report(cone_report, "json").decode()
    lim = by_name(cone_report)["main_theorem"]["limit"]
    assert repr(lim) in text


def test_determinism(cone_report):
    again = run_experiment(ExperimentConfig.from_dict({"profile": "builtin:cone_tanh[0.5]", "r_max": 1280}))
    assert again.determinism_hash == cone_report.determinism_hash

    def strip(rep):
        d = rep.to_dict()
        d.pop("timing")
        return json.dumps(d)

    assert strip(again) == strip(cone_report)


def test_workers_give_same_report(monkeypatch, cone_report):
    monkeypatch.setenv(rp.WORKERS_ENV, "4")
    cfg = ExperimentConfig.from_dict({"profile": "builtin:cone_tanh[0.5]", "r_max": 1280,
                                      "quad": {"rel_tol": 1e-10, "abs_tol": 1e-12}})
    assert run_experiment(cfg).determinism_hash == cone_report.determinism_hash


def test_quad_tolerances_reach_integrals():
    loose = run_experiment(ExperimentConfig.from_dict({"profile": "builtin:cone_tanh[0.5]",
                                                       "quad": {"rel_tol": 1e-4, "abs_tol": 1e-4}}))
    tight = run_experiment(ExperimentConfig.from_dict({"profile": "builtin:cone_tanh[0.5]"}))
    assert loose.determinism_hash != tight.determinism_hash


def read_csv(blob):
    return list(csv.reader(io.StringIO(blob.decode())))


def test_csv_tables(euclid_report, cone_report):
    tables = emit_report(euclid_report, "csv")
    assert {"avr.csv", "main_theorem.csv", "corollary.csv", "radial_ricci.csv",
            "annulus_upper.csv", "annulus_lower.csv"} <= set(tables)
    rows = read_csv(tables["main_theorem.csv"])
    assert rows[0] == ["r", "value", "fit_residual"]
    assert all(abs(float(v)) <= 1e-12 for _, v, _ in rows[1:])
    avr = read_csv(emit_report(cone_report, "csv")["avr.csv"])
    assert float(avr[-1][1]) == pytest.approx(0.25, rel=5e-3)


def test_riccati_section():
    cfg = ExperimentConfig.from_dict({
        "profile": "builtin:euclidean",
        "riccati": {"field": "aniso:0.15/(1+t)^2,0.5", "h": 1e-3, "t_max": 10.0, "n_directions": 4},
    })
    section = rp.run_riccati(cfg)
    assert section["passed"] and len(section["directions"]) == 4
    assert section["exit_code"] == EXIT_OK


# --- command line ---------------------------------------------------------


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_cli_validate(capsys):
    assert main(["validate", "builtin:cone_tanh[0.5]", "--t-max", "1000"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["passed"]
    assert main(["validate", "t + t^2"]) == EXIT_VALIDATION


def test_cli_quantities(capsys):
    assert main(["quantities", "builtin:euclidean", "--t", "1,2"]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)["quantities"]
    assert [r["J"] for r in rows] == [1.0, 4.0]


def test_cli_bad_input(capsys):
    assert main(["validate", "t +"]) == 1
    assert "offset 3" in capsys.readouterr().err


def test_cli_verify_and_report(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.json", {"profile": "builtin:cone_tanh[0.5]"})
    out = tmp_path / "r.json"
    assert main(["verify", cfg, "--json", str(out), "--csv-dir", str(tmp_path / "csv")]) == EXIT_OK
    assert "verdict=True" in capsys.readouterr().out
    assert (tmp_path / "csv" / "avr.csv").exists()
    copy = tmp_path / "r2.json"
    assert main(["report", str(out), "--format", "json", "--out", str(copy)]) == EXIT_OK
    assert copy.read_bytes() == out.read_bytes()
    assert main(["report", str(out), "--format", "csv", "--out", str(tmp_path / "csv2")]) == EXIT_OK
    assert (tmp_path / "csv2" / "main_theorem.csv").read_bytes() == (tmp_path / "csv" / "main_theorem.csv").read_bytes()


def test_cli_overrides(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.json", {"profile": "builtin:euclidean"})
    out = tmp_path / "r.json"
    assert main(["verify", cfg, "--profile", "t + t^2", "--json", str(out)]) == EXIT_VALIDATION
    assert json.loads(out.read_text())["config"]["profile"] == "t + t^2"
    assert main(["verify", cfg, "--eps", "1.5"]) == 1


def test_cli_riccati(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.json", {"profile": "builtin:euclidean"})
    code = main(["riccati", cfg, "--field", "constant:0", "--ric-t-max", "5", "--n-directions", "2"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["passed"]
