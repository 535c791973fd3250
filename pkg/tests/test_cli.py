import json

import numpy as np
import pytest

from conproj.cli import main
from helpers import drift_doc, round_trip_doc


@pytest.fixture()
def drift_file(tmp_path):
    path = tmp_path / "drift.json"
    path.write_text(json.dumps(drift_doc(samples=30)), encoding="utf-8")
    return path


@pytest.fixture()
def round_trip_file(tmp_path):
    rng = np.random.default_rng(103)
    doc, _ = round_trip_doc(rng, 2, samples=10)
    path = tmp_path / "round_trip.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_check_compatible_exit_zero(tmp_path, round_trip_file):
    out = tmp_path / "report.json"
    code = main(["check", str(round_trip_file), "--out", str(out), "--quiet"])
    assert code == 0
    report = read_json(out)
    assert report["verdict"] == "compatible"
    assert set(report["residuals"]) == {"A", "B", "eps"}
    assert report["residuals"]["A"] <= 1e-8
    assert report["residuals"]["eps"] == "vacuous"
    assert report["samples"] == 10
    assert isinstance(report["seed"], int)
    assert report["worst"] and {"point", "A", "B"} <= set(report["worst"][0])
    assert len(report["scenario_digest"]) == 64


def test_check_drift_exit_two(tmp_path, drift_file, capsys):
    out = tmp_path / "report.json"
    code = main(["check", str(drift_file), "--out", str(out)])
    assert code == 2
    report = read_json(out)
    assert report["verdict"] == "fails_B"
    assert report["eps"] == "holds"
    assert abs(report["residuals"]["B"] - 1.0) <= 1e-9
    assert "fails_B" in capsys.readouterr().err


def test_check_missing_file_exit_one(tmp_path, capsys):
    code = main(["check", str(tmp_path / "missing.json")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_check_schema_error_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dimension": 1}), encoding="utf-8")
    assert main(["check", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_check_report_deterministic(tmp_path, drift_file):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    main(["check", str(drift_file), "--out", str(out1), "--quiet"])
    main(["check", str(drift_file), "--out", str(out2), "--quiet"])
    a = read_json(out1)
    b = read_json(out2)
    a.pop("timestamp")
    b.pop("timestamp")
    assert a == b


def test_recover_round_trip(tmp_path):
    doc = {
        "dimension": 2,
        "coordinates": ["x1", "x2"],
        "box": {"min": [-1, -1], "max": [1, 1]},
        "metric": [["1", "0"], ["0", "1"]],
        "connection": {
            "kind": "levi_civita",
            "metric": [["exp(2*x1)", "0"], [None, "exp(2*x1)"]],
        },
        "samples": 10,
        "seed": 4,
    }
    scenario = tmp_path / "scn.json"
    scenario.write_text(json.dumps(doc), encoding="utf-8")
    out = tmp_path / "recover.json"
    code = main(
        [
            "recover",
            str(scenario),
            "--base",
            "0,0",
            "--at",
            "0.5,0",
            "--out",
            str(out),
            "--quiet",
        ]
    )
    assert code == 0
    report = read_json(out)
    assert abs(report["recovery"]["phi"] - 0.5) <= 1e-10
    assert report["recovery"]["deviation"] <= 1e-8
    expected = np.exp(1.0) * np.eye(2)
    assert np.allclose(report["recovery"]["metric"], expected, atol=1e-9)

    out2 = tmp_path / "recover0.json"
    code = main(
        ["recover", str(scenario), "--base", "0,0", "--at", "0,0", "--out", str(out2), "--quiet"]
    )
    assert code == 0
    assert read_json(out2)["recovery"]["phi"] == 0.0


def test_recover_refuses_incompatible(tmp_path, drift_file, capsys):
    code = main(
        ["recover", str(drift_file), "--base", "0,0,0", "--at", "0.5,0,0"]
    )
    assert code == 2
    err = capsys.readouterr().err
    assert "no recovery attempted" in err


def test_recover_bad_point_exit_one(drift_file, capsys):
    assert main(["recover", str(drift_file), "--base", "0,0", "--at", "0,0,0"]) == 1
    assert "error" in capsys.readouterr().err


def test_cone_command(tmp_path):
    vec = tmp_path / "vectors.json"
    vec.write_text(
        json.dumps({"dimension": 2, "vectors": [[1, 1], [1, -1]]}), encoding="utf-8"
    )
    out = tmp_path / "cone.json"
    assert main(["cone", str(vec), "--out", str(out), "--quiet"]) == 0
    report = read_json(out)
    got = np.asarray(report["metric"])
    assert np.allclose(np.abs(got), np.eye(2))
    assert got[0, 0] * got[1, 1] < 0  # indefinite, up to the sign convention

    vec.write_text(
        json.dumps({"dimension": 2, "vectors": [[1, 1], [2, 2]]}), encoding="utf-8"
    )
    assert main(["cone", str(vec), "--quiet"]) == 2

    vec.write_text(json.dumps({"dimension": 3, "vectors": [[1, 1, 0]]}), encoding="utf-8")
    assert main(["cone", str(vec), "--quiet"]) == 1


def test_gen_example_drift_family(tmp_path):
    out = tmp_path / "gen.json"
    code = main(
        ["gen-example", "--metric", "minkowski3", "--s", "0,0,x2", "--out", str(out), "--quiet"]
    )
    assert code == 0
    doc = read_json(out)
    assert doc["connection"]["kind"] == "modified_s"
    assert doc["connection"]["s"] == ["0", "0", "x2"]
    report = tmp_path / "r.json"
    assert main(["check", str(out), "--samples", "25", "--out", str(report), "--quiet"]) == 2
    assert read_json(report)["verdict"] == "fails_B"
    assert read_json(report)["eps"] == "holds"


def test_gen_example_gradient_drift_is_compatible(tmp_path):
    out = tmp_path / "gen.json"
    code = main(
        [
            "gen-example",
            "--metric",
            "euclidean2",
            "--s-grad",
            "0.3*x1*x2",
            "--out",
            str(out),
            "--quiet",
        ]
    )
    assert code == 0
    assert main(["check", str(out), "--samples", "20", "--quiet"]) == 0


def test_gen_example_zero_drift_trivially_compatible(tmp_path):
    out = tmp_path / "gen.json"
    assert (
        main(["gen-example", "--metric", "minkowski2", "--s", "0,0", "--out", str(out), "--quiet"])
        == 0
    )
    assert main(["check", str(out), "--samples", "10", "--quiet"]) == 0


def test_gen_example_from_metric_file(tmp_path):
    metric_file = tmp_path / "metric.json"
    metric_file.write_text(
        json.dumps(
            {
                "dimension": 2,
                "coordinates": ["u", "v"],
                "metric": [["-1", "0"], ["0", "1 + 0.1*u^2"]],
                "box": {"min": [-2, -2], "max": [2, 2]},
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "gen.json"
    code = main(
        ["gen-example", "--metric", str(metric_file), "--s", "0,0.5*u", "--out", str(out), "--quiet"]
    )
    assert code == 0
    doc = read_json(out)
    assert doc["coordinates"] == ["u", "v"]
    assert doc["box"]["max"] == [2, 2]
    assert main(["check", str(out), "--samples", "15", "--quiet"]) in (0, 2)


def test_tolerance_flag_changes_verdict(tmp_path, drift_file):
    # a generous residual tolerance accepts the unit closedness defect
    out = tmp_path / "r.json"
    code = main(
        ["check", str(drift_file), "--tol-residual", "2.0", "--out", str(out), "--quiet"]
    )
    assert code == 0
    assert read_json(out)["verdict"] == "compatible"


def test_gen_example_bad_expression_exit_one(tmp_path, capsys):
    out = tmp_path / "gen.json"
    assert (
        main(["gen-example", "--metric", "minkowski3", "--s", "0,0,x9", "--out", str(out)])
        == 1
    )
    assert "error" in capsys.readouterr().err


def test_usage_errors_exit_one():
    assert main(["no-such-command"]) == 1
    assert main([]) == 1
