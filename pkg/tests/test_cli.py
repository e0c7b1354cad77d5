import csv
import json
import math

import pytest

from openqsl.cli import main


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_bounds_geodesic_state_pair(capsys):
    doc = {"rho0": [[1, 0], [0, 0]], "rho_tau": [[0.5, [0, -0.5]], [[0, 0.5], 0.5]], "beta": "quadratic", "grid": 513}
    code, out, _ = _run(["bounds", "--json", json.dumps(doc)], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["ratio_qsl"] == pytest.approx(1.0, abs=1e-6)
    assert report["dist_d"] == pytest.approx(math.pi / 3)


def test_bounds_identical_endpoints_all_zero(capsys):
    doc = {"rho0": [[0.7, 0.1], [0.1, 0.3]], "rho_tau": [[0.7, 0.1], [0.1, 0.3]]}
    code, out, _ = _run(["bounds", "--json", json.dumps(doc)], capsys)
    assert code == 0
    report = json.loads(out)
    assert all(v == 0.0 for k, v in report.items() if k not in ("tau", "model_tag"))


@pytest.mark.parametrize(
    "matrix, name",
    [([[0.5, 0], [0, 0.6]], "TraceNotOne"), ([[0.5, 0.2], [0, 0.5]], "NotHermitian"), ([[1.2, 0], [0, -0.2]], "NotPositive")],
)
def test_bounds_invalid_matrix_exit_2(matrix, name, capsys):
    doc = {"rho0": matrix, "rho_tau": [[0.5, 0], [0, 0.5]]}
    code, _, err = _run(["bounds", "--json", json.dumps(doc)], capsys)
    assert code == 2
    assert name in err


def test_bounds_malformed_json_exit_2(capsys):
    code, _, _ = _run(["bounds", "--json", "{not json"], capsys)
    assert code == 2


def test_bounds_named_model(tmp_path, capsys):
    path = tmp_path / "in.json"
    path.write_text(json.dumps({"model": "gad", "params": {"excited": 0.6, "q_tau": 0.5}}))
    code, out, _ = _run(["bounds", str(path)], capsys)
    assert code == 0
    assert json.loads(out)["ratio_qsl"] == pytest.approx(1.0, abs=1e-6)
    code, _, _ = _run(["bounds", "--json", json.dumps({"model": "gad", "params": {"bogus": 1}})], capsys)
    assert code == 4


def test_config_unknown_key_exit_4(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "fig2", "samples": 3}))
    code, _, err = _run(["fig2", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 4 and "samples" in err
    cfg.write_text(json.dumps({"params": {"nope": 1}}))
    assert _run(["fig2", "--config", str(cfg), "--out", str(tmp_path)], capsys)[0] == 4
    assert _run(["fig3a", "--dt", "0.1", "--out", str(tmp_path)], capsys)[0] == 4


def test_numerical_failure_exit_3(tmp_path, capsys):
    rate = tmp_path / "rate.csv"
    rate.write_text("0,-5\n1,-5\n")
    code, _, err = _run(["saturation", "--model", "gad", "--rate-csv", str(rate), "--out", str(tmp_path)], capsys)
    assert code == 3
    assert "PositivityLoss" in err


def test_fig2_outputs_deterministic_and_svg_independent(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(["fig2", "--samples", "20", "--seed", "5", "--out", str(a)], capsys)[0] == 0
    assert _run(["fig2", "--samples", "20", "--seed", "5", "--out", str(b), "--svg", "--workers", "2"], capsys)[0] == 0
    assert (a / "fig2/data.csv").read_bytes() == (b / "fig2/data.csv").read_bytes()
    assert (b / "fig2/plot.svg").read_text().startswith("<svg")
    assert not (a / "fig2/plot.svg").exists()
    rows = _rows(a / "fig2/data.csv")
    assert rows[0] == ["seed", "purity", "tau_qsl", "tau_e", "gap"]
    assert len(rows) == 21
    assert [int(r[0]) for r in rows[1:]] == list(range(5, 25))
    assert all(0.5 <= float(r[1]) <= 1.0 for r in rows[1:])
    manifest = json.loads((a / "fig2/manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["params"]["samples"] == 20
    summary = json.loads((a / "fig2/summary.json").read_text())
    assert summary["positive_fraction"] + summary["negative_fraction"] + summary["zero_gap"] / 20 == pytest.approx(1.0)


def test_csv_uses_17_significant_digits(tmp_path, capsys):
    _run(["saturation", "--model", "dephasing", "--out", str(tmp_path)], capsys)
    rows = _rows(tmp_path / "dephasing-saturation/data.csv")
    assert len(rows) == 2
    assert float(rows[1][rows[0].index("ratio")]) == pytest.approx(1.0, abs=1e-6)
    assert rows[1][rows[0].index("tau")] == "1"


def test_config_file_round_trip(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "appendix-b", "seed": 3, "params": {"scan": False, "theta": 1.0471975511965976}}))
    code, out, _ = _run(["appendix-b", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 0
    rows = _rows(tmp_path / "appendix-b/data.csv")
    assert len(rows) == 2 and rows[1][rows[0].index("is_geodesic")] == "0"
    manifest = json.loads((tmp_path / "appendix-b/manifest.json").read_text())
    assert manifest["params"]["scan"] is False and manifest["seed"] == 3


def test_appendix_b_no_damping_skips_eigenstate(tmp_path, capsys):
    argv = ["appendix-b", "--no-scan", "--param", "gamma=0", "--param", "r0=[0.7071067811865476,0,0.7071067811865476]"]
    code, out, _ = _run(argv + ["--out", str(tmp_path)], capsys)
    assert code == 0
    assert json.loads(out)["skipped"] == 1
    errors = _rows(tmp_path / "appendix-b/errors.csv")
    assert "identical endpoints" in errors[1][-1]


def test_nonmarkov_warns_and_disables_check(tmp_path, capsys):
    code, out, err = _run(["saturation", "--model", "nonmarkov", "--out", str(tmp_path)], capsys)
    assert code == 0 and "warning" in err
    summary = json.loads(out)
    assert summary["saturation_check"] == "disabled" and summary["ratio"] < 1 - 1e-3
