import json

import pytest

from bmspectra.cli import main
from bmspectra.config import load_config, parse_body_spec
from bmspectra.errors import ConfigError
from bmspectra.report import Check, Report, csv_text, dumps, loads


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


BALL = {"schema_version": 1, "body": {"kind": "ball", "dim": 2}, "resolutions": [64],
        "suites": ["geometry", "spectral", "criteria"]}


def test_run_ball_passes(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["run", write(tmp_path, BALL), "--output", str(out), "--csv-dir", str(tmp_path / "csv")])
    assert code == 0
    rep = loads(out.read_text())
    assert rep["schema_version"] == 1 and rep["summary"]["failed"] == 0
    assert (tmp_path / "csv" / "spectral_curve.csv").exists()


def test_report_independent_of_threads(tmp_path, monkeypatch):
    cfg = dict(BALL, resolutions=[64, 128])
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", write(tmp_path, cfg), "--output", str(a)]) == 0
    monkeypatch.setenv("BM_SPECTRA_THREADS", "3")
    assert main(["run", write(tmp_path, dict(cfg, threads=3), "c.json"), "--output", str(b)]) == 0
    ra, rb = loads(a.read_text()), loads(b.read_text())
    assert ra["checks"] == rb["checks"]


@pytest.mark.parametrize("bad", [
    {"suites": ["nope"]},
    {"extra": 1},
    {"schema_version": 2},
    {"resolutions": [10]},
    {"tolerances": {"phih": -1}},
])
def test_config_errors_exit_2(tmp_path, bad, capsys):
    assert main(["run", write(tmp_path, dict(BALL, **bad))]) == 2
    assert "error" in capsys.readouterr().err


def test_failing_check_exit_1(tmp_path, capsys):
    cfg = dict(BALL, suites=["geometry"], tolerances={"legendre": 1e-300})
    cfg["body"] = {"kind": "ellipsoid", "semi_axes": [2, 1]}
    code = main(["run", write(tmp_path, cfg), "--output", str(tmp_path / "r.json")])
    assert code == 1
    assert "FAIL geometry/legendre" in capsys.readouterr().err


def test_transfer_output(capsys):
    assert main(["transfer", "--n", "3", "--alpha", "2", "--c-alpha", "0.5"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    out = json.loads(line)
    assert out["C_nu"] == pytest.approx(1 / 6) and out["p"] == pytest.approx(-3)
    assert main(["transfer", "--n", "4", "--p", "-4"]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert (out["alpha"], out["beta"], out["C_nu"]) == (2.0, 2.0, 0.125)
    assert main(["transfer", "--n", "3", "--alpha", "2", "--c-alpha", "1.5"]) == 2


def test_spectrum_and_qij(capsys):
    assert main(["spectrum", "--body", "ball:dim=2", "--resolution", "64"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["best_even_constant"] == pytest.approx(0.25, abs=1e-8)
    assert main(["qij", "--body", "lq_ball:q=3,dim=3", "--points", "20"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["offdiagonal_max"] == pytest.approx(-2, abs=1e-6)


def test_bochner_and_santalo(tmp_path, capsys):
    assert main(["bochner", "--kind", "euclidean", "--potential", "ball:dim=1"]) == 0
    assert json.loads(capsys.readouterr().out)["relative_residual"] <= 1e-8
    cfg = write(tmp_path, {"schema_version": 1, "potential": "lq_ball:q=3,dim=2,alpha=3",
                           "set_body": "lq_ball:q=3,dim=2", "perturbations": 2})
    assert main(["santalo", "--config", cfg]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["summary"] == {"checks": 4, "failed": 0, "errors": 0}


def test_parse_body_spec_forms(tmp_path):
    a = parse_body_spec("ellipsoid:semi_axes=2;1")
    b = parse_body_spec('{"kind": "ellipsoid", "semi_axes": [2, 1]}')
    assert a.describe() == b.describe()
    with pytest.raises(ConfigError):
        parse_body_spec("ball:dim")
    with pytest.raises(ConfigError):
        parse_body_spec("torus:dim=2")


def test_env_threads(monkeypatch):
    monkeypatch.setenv("BM_SPECTRA_THREADS", "4")
    assert load_config(BALL).threads == 4
    monkeypatch.setenv("BM_SPECTRA_THREADS", "x")
    with pytest.raises(ConfigError):
        load_config(BALL)


def test_report_round_trip():
    rep = Report(config={"a": 1})
    rep.add(Check("s", "c", 0.1 + 0.2, 1.0, inputs={"x": [1.0, 2.5e-17]}))
    rep.add(Check("s", "nan", float("nan"), 1.0))
    text = rep.to_json()
    data = loads(text)
    assert data["checks"][0]["value"] == 0.1 + 0.2
    assert data["checks"][1]["value"] is None and data["checks"][1]["passed"] is False
    assert dumps(data) == text


def test_csv():
    text = csv_text(["k", "v"], [[1, 0.25], [2, 1 / 3]])
    assert text.splitlines()[2] == "2,0.33333333333333331"
    assert text.endswith("\r\n")
