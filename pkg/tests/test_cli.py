import json
import math

import pytest

from affinv import records
from affinv.cli import main
from affinv.indicator import IndicatorSet


def run(*argv):
    return main([str(a) for a in argv])


def test_float_formatting():
    assert records.dumps(0.1) == "0.10000000000000001\n"
    assert records.dumps(1.0) == "1.0\n"
    assert records.dumps(1e300) == "1.0000000000000001e+300\n"
    assert records.dumps(float("nan")) == "null\n"
    assert records.dumps(3) == "3\n"
    assert records.dumps(True) == "true\n"


def test_canonical_roundtrip():
    rec = records.make_record("x", {"b": 1, "a": [1.5, None, "s"]}, {"z": {"y": 2.0, "x": -0.0}})
    text = records.dumps(rec)
    assert records.dumps(records.loads(text)) == text
    assert text.index('"a"') < text.index('"b"')


def test_params_command(tmp_path, capsys):
    assert run("params", "--p", 13, "--K", 3) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["schema_version"] == 1 and rec["command"] == "params"
    assert rec["outputs"]["params"]["N"] == "2"
    assert "wall_time" not in rec["provenance"]


def test_validation_exit_codes(tmp_path, capsys):
    assert run("params", "--p", 12, "--K", 3) == 1
    assert run("params", "--p", 13, "--K", 13) == 1
    assert run("params", "--p", 13) == 1
    assert run("bogus") == 1
    assert run("params", "--p", 13, "--K", 2, "--out", tmp_path / "missing" / "x.json") == 1
    assert run("measure", "--set", tmp_path / "nope.bits", "--K", 2) == 1


def test_runtime_exit_code(tmp_path):
    assert run("construct", "--p", 1009, "--K", 2, "--seed", 0, "--out", tmp_path / "r.json") == 2
    assert not (tmp_path / "r.json").exists()


def test_construct_byte_identical(tmp_path):
    args = ["construct", "--p", 10007, "--K", 2, "--seed", 42, "--override-T", 400]
    assert run(*args, "--out", tmp_path / "a.json", "--set-out", tmp_path / "a.bits") == 0
    assert run(*args, "--out", tmp_path / "b.json") == 0
    a, b = (tmp_path / "a.json").read_bytes(), (tmp_path / "b.json").read_bytes()
    assert a == b
    rec = json.loads(a)
    assert rec["params"]["overrides"] == {"T": "400"}
    assert records.dumps(rec).encode() == a
    A = IndicatorSet.load(tmp_path / "a.bits")
    assert A.is_symmetric() and A.cardinality == rec["outputs"]["construction"]["cardinality"]


def test_construct_both_strategies(tmp_path):
    out = tmp_path / "r.json"
    assert run("construct", "--p", 1009, "--K", 2, "--seed", 4, "--override-T", 50,
               "--strategy", "both", "--out", out) == 0
    assert json.loads(out.read_text())["outputs"]["strategies_agree"] is True


def test_measure_and_certificate(tmp_path):
    bits = tmp_path / "a.bits"
    assert run("construct", "--p", 10007, "--K", 2, "--seed", 1, "--override-T", 400,
               "--set-out", bits, "--out", tmp_path / "c.json") == 0
    assert run("measure", "--set", bits, "--K", 2, "--out", tmp_path / "m.json", "--csv", tmp_path / "m.csv") == 0
    rec = json.loads((tmp_path / "m.json").read_text())
    grid = {(g["a"], g["b"]): g for g in rec["outputs"]["defect"]["grid"]}
    assert grid[(1, 0)]["count"] == 0
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "a,b,count,defect" and len(lines) == 1 + 20

    plots = tmp_path / "plots"
    assert run("certificate", "--set", bits, "--K", 2, "--out", tmp_path / "cert.json",
               "--csv", tmp_path / "q.csv", "--plot-dir", plots) == 0
    cert = json.loads((tmp_path / "cert.json").read_text())["outputs"]["certificate"]
    assert cert["chain"]["holds"]
    per_q = (plots / "per_q.dat").read_text().splitlines()
    assert per_q[0].startswith("#") and len(per_q) == 1 + len(cert["per_prime"])
    assert len(per_q[1].split()) == 4
    mass = (plots / "mu_mass.dat").read_text().splitlines()
    assert len(mass) > 2 and all(len(r.split()) == 2 for r in mass[1:])


def test_timing_flag(tmp_path, capsys):
    assert run("--timing", "params", "--p", 13, "--K", 3) == 0
    assert json.loads(capsys.readouterr().out)["provenance"]["wall_time"] >= 0


def test_coupling_commands(tmp_path, capsys):
    assert run("coupling", "--n", 3, "--d", 2) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["outputs"]["p_exact_fraction"] == "1/4"
    assert run("coupling", "--n", 4, "--d", 2) == 1
    plots = tmp_path / "p"
    assert run("coupling", "--sweep", 21, "--csv", tmp_path / "s.csv", "--plot-dir", plots,
               "--out", tmp_path / "s.json") == 0
    rows = (plots / "coupling_ratio.dat").read_text().splitlines()
    assert rows[0] == "# n max_ratio" and len(rows) == 1 + 10


def test_oracle_command(capsys):
    assert run("oracle", "--p", 5, "--K", 1, "--size", 2, "--all-sets") == 0
    res = json.loads(capsys.readouterr().out)["outputs"]["oracle"]
    assert res["optimum_fraction"] == "2/5" and res["n_candidates"] == 10


def test_family_command(capsys):
    assert run("family", "--p", 1009, "--K", 2, "--override-T", 3) == 0
    out = json.loads(capsys.readouterr().out)["outputs"]
    assert out["collisions_F"]["injective"] and out["collisions_H"]["injective"]
    assert out["family"]["n"] == "49"


def test_sweep(tmp_path):
    csv, plots, out = tmp_path / "s.csv", tmp_path / "plots", tmp_path / "s.json"
    code = run("sweep", "--p-list", "1009,10007", "--K", 2, "--seeds", 2, "--override-T", 30,
               "--density-window", 0.1, "--csv", csv, "--plot-dir", plots, "--out", out)
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "p,seed,a,b,count,defect"
    assert len(lines) == 1 + 2 * 2 * 20
    trend = (plots / "defect_trend.dat").read_text().splitlines()
    assert len(trend) == 1 + 2
    assert math.isclose(float(trend[1].split()[0]), math.log(1009))


def test_sweep_failure_recorded(tmp_path):
    out = tmp_path / "s.json"
    assert run("sweep", "--p-list", "1009", "--K", 2, "--seeds", 1, "--out", out) == 2
    entry = json.loads(out.read_text())["outputs"]["per_p"][0]
    assert entry["error"].startswith("CollisionDetected")


def test_empty_sweep_plot(tmp_path):
    plots = tmp_path / "plots"
    assert run("sweep", "--p-list", "13", "--K", 2, "--seeds", 0, "--plot-dir", plots,
               "--out", tmp_path / "e.json") == 0
    assert (plots / "defect_trend.dat").read_text() == "# log_p median_max_defect\n"


def test_sweep_validates_before_running(tmp_path):
    assert run("sweep", "--p-list", "1009,12", "--K", 2, "--out", tmp_path / "x.json") == 1
    assert not (tmp_path / "x.json").exists()
