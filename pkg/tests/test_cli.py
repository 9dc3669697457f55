import json
import math

import pytest

from zetalab.cli import run


def run_json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    assert code == 0
    return json.loads(out)


def test_funceq_invariants_from_file(tmp_path, capsys):
    f = tmp_path / "zeta.tuple"
    f.write_text("1 0\n0.5641895835477563\n0.5 0 0\n")
    body = run_json(capsys, ["funceq", "invariants", "--file", str(f)])
    assert body["schema_version"] == 1
    assert body["d"] == 1
    assert body["q2lambda"] == pytest.approx(1 / (2 * math.pi), rel=1e-12)


def test_apoints_rvm(capsys):
    body = run_json(capsys, ["apoints", "rvm", "--a", "0", "--T", "100"])
    assert body["located"] == 29
    assert abs(body["discrepancy"]) <= 3 * math.log(100)


def test_missing_file_exit_two(tmp_path, capsys):
    missing = tmp_path / "nope.tuple"
    assert run(["funceq", "invariants", "--file", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    assert run(["frobnicate"]) == 1
    assert run(["zeta", "--bogus"]) == 1
    assert run([]) == 1


def test_domain_error_exit_two(capsys):
    assert run(["zeta", "--s", "1"]) == 2
    assert run(["clt", "--T", "10"]) == 2


def test_complex_argument_forms(capsys):
    a = run_json(capsys, ["zeta", "--s", "0.5,14"])
    b = run_json(capsys, ["zeta", "--s", "0.5+14j"])
    assert a == b
    assert run(["zeta", "--s", "abc"]) == 1


def test_zeta_csv_grid(capsys):
    assert run(["zeta", "--grid", "10,20", "--n", "5", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("schema_version")
    assert len(lines) == 6


def test_output_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(["coeffs", "power", "--kappa", "2", "--N", "12", "--format", "json", "--out", str(out)]) == 0
    body = json.loads(out.read_text())
    assert body["schema_version"] == 1
    assert capsys.readouterr().out == ""


@pytest.mark.parametrize("argv", [
    ["torus", "plancherel", "--N", "50", "--samples", "500"],
    ["clt", "--T", "1000", "--samples", "300", "--im-samples", "20"],
    ["apoints", "count", "--t", "10,30", "--sigma", "0,1"],
])
def test_seed_determinism(tmp_path, argv):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run(argv + ["--seed", "5", "--out", str(a)]) == 0
    assert run(argv + ["--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    if argv[0] != "apoints":
        assert run(argv + ["--seed", "6", "--out", str(c)]) == 0
        assert a.read_bytes() != c.read_bytes()


def test_scan_lehto_threads_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["scan", "lehto", "--range", "20,300", "--mu", "loglog", "--band", "0.5,2"]
    assert run(base + ["--threads", "1", "--out", str(a)]) == 0
    assert run(base + ["--threads", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0].startswith("schema_version,tau")


def test_moments_with_bitmap(tmp_path, capsys):
    bm = tmp_path / "bitmap.csv"
    body = run_json(capsys, ["moments", "--sigma", "1.5", "--k", "1", "--T", "100", "--bitmap", str(bm)])
    assert abs(body["report"]["relative_gap"]) < 0.05
    assert bm.read_text().startswith("schema_version,block")


def test_config_env(tmp_path, monkeypatch, capsys):
    (tmp_path / "eval.json").write_text(json.dumps({"target_abs_error": 1e-8}))
    monkeypatch.setenv("ZETALAB_CONFIG_DIR", str(tmp_path))
    assert run(["zeta", "--s", "2"]) == 0
    capsys.readouterr()
    (tmp_path / "eval.json").write_text(json.dumps({"target_abs_error": -1}))
    assert run(["zeta", "--s", "2"]) == 2


@pytest.mark.parametrize("argv", [
    ["coeffs", "abscissa", "--N", "2000"],
    ["coeffs", "log", "--N", "20", "--format", "json"],
    ["funceq", "eval", "--s", "0.3+20j"],
    ["funceq", "asym", "--builtin", "zeta^2", "--s", "0.5+200j"],
    ["scan", "limit", "--mu", "const:1"],
    ["scan", "tau-seq", "--ell", "1", "--count", "3", "--format", "json"],
    ["apoints", "littlewood", "--t", "10,16", "--sigma=-0.5,3"],
    ["torus", "birkhoff", "--N", "50", "--T", "200", "--sigma", "0.8"],
    ["report", "--T", "50"],
])
def test_subcommands_run(argv, capsys):
    assert run(argv) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["schema_version"] == 1
