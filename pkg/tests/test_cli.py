import json
import subprocess
import sys

import numpy as np
import pytest

from distcheck.access import StringOracle
from distcheck.cli import main

LARGE = ["test-uniformity", "--regime", "large", "--k", "1000", "--gamma", "0.3", "--trials", "5"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_uniformity_run(tmp_path, capsys):
    csv_path, svg_path, jl = tmp_path / "r.csv", tmp_path / "r.svg", tmp_path / "v.jsonl"
    code, out, _ = run(LARGE + ["--instance", "null=uniform", "--instance", "subset:500",
                                "--out", str(csv_path), "--plot", str(svg_path),
                                "--verdicts", str(jl)], capsys)
    assert code == 0
    assert "accounting=ok" in out and out.count("\n") == 2
    assert csv_path.read_text().count("\n") == 11
    assert svg_path.read_text().startswith("<svg")
    lines = [json.loads(x) for x in jl.read_text().splitlines()]
    assert len(lines) == 10 and "wall_time" in lines[0]


def test_rerun_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(LARGE + ["--out", str(a), "--seed", "4"], capsys)[0] == 0
    assert run(LARGE + ["--out", str(b), "--seed", "4", "--jobs", "2"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_precedence(tmp_path, capsys, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"regime": "large", "k": 1000, "gamma": 0.3, "trials": 3, "seed": 11,
                                "qme": {"noise": "uniform"}}))
    paths = {name: tmp_path / f"{name}.csv" for name in ("conf", "env", "flag", "ref11", "ref5")}
    run(["test-uniformity", "--config", str(conf), "--out", str(paths["conf"])], capsys)
    run(["test-uniformity", "--config", str(conf), "--seed", "11", "--out", str(paths["ref11"])], capsys)
    run(["test-uniformity", "--config", str(conf), "--seed", "5", "--out", str(paths["ref5"])], capsys)
    monkeypatch.setenv("DISTCHECK_SEED", "5")
    run(["test-uniformity", "--config", str(conf), "--out", str(paths["env"])], capsys)
    run(["test-uniformity", "--config", str(conf), "--seed", "11", "--out", str(paths["flag"])], capsys)
    assert paths["conf"].read_bytes() == paths["ref11"].read_bytes()
    assert paths["env"].read_bytes() == paths["ref5"].read_bytes()
    assert paths["flag"].read_bytes() == paths["ref11"].read_bytes()
    assert paths["ref5"].read_bytes() != paths["ref11"].read_bytes()


def test_flags_override_config(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"regime": "large", "k": 1000, "gamma": 0.3, "trials": 50}))
    out = tmp_path / "r.csv"
    assert run(["test-uniformity", "--config", str(conf), "--trials", "2", "--k", "2000",
                "--out", str(out)], capsys)[0] == 0
    rows = out.read_text().strip().split("\n")[1:]
    assert len(rows) == 2 and all(r.split(",")[3] == "2000" for r in rows)


@pytest.mark.parametrize("argv", [
    LARGE + ["--trials", "0"],
    ["test-uniformity", "--regime", "large", "--k", "1000"],
    LARGE + ["--tester", "T=5"],
    LARGE + ["--instance", "subset:5000"],
    LARGE + ["--config", "/nonexistent.json"],
    ["test-identity", "--reference", "/nonexistent.json", "--epsilon", "0.5"],
])
def test_config_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err.startswith("error:")


def test_bad_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("DISTCHECK_SEED", "abc")
    assert run(LARGE, capsys)[0] == 2


def test_tester_override_value(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(LARGE + ["--tester", "n_override=77", "--out", str(out)], capsys)[0] == 0
    rows = [r.split(",") for r in out.read_text().strip().split("\n")[1:]]
    # n draws, then a QME on C*n = 308 at cost ceil(log2(1000)) = 10 each
    assert {r[-1] for r in rows} == {str(77 + 4 * 77 * 10)}


def test_identity_with_reference(tmp_path, capsys):
    ref = tmp_path / "q.json"
    ref.write_text(json.dumps(list(np.full(100, 0.01))))
    code, out, _ = run(["test-identity", "--reference", str(ref), "--epsilon", "0.5", "--trials", "5",
                        "--instance", "null=reference", "--instance", "subset:50"], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert "accept=1.0000" in lines[0] and "accept=0.0000" in lines[1]


def test_closeness(capsys):
    code, out, _ = run(["test-closeness-l2", "--k", "30", "--tau", "0.2", "--trials", "3",
                        "--tester", "T=20", "--instance", "null=uniform,uniform",
                        "--instance", "subset:10,uniform"], capsys)
    assert code == 0 and "accounting=ok" in out


def test_string_oracle_flag(tmp_path, capsys):
    path = tmp_path / "s.txt"
    StringOracle(100, tuple(np.repeat(np.arange(25), 4))).save(path)
    code, out, _ = run(["test-uniformity", "--regime", "giant", "--k", "100", "--theta", "3",
                        "--trials", "5", "--string-oracle", str(path)], capsys)
    assert code == 0
    assert "String(s.txt)" in out


def test_validate_lemmas(capsys):
    code, out, _ = run(["validate-lemmas", "--suite", "hashing", "--suite", "reduction"], capsys)
    assert code == 0 and "all suites passed" in out
    assert out.count("[PASS]") == 3


def test_validate_lemmas_failure(monkeypatch, capsys):
    from distcheck import testers
    real = testers.phase1_rv
    monkeypatch.setattr(testers, "phase1_rv", lambda s, c, k, n, exact=False: real(s, c, k, n + 1, exact))
    code, out, _ = run(["validate-lemmas", "--suite", "moments"], capsys)
    assert code == 1 and "[FAIL]" in out


def test_bench(tmp_path, capsys):
    out, plot = tmp_path / "b.csv", tmp_path / "b.svg"
    code, text, _ = run(["bench-scaling", "--regime", "large", "--k-grid", "512,1024,2048,4096",
                         "--gamma", "0.3", "--trials", "5", "--bootstrap", "50",
                         "--out", str(out), "--plot", str(plot)], capsys)
    assert code == 0 and "slope" in text
    assert out.read_text().startswith("schema_version,regime,sweep")
    assert "<svg" in plot.read_text()


def test_bench_bad_grid(capsys):
    assert run(["bench-scaling", "--k-grid", "10,20"], capsys)[0] == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "distcheck.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "bench-scaling" in res.stdout
