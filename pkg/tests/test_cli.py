import json
import math
import subprocess
import sys

import pytest

from eiscocycle.cli import main, parse_complex, parse_complex_list


def run(tmp_path, *argv):
    out = tmp_path / "records.jsonl"
    code = main([*argv, "--out", str(out)])
    records = [json.loads(line) for line in out.read_text().splitlines()]
    return code, records


def test_parse_complex():
    assert parse_complex("3+2i") == 3 + 2j
    assert parse_complex("2.5") == 2.5
    assert parse_complex_list("2.5, 3,-1i") == [2.5, 3, -1j]


def test_run_all_without_instances(tmp_path):
    code, records = run(tmp_path, "run-all")
    assert code == 0
    assert records[0]["record"] == "environment"
    assert records[-1] == {"record": "summary", "status": "nothing-run", "checks": 0, "failed": 0}


def test_validate_passes(tmp_path):
    code, records = run(tmp_path, "validate", "--instance", "worked_order")
    checks = [r for r in records if r["record"] == "check"]
    assert code == 0 and checks and all(r["status"] == "pass" for r in checks)


def test_failing_check_gives_nonzero_exit(tmp_path):
    code, records = run(tmp_path, "check-parametrization", "--instance", "worked_order",
                        "--s", "3", "--radius", "4,6")
    assert code == 1
    assert records[-1]["status"] == "fail" and records[-1]["failed"] >= 1


def test_records_are_deterministic(tmp_path):
    argv = ("check-cocycle", "--n", "2", "--trials", "20", "--seed", "4")
    _, first = run(tmp_path, *argv)
    _, second = run(tmp_path, *argv)
    assert first == second
    assert first[-1]["status"] == "pass"


def test_eval_psi_exact_value(tmp_path):
    code, records = run(tmp_path, "eval-psi", "--x", '["2", "3"]', "--tuple", "[[[1,0],[0,1]],[[0,1],[1,0]]]")
    [val] = [r for r in records if r["record"] == "value"]
    assert val["exact"] and val["d"] == [1, 1]
    assert val["value_re"] == pytest.approx(1 / 6, rel=1e-15)


def test_eval_ekl(tmp_path):
    code, records = run(tmp_path, "eval-Ekl", "--k", "0", "--l", "4", "--s", "0", "--radius", "30")
    [val] = [r for r in records if r["record"] == "value"]
    # G_4 of the square lattice: Gamma(1/4)^8 / (960 pi^2)
    g4 = math.gamma(0.25) ** 8 / (960 * math.pi ** 2)
    assert val["value_re"] == pytest.approx(g4, abs=1e-4)


def test_precision_floor():
    with pytest.raises(SystemExit):
        main(["validate", "--precision", "32"])


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "eiscocycle.cli", "run-all"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout.splitlines()[-1])["status"] == "nothing-run"


def test_run_all_cubic(tmp_path):
    code, records = run(tmp_path, "run-all", "--instance", "cubic7", "--trials", "20", "--n", "3")
    assert code == 0
    names = {r["name"] for r in records if r["record"] == "check"}
    assert any(n.startswith("nonconvergence flagged") for n in names)
    assert records[-1]["status"] == "pass"
