import json
import os
import subprocess
import sys

import pytest

from conftest import CORPUS, golden
from qafny.cli import main


def corpus(name):
    return os.path.join(CORPUS, name + ".qfy")


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_ghz_prints_two_kets(capsys):
    code, out, _ = run_cli(["run", corpus("ghz_2"), "--force"], capsys)
    assert code == 0
    data = json.loads(out)
    (loc,) = data["state"]["loci"]
    assert [k["basis"] for k in loc["kets"]] == ["00", "11"]
    assert all(abs(k["re"] - 2 ** -0.5) < 1e-9 for k in loc["kets"])


def test_run_forced_outcome(capsys):
    # the outcome is the measured register read as a little-endian integer
    code, out, _ = run_cli(["run", corpus("measure_bell"), "--force", "3"], capsys)
    assert code == 0
    (o,) = json.loads(out)["outcomes"]
    assert o["bits"] == "11" and o["prob"] == pytest.approx(0.5)


def test_run_impossible_forced_outcome_is_runtime_error(capsys):
    code, _, err = run_cli(["run", corpus("measure_bell"), "--force", "2"], capsys)
    assert code == 3 and "ForcedOutcomeImpossible" in err


def test_run_is_deterministic(capsys):
    a = run_cli(["run", corpus("measure_uniform"), "--seed", "5", "--trace"], capsys)[1]
    b = run_cli(["run", corpus("measure_uniform"), "--seed", "5", "--trace"], capsys)[1]
    assert a == b and "trace" in json.loads(a)


def test_compile_golden(tmp_path, capsys):
    out = str(tmp_path / "ghz.qasm")
    code, _, _ = run_cli(["compile", corpus("ghz_2"), "-o", out], capsys)
    assert code == 0
    assert open(out).read() == golden("ghz2.qasm")


def test_compile_ir_json(capsys):
    code, out, _ = run_cli(["compile", corpus("ghz_2"), "--emit", "ir-json"], capsys)
    data = json.loads(out)
    assert code == 0 and data["qubits"] == 2
    assert [g["gate"] for g in data["gates"]] == ["H", "CX"]


def test_typecheck_clone_violation(tmp_path, capsys):
    path = write(tmp_path, "bad_clone.qfy", "qubit x[1];\nx *= H;\nif (x[0]) { x[0] *= H; }\n")
    code, _, err = run_cli(["typecheck", path], capsys)
    assert code == 2 and "CloneViolation" in err


def test_typecheck_dump(capsys):
    code, out, _ = run_cli(["typecheck", corpus("ghz_2"), "--dump-types"], capsys)
    assert code == 0 and out.splitlines()[-1].startswith("ok\t")
    assert len(out.splitlines()) > 1


def test_parse_error_exit_1(tmp_path, capsys):
    path = write(tmp_path, "bad.qfy", "qubit x[2]\nx *= H;\n")
    code, _, err = run_cli(["parse", path], capsys)
    assert code == 1 and "ParseError" in err


def test_kind_error_exit_2(tmp_path, capsys):
    path = write(tmp_path, "bad.qfy", "qubit x[2];\nx[y] *= H;\n")
    code, _, _ = run_cli(["typecheck", path], capsys)
    assert code == 2


def test_parse_prints_canonical(capsys):
    code, out, _ = run_cli(["parse", corpus("ghz_3")], capsys)
    assert code == 0 and out == golden("ghz3.qfy")


def test_simulate(capsys):
    code, out, _ = run_cli(["simulate", corpus("ghz_2")], capsys)
    data = json.loads(out)
    assert code == 0 and [a["basis"] for a in data["amplitudes"]] == ["00", "11"]


def test_simulate_qasm_file(tmp_path, capsys):
    path = write(tmp_path, "g.qasm", golden("ghz2.qasm"))
    code, out, _ = run_cli(["simulate", path], capsys)
    assert code == 0 and len(json.loads(out)["amplitudes"]) == 2


def test_simulate_qubit_limit(capsys):
    code, _, _ = run_cli(["simulate", corpus("ghz_8"), "--max-qubits", "4"], capsys)
    assert code != 0


def test_crosscheck_corpus_tsv(tmp_path, capsys):
    out = str(tmp_path / "report.tsv")
    code, _, _ = run_cli(["crosscheck", "--corpus", CORPUS, "-o", out], capsys)
    lines = open(out).read().splitlines()
    assert code == 0
    assert lines[0] == "program\tqubits\tdistance\tresult"
    assert len(lines) - 1 == len([f for f in os.listdir(CORPUS) if f.endswith(".qfy")])
    assert all(l.endswith("\tpass") for l in lines[1:])


def test_crosscheck_failure_exit_4(tmp_path, capsys):
    path = write(tmp_path, "r.qfy", "qubit x[2];\nx *= H;\nx *= reduce(1, 2);\n")
    code, out, err = run_cli(["crosscheck", path], capsys)
    assert code == 4 and "\tfail" in out and "UnsupportedOracleLowering" in err


def test_crosscheck_needs_input(capsys):
    code, _, _ = run_cli(["crosscheck"], capsys)
    assert code != 0


def test_check_pass_and_fail(tmp_path, capsys):
    code, out, _ = run_cli(["check", corpus("assert_ghz")], capsys)
    assert code == 0 and out.count("\tpass") == 2
    path = write(tmp_path, "f.qfy", "qubit x[1];\nx *= H;\nassert { x[0] |-> |1> };\n")
    code, out, _ = run_cli(["check", path], capsys)
    assert code == 4 and "fail" in out


def test_missing_file(capsys):
    code, _, err = run_cli(["run", "/nonexistent/x.qfy"], capsys)
    assert code == 3 and "error" in err


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "qafny.cli", "run", corpus("ghz_2")], capture_output=True,
                         text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["outcomes"] == []
