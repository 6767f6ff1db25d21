import json
import subprocess
import sys

import pytest

from rademacher_stein import formats
from rademacher_stein.cli import run
from rademacher_stein.chaos import ChaosDecomposition
from rademacher_stein.kernel import SymmetricKernel


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        p = tmp_path / name
        p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(p)

    return write


def report(capsys):
    return json.loads(capsys.readouterr().out)


def test_decompose_roundtrip(files, capsys):
    t = files("t.json", {"d": 2, "values": [1, -1, -1, 1]})
    assert run(["decompose", "--table", t, "--mode", "rational"]) == 0
    rep = report(capsys)
    assert rep["passed"] and rep["rows"][0]["id"] == "reconstruction"
    dec = formats.decomposition_from_json(rep["result"]["decomposition"], True)
    assert dec.kernel(2)[(1, 2)] == formats.parse_number("1/2", True)
    assert set(rep) >= {"command", "version", "environment", "inputs", "rows", "passed", "result", "wall_time"}
    assert len(rep["inputs"][t]) == 64


def test_failed_check_exits_one(files, capsys):
    t = files("t.json", {"d": 1, "values": [0.5, 2.0]})
    assert run(["decompose", "--table", t, "--tol", "-1"]) == 1
    assert report(capsys)["passed"] is False


def test_usage_error_exits_two(capsys):
    assert run(["contract", "--f", "x.json"]) == 2
    assert run(["no-such-command"]) == 2


@pytest.mark.parametrize("body", ['{"order": 2, "entries": [[[1, 1], 1]]}', '{"order": 2, "entries": [[[1, 2]]]}', "not json"])
def test_malformed_kernel_exits_three(files, capsys, body):
    k = files("k.json", body)
    assert run(["contract", "--f", k, "--g", k, "--r", "1", "--l", "1"]) == 3
    assert "error:" in capsys.readouterr().err


def test_missing_file_exits_three(capsys):
    assert run(["distance", "--dec", "/nonexistent/dec.json"]) == 3


def test_contract_output(files, capsys, tmp_path):
    k = files("k.json", {"order": 2, "entries": [[[1, 2], "1/2"]]})
    out = str(tmp_path / "h.json")
    assert run(["contract", "--f", k, "--g", k, "--r", "1", "--l", "1", "--mode", "rational", "--out", out]) == 0
    norms = report(capsys)["result"]["norms"]
    assert norms == {"full": "1/8", "off_diagonal": 0, "diagonal": "1/8", "sym_off_diagonal": 0}
    h = formats.general_kernel_from_json(formats.load(out), True)
    assert dict(h.items()) == {(1, 1): formats.parse_number("1/4", True), (2, 2): formats.parse_number("1/4", True)}


def test_operators_roundtrip(files, capsys, tmp_path):
    dec = ChaosDecomposition(2, 0, {2: SymmetricKernel(2, {(1, 2): 0.5})})
    p = files("dec.json", formats.decomposition_to_json(dec))
    out = str(tmp_path / "L.json")
    assert run(["operators", "--dec", p, "--op", "L", "--out", out]) == 0
    capsys.readouterr()
    assert formats.decomposition_from_json(formats.load(out)).kernel(2)[(1, 2)] == -1.0
    assert run(["operators", "--dec", out, "--op", "Linv"]) == 0
    back = formats.decomposition_from_json(report(capsys)["result"]["decomposition"])
    assert back.kernel(2)[(1, 2)] == 0.5
    assert run(["operators", "--dec", p, "--op", "Pt"]) == 3


def test_runs_bound_variance_rows(capsys):
    assert run(["bound", "--mode", "runs", "--alpha", "ones:n=100", "--no-measure"]) == 0
    rep = report(capsys)
    rows = {r["id"]: r for r in rep["rows"]}
    assert rows["VarG:squares"]["lhs"] == pytest.approx(300 / 16)
    assert rows["VarG:neighbours"]["lhs"] == pytest.approx(99 / 8)
    assert rep["result"]["VarG"] == pytest.approx(3 * 100 / 16 + 99 / 8)


def test_general_bound_measures_distance(capsys):
    assert run(["bound", "--alpha", "partial:n=9"]) == 0
    rep = report(capsys)
    assert rep["result"]["bound"]["total"] == pytest.approx(20 / 27)
    assert rep["result"]["measured_distance"] <= rep["result"]["bound"]["total"]


def test_rate_table_csv(capsys):
    assert run(["bound", "--ns", "4,8,16", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,B1,B2,total,measured_distance" and len(lines) == 4


def test_double_and_sparse_modes(files, capsys, tmp_path):
    k = files("k.json", {"order": 2, "entries": [[[1, 2], 0.5]]})
    assert run(["bound", "--kind", "double", "--kernel", k]) == 0
    assert report(capsys)["result"]["bound"]["trace"] == pytest.approx(1 / 8)
    s = str(tmp_path / "F.json")
    assert run(["sparse", "build", "--N", "64", "--out", s]) == 0
    built = report(capsys)["result"]
    assert run(["bound", "--mode", "sparse", "--set", s]) == 0
    res = report(capsys)["result"]
    assert res["card"] == built["card"] and 0 < res["stat2"] < 1


def test_distance_modes(files, capsys):
    dec = ChaosDecomposition(4, 0, {1: SymmetricKernel(1, {(i,): 0.5 for i in range(1, 5)})})
    p = files("dec.json", formats.decomposition_to_json(dec))
    assert run(["distance", "--dec", p]) == 0
    exact = report(capsys)["result"]["estimate"]
    assert run(["distance", "--dec", p, "--mode", "mc", "--samples", "20000", "--seed", "3"]) == 0
    mc = report(capsys)["result"]["estimate"]
    assert abs(mc["value"] - exact["value"]) <= 5 * mc["std_error"] + 1e-3


def test_report_file_reparses(files, tmp_path, capsys):
    rep = str(tmp_path / "rep.json")
    assert run(["verify-malliavin", "--d", "4", "--seeds", "3", "--report", rep]) == 0
    assert capsys.readouterr().out == ""
    doc = json.loads(open(rep).read())
    assert doc["passed"] and doc["environment"]["rng"].startswith("numpy.Philox")


@pytest.mark.parametrize("cmd", [
    ["verify-estimates", "--seeds", "5", "--max-order", "3", "--support", "5"],
    ["verify-malliavin", "--d", "4", "--seeds", "3"],
    ["sparse", "scale", "--Ns", "64,144"],
])
def test_seeded_csv_is_byte_identical(cmd, tmp_path, capsys):
    bodies = []
    for i in range(2):
        out = str(tmp_path / f"{i}.csv")
        assert run(cmd + ["--out", out]) in (0, 1)
        capsys.readouterr()
        bodies.append(open(out, "rb").read())
    assert bodies[0] == bodies[1] and bodies[0].count(b"\n") > 1


def test_verify_all_small():
    assert run(["verify", "all", "--d", "5", "--seeds", "4", "--report", "/dev/null"]) == 0


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "rademacher_stein.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout
