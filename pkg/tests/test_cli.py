import io
import json
import math
import subprocess
import sys

import pytest

from hyperlagrange.cli import main


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, [json.loads(line) for line in out.getvalue().splitlines() if line.startswith("{")], out.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(text, name="p.txt"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write


def test_grad_record(problems_dir):
    code, (rec,), _ = run("grad", problems_dir / "gradient_example.txt", "--at", "x=1,y=2,z=0")
    assert code == 0
    assert rec["kind"] == "gradient" and rec["step"] == "h"
    assert rec["at"] == {"x": 1.0, "y": 2.0, "z": 0.0}
    assert [d["value"] for d in rec["partials"]] == ["4 + 4*eps", "4 + 4*eps + h + eps*h", "-delta"]
    assert [d["st"] for d in rec["partials"]] == [4.0, 4.0, 0.0]


def test_grad_positional_values_match_named(problems_dir):
    f = problems_dir / "gradient_example.txt"
    assert run("grad", f, "--at", "1,2,0")[1] == run("grad", f, "--at", "z=0,x=1,y=2")[1]


def test_grad_negative_first_value(problems_dir):
    code, (rec,), _ = run("grad", problems_dir / "gradient_example.txt", "--at", "-1,2,0")
    assert code == 0 and rec["at"]["x"] == -1.0


def test_grad_table(problems_dir):
    code, _, text = run("grad", problems_dir / "gradient_example.txt", "--at", "1,2,0", "--table")
    assert code == 0
    assert "-delta" in text and "step h" in text


@pytest.mark.parametrize("at", ["x=1,y=2,w=0", "x=1,y=2", "1,2", "x=1,y=2,z=zero", "x=1,x=2,y=0,z=0"])
def test_grad_bad_assignment(problems_dir, capsys, at):
    code, recs, _ = run("grad", problems_dir / "gradient_example.txt", "--at", at)
    assert code == 2 and recs == []
    assert capsys.readouterr().err.startswith("error: --at")


def test_grad_constant_objective_is_zero(write):
    f = write("generators: eps\nvars: x, y\nobjective: 3 + eps\n")
    code, (rec,), _ = run("grad", f, "--at", "1,2")
    assert code == 0
    assert [d["value"] for d in rec["partials"]] == ["0", "0"]


def test_solve_ellipsoid(problems_dir):
    code, recs, _ = run("solve", problems_dir / "ellipsoid.txt")
    assert code == 0
    points, diag = recs[:-1], recs[-1]
    assert len(points) == 14 and diag["kind"] == "diagnostic" and diag["points"] == 14
    top = [r for r in points if "candidate-max" in r["classification"]]
    assert len(top) == 4
    assert all(r["objective_st"] == pytest.approx(1 / (3 * math.sqrt(18)), abs=1e-9) for r in top)
    assert all(r["residual"] <= 1e-9 and r["mu"] == 1.0 for r in points)
    assert all(r["objective"].endswith("+ eps") for r in points if abs(r["objective_st"]) > 1e-9)


def test_solve_two_constraints_general(problems_dir):
    code, recs, _ = run("solve", problems_dir / "two_constraints.txt", "--general")
    assert code == 0
    points = [r for r in recs if r["kind"] == "critical-point"]
    assert len(points) == 2
    by_class = {r["classification"][0]: r for r in points}
    assert by_class["candidate-min"]["lambda_over_mu"] == pytest.approx([2 / 3, -1 / 3], abs=1e-9)
    assert by_class["candidate-max"]["lambda_over_mu"] == pytest.approx([-1, -2], abs=1e-9)
    assert not any(r["abnormal"] for r in points)


def test_solve_table(problems_dir):
    code, _, text = run("solve", problems_dir / "two_constraints.txt", "--general", "--table")
    assert code == 0
    assert "candidate-min" in text and "2 critical point(s)" in text


def test_solve_infeasible_exits_1(write):
    f = write("generators: eps\nvars: x, y\nobjective: x + y\nconstraint: x^2 + 1\n")
    code, recs, _ = run("solve", f, "--seeds", "8")
    assert code == 1
    assert recs[-1]["kind"] == "diagnostic" and recs[-1]["points"] == 0


def test_solve_too_many_constraints_exits_2(write, capsys):
    f = write("generators: eps\nvars: x\nobjective: x\nconstraint: x - 1\n")
    assert run("solve", f)[0] == 2
    assert "too many constraints" in capsys.readouterr().err


def test_parse_error_exits_2(write, capsys):
    f = write("generators: eps\nvars: x\nobjective: x +\n")
    assert run("check", f)[0] == 2
    assert "line 3, column" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path, capsys):
    assert run("check", tmp_path / "nope.txt")[0] == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_usage_exits_2(capsys):
    assert main(["frobnicate"], io.StringIO()) == 2
    assert main(["solve"], io.StringIO()) == 2


def test_check(problems_dir):
    code, (rec,), _ = run("check", problems_dir / "ellipsoid.txt")
    assert code == 0
    assert rec["vars"] == ["x", "y", "z"] and rec["constraints"] == 1 and rec["trunc"] == 4


def test_tol_override(problems_dir):
    code, recs, _ = run("solve", problems_dir / "ellipsoid.txt", "--tol", "1e-6", "--seeds", "16")
    assert code == 0 and recs[-1]["seeds"] == 16


def test_module_entry_point(problems_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "hyperlagrange", "check", str(problems_dir / "two_constraints.txt")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["constraints"] == 2
