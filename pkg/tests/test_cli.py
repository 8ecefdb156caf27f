import csv
import json

import numpy as np
import pytest

from absubdiff import cli
from absubdiff.serialization import read_field_csv

BASE = {
    "problem": {"alpha": 0.5, "n_x": 10, "n_t": 20, "phi": "4*x*(1-x)"},
    "outputs": {"field": "out/u.csv", "report": "out/report.json", "plot_data": "out/plot/u"},
}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_config(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def with_problem(**changes):
    doc = json.loads(json.dumps(BASE))
    doc["problem"].update(changes)
    return doc


def test_solve_success(workdir, capsys):
    status = cli.run(["solve", "-c", write_config(workdir / "run.json", BASE)])
    assert status == cli.EXIT_OK
    rows = (workdir / "out/u.csv").read_text().splitlines()
    assert rows[0] == "x,t,u" and len(rows) - 1 == 11 * 21
    report = json.loads((workdir / "out/report.json").read_text())
    assert report["summary"]["all_passed"]
    ids = [c["theorem_id"] for c in report["checks"]]
    assert ids[0] == "residual" and "T3.1" in ids
    assert (workdir / "out/plot/u_final.dat").exists() and (workdir / "out/plot/u_field.dat").exists()
    assert not (workdir / "out/plot/u_heatmap.png").exists()
    assert "checks passed" in capsys.readouterr().out


def test_field_csv_reads_back(workdir):
    cli.run(["solve", "-c", write_config(workdir / "run.json", BASE)])
    field = read_field_csv(workdir / "out/u.csv")
    assert field.values.shape == (21, 11)
    assert np.array_equal(field.values[0], 4 * field.grid.x * (1 - field.grid.x))


def test_report_reruns_bitwise(workdir):
    cli.run(["solve", "-c", write_config(workdir / "run.json", BASE)])
    first = (workdir / "out/report.json").read_bytes()
    field = (workdir / "out/u.csv").read_bytes()
    (workdir / "saved.json").write_bytes(first)
    assert cli.run(["solve", "-c", str(workdir / "saved.json")]) == cli.EXIT_OK
    assert (workdir / "out/report.json").read_bytes() == first
    assert (workdir / "out/u.csv").read_bytes() == field


def test_figures_are_opt_in(workdir):
    doc = json.loads(json.dumps(BASE))
    doc["outputs"]["figures"] = True
    assert cli.run(["solve", "-c", write_config(workdir / "run.json", doc)]) == cli.EXIT_OK
    for name in ("u_heatmap.png", "u_final.png"):
        assert (workdir / "out/plot" / name).read_bytes()[:4] == b"\x89PNG"


@pytest.mark.parametrize(
    "doc",
    [
        with_problem(alpha=1.5),
        with_problem(phi="4*x*(1-"),
        with_problem(phi="u + x"),
        with_problem(forcing="1/x"),
        with_problem(n_x=2),
        with_problem(bogus=1),
        {**BASE, "solver": {"damping": 2.0}},
        {**BASE, "outputs": {**BASE["outputs"], "figures": True, "plot_data": None}},
    ],
)
def test_invalid_config_exits_2_without_outputs(workdir, doc, capsys):
    assert cli.run(["solve", "-c", write_config(workdir / "run.json", doc)]) == cli.EXIT_CONFIG
    assert not (workdir / "out").exists()
    assert "error" in capsys.readouterr().err


def test_unreadable_config(workdir):
    assert cli.run(["solve", "-c", "missing.json"]) == cli.EXIT_CONFIG
    (workdir / "broken.json").write_text("{")
    assert cli.run(["solve", "-c", "broken.json"]) == cli.EXIT_CONFIG


def test_failed_check_exits_1(workdir):
    # rising boundary data let the interior exceed every datum
    doc = with_problem(phi="sin(pi*x)", mu="0.5*t", n_x=20, n_t=40)
    assert cli.run(["solve", "-c", write_config(workdir / "run.json", doc)]) == cli.EXIT_FAILED
    report = json.loads((workdir / "out/report.json").read_text())
    failed = [c["theorem_id"] for c in report["checks"] if not c["passed"]]
    assert failed == ["T3.2"]


def test_evaluation_error_exits_3(workdir):
    doc = with_problem(forcing="1/(1-t)")
    assert cli.run(["solve", "-c", write_config(workdir / "run.json", doc)]) == cli.EXIT_SOLVER
    report = json.loads((workdir / "out/report.json").read_text())
    assert report["error"]["time_index"] == 20
    assert not (workdir / "out/u.csv").exists()


def test_non_convergence_exits_3(workdir):
    doc = with_problem(forcing="-u^3")
    doc["solver"] = {"picard_max": 1}
    assert cli.run(["solve", "-c", write_config(workdir / "run.json", doc)]) == cli.EXIT_SOLVER
    report = json.loads((workdir / "out/report.json").read_text())
    assert report["error"]["type"] == "ConvergenceError"


def test_nonlinear_run_passes(workdir):
    doc = with_problem(forcing="-u^3")
    assert cli.run(["solve", "-c", write_config(workdir / "run.json", doc)]) == cli.EXIT_OK
    report = json.loads((workdir / "out/report.json").read_text())
    assert report["field_stats"]["picard_iterations"] > 0


def test_mlf_eval(capsys):
    assert cli.run(["mlf", "eval", "--alpha", "0.5", "--z", "-1"]) == cli.EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(0.42758357615580705, rel=1e-14)
    assert cli.run(["mlf", "eval", "--alpha", "3", "--z", "1"]) == cli.EXIT_CONFIG
    assert cli.run(["mlf", "eval", "--alpha", "1", "--z", "1000"]) == cli.EXIT_SOLVER


def test_fracops_apply(workdir, capsys):
    t = np.linspace(0.0, 1.0, 101)
    (workdir / "f.csv").write_text("t,f\n" + "".join(f"{a!r},1.0\n" for a in t.tolist()))
    assert cli.run(["fracops", "apply", "--op", "ab_integral", "--alpha", "0.5", "-i", "f.csv"]) == cli.EXIT_OK
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["t", "ab_integral"]
    assert float(rows[-1][1]) == pytest.approx(1.0641895835477563, abs=1e-4)
    assert cli.run(["fracops", "apply", "--op", "rl_derivative", "--alpha", "0.5", "-i", "f.csv",
                    "-o", "d.csv"]) == cli.EXIT_OK
    assert (workdir / "d.csv").read_text().splitlines()[1].endswith(",nan")


def test_fracops_apply_bad_input(workdir):
    (workdir / "f.csv").write_text("t,f\n0,1\n0.1,1\n0.3,1\n")
    assert cli.run(["fracops", "apply", "--op", "ab_integral", "--alpha", "0.5", "-i", "f.csv"]) == cli.EXIT_CONFIG
    assert cli.run(["fracops", "apply", "--op", "nope", "--alpha", "0.5", "-i", "f.csv"]) == cli.EXIT_CONFIG


def test_verify_theorems(workdir, capsys):
    assert cli.run(["verify", "theorems", "-o", "theorems.json"]) == cli.EXIT_OK
    doc = json.loads((workdir / "theorems.json").read_text())
    assert doc["summary"]["passed"] == 8 and doc["summary"]["total"] == 8
    for check in doc["checks"]:
        assert {"theorem_id", "hypotheses", "bound", "measured", "slack", "passed"} <= set(check)
    assert "8/8 passed" in capsys.readouterr().out


def test_verify_theorems_only_and_bad_id(workdir):
    assert cli.run(["verify", "theorems", "--only", "C1,C2", "-o", "t.json"]) == cli.EXIT_OK
    assert [c["theorem_id"] for c in json.loads((workdir / "t.json").read_text())["checks"]] == ["C1", "C2"]
    assert cli.run(["verify", "theorems", "--only", "T7.7"]) == cli.EXIT_CONFIG


def test_verify_lemmas(workdir):
    status = cli.run(["verify", "lemmas", "--seed", "3", "--count", "5", "--alpha", "0.3,0.8", "-o", "l.csv"])
    assert status == cli.EXIT_OK
    rows = list(csv.DictReader((workdir / "l.csv").open()))
    assert len(rows) == 5 * 2 * 3
    assert set(rows[0]) == {"function_id", "alpha", "kind", "lhs", "rhs", "slack", "passed"}
    assert all(r["passed"] == "True" for r in rows)
    assert cli.run(["verify", "lemmas", "--alpha", "1.2"]) == cli.EXIT_CONFIG


def test_sweep(workdir):
    base = json.loads(json.dumps(BASE))
    del base["outputs"]
    sweep = {"base": base, "vary": {"problem.alpha": [0.3, 0.7], "solver.damping": [1.0, 0.8]}, "output_dir": "sw"}
    status = cli.run(["sweep", "-c", write_config(workdir / "sweep.json", sweep), "--jobs", "2"])
    assert status == cli.EXIT_OK
    rows = list(csv.DictReader((workdir / "sw/summary.csv").open()))
    assert len(rows) == 4
    assert [r["problem.alpha"] for r in rows] == ["0.3", "0.3", "0.7", "0.7"]
    assert all(r["exit_status"] == "0" and float(r["residual"]) <= 1e-9 for r in rows)
    assert (workdir / "sw/run_003/field.csv").exists()


def test_sweep_validates_before_running(workdir):
    sweep = {"base": {"problem": {"alpha": 0.5, "phi": "0"}}, "vary": {"problem.alpha": [0.5, 1.5]}, "output_dir": "sw"}
    assert cli.run(["sweep", "-c", write_config(workdir / "s.json", sweep)]) == cli.EXIT_CONFIG
    assert not (workdir / "sw").exists()
    bad = {"base": {}, "vary": {"outputs.field": ["a"]}}
    assert cli.run(["sweep", "-c", write_config(workdir / "b.json", bad)]) == cli.EXIT_CONFIG


def test_help_exits_cleanly(capsys):
    assert cli.run(["--help"]) == cli.EXIT_OK
    assert "solve" in capsys.readouterr().out
