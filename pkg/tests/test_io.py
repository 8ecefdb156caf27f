import json

import numpy as np
import pytest

from absubdiff import config
from absubdiff.errors import ConfigError
from absubdiff.report import CheckReport, Hypothesis
from absubdiff.serialization import (
    field_to_csv,
    make_report,
    read_field_csv,
    read_sampled_csv,
    summarise,
    write_field_csv,
    write_plot_data,
    write_report,
    write_sampled_csv,
)
from absubdiff.solver import Field, SpaceTimeGrid


def random_field(seed=0):
    g = SpaceTimeGrid(2.0, 0.5, 5, 3)
    return Field(g, np.random.default_rng(seed).normal(size=g.shape) * 1e3)


def test_field_csv_is_lossless(tmp_path):
    f = random_field()
    write_field_csv(f, tmp_path / "u.csv")
    back = read_field_csv(tmp_path / "u.csv")
    assert back.grid == f.grid
    assert np.array_equal(back.values, f.values)


def test_field_csv_layout():
    lines = field_to_csv(random_field()).splitlines()
    assert lines[0] == "x,t,u"
    assert len(lines) == 1 + 6 * 4
    # time-major: the first n_x + 1 rows share t = 0
    assert {ln.split(",")[1] for ln in lines[1:7]} == {"0"}


def test_sampled_csv_round_trip(tmp_path):
    t = np.linspace(0.0, 1.0, 11)
    values = np.sin(t)
    values[0] = np.nan
    write_sampled_csv(t, values, tmp_path / "f.csv", "g")
    assert (tmp_path / "f.csv").read_text().splitlines()[:2] == ["t,g", "0,nan"]


def test_sampled_csv_rejects_nonuniform(tmp_path):
    (tmp_path / "f.csv").write_text("t,f\n0,1\n0.5,2\n0.6,3\n")
    with pytest.raises(ConfigError):
        read_sampled_csv(tmp_path / "f.csv")
    (tmp_path / "g.csv").write_text("t,f\n0.1,1\n0.2,2\n0.3,3\n")
    with pytest.raises(ConfigError):
        read_sampled_csv(tmp_path / "g.csv")


def test_plot_data_files(tmp_path):
    paths = write_plot_data(random_field(), tmp_path / "p" / "u")
    assert sorted(p.name for p in paths) == ["u_field.dat", "u_final.dat"]
    blocks = (tmp_path / "p" / "u_field.dat").read_text().strip().split("\n\n")
    assert len(blocks) == 4


def test_report_summary_and_json(tmp_path):
    ok = CheckReport("C1", 0.0, 0.0, 0.0, True, (Hypothesis("h", True, 0.0),))
    na = CheckReport("C2", float("nan"), float("nan"), float("nan"), False, (Hypothesis("h", False, 1.0),))
    s = summarise([ok, na])
    assert s == {"total": 2, "passed": 1, "failed": 0, "not_applicable": 1, "all_passed": False}
    doc = make_report([ok, na], {"k": 1}, note="x")
    write_report(doc, tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    assert back["checks"][1]["bound"] is None and back["note"] == "x"


def test_config_defaults_and_unknown_keys():
    doc = config.normalise({"problem": {"alpha": 0.5, "phi": "0"}})
    assert doc["problem"]["n_x"] == 40 and doc["solver"]["picard_tol"] == 1e-10
    with pytest.raises(ConfigError):
        config.normalise({"problem": {"alpha": 0.5, "phi": "0"}, "extra": {}})
    with pytest.raises(ConfigError):
        config.normalise({"problem": {"alpha": 0.5}})


def test_config_builds_problem():
    cfg = config.build({"problem": {"alpha": 0.4, "phi": "sin(pi*x)", "forcing": "-u^3", "n_x": 8, "n_t": 8}})
    assert not cfg.problem.linear
    assert cfg.problem.phi_values()[4] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "problem",
    [
        {"alpha": "0.5", "phi": "0"},
        {"alpha": 0.5, "phi": "0", "n_x": 4.5},
        {"alpha": 0.5, "phi": "t"},
        {"alpha": 0.5, "phi": "0", "lambda": "x"},
        {"alpha": 0.5, "phi": "sqrt(x - 2)"},
    ],
)
def test_config_rejections(problem):
    with pytest.raises(ConfigError):
        config.build({"problem": problem})


def test_config_unwritable_output(tmp_path):
    target = tmp_path / "file"
    target.write_text("")
    with pytest.raises(ConfigError):
        config.build({"problem": {"alpha": 0.5, "phi": "0"}, "outputs": {"field": str(target / "u.csv")}})
