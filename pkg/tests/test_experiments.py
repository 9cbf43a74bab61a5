import json

import numpy as np
import pytest

from altphillips.errors import ManifestError, ValidationError
from altphillips.experiments import cli
from altphillips.experiments.plots import render_plots
from altphillips.experiments.runner import evaluate_assertion, run_scenario, run_suite
from altphillips.experiments.scenario import load_scenario, make_boundary_data, scenario_from_dict
from altphillips.grid import HalfGrid, ScalarField
from altphillips.operators import ApParams, PerturbedTrace

BASE = {"name": "t", "domain": {"shape": "interval", "n": 64}}


def with_(**kw):
    raw = json.loads(json.dumps(BASE))
    for k, v in kw.items():
        raw[k] = v
    return raw


def test_bundled_scenarios_load():
    for name in ("profile1d", "tangent2d", "tangent2d_ramp", "comparison1d",
                 "comparison2d_laplacian", "comparison2d_perturbed"):
        sc = load_scenario(name)
        assert sc.name == name
    assert isinstance(load_scenario("comparison2d_perturbed").operator, PerturbedTrace)


@pytest.mark.parametrize("raw", [
    with_(domain={"shape": "interval", "n": 16}),
    with_(domain={"shape": "half_disk", "dim": 1, "n": 64}),
    with_(analyses={"growth": {"radii": [0.5, 1.5]}}),
    with_(analyses={"growth": {"radii": [-0.1, 0.5]}}),
    with_(boundary_data={"kind": "spiral"}),
    with_(boundary_data={"kind": "profile", "scale": -1.0}),
    with_(params={"gamma": 2.5}),
    with_(operator={"kind": "perturbed_trace", "theta": 0.6}),
    with_(solver={"damping": 0.0}),
    {"domain": {"shape": "interval"}},
])
def test_validation_errors(raw):
    with pytest.raises(ValidationError):
        scenario_from_dict(raw)


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ValidationError):
        load_scenario(tmp_path / "nope.toml")


@pytest.mark.parametrize("kind", ["zero", "profile", "shifted_profile", "profile_ramp"])
def test_generators_vanish_on_flat_boundary(kind):
    p = ApParams(1.5)
    gen = make_boundary_data({"kind": kind, "offset": 0.01, "curvature": 1.0, "shift": -0.1}, p, 2)
    x1 = np.linspace(-1, 1, 41)
    assert np.all(gen(np.column_stack([x1, np.zeros_like(x1)])) == 0)
    th = np.linspace(0.01, np.pi - 0.01, 50)
    v = gen(np.column_stack([np.cos(th), np.sin(th)]))
    assert np.all(v >= 0)


def test_ramp_generator_matches_definition():
    p = ApParams(1.5)
    gen = make_boundary_data({"kind": "profile_ramp"}, p, 2)
    th = np.array([np.pi / 4, np.pi / 2, 2 * np.pi / 3 + 0.01, 0.9 * np.pi])
    v = gen(np.column_stack([np.cos(th), np.sin(th)]))
    ramp = np.clip(2 * np.cos(th) + 1, 0, 1)
    assert np.allclose(v, p.amplitude * np.sin(th) ** 4 * ramp)
    assert v[-1] == 0


def small_profile(n=128):
    sc = load_scenario("profile1d").with_resolution(n)
    sc.analyses.pop("stability")
    return sc


def test_run_scenario_artifacts_and_reproducibility(tmp_path):
    sc = small_profile()
    rep = run_scenario(sc, tmp_path / "a")
    run_scenario(sc, tmp_path / "b")
    assert not rep["failures"]
    assert rep["diagnostics"]["growth"]["slope"] == pytest.approx(4.0, abs=1e-2)
    assert rep["diagnostics"]["weiss"]["values"][-1] == pytest.approx(1 / 14336, abs=1e-6)
    assert len(rep["artifacts"]["plots"]) == 3
    a = (tmp_path / "a" / "report.json").read_text().replace(str(tmp_path / "a"), "")
    b = (tmp_path / "b" / "report.json").read_text().replace(str(tmp_path / "b"), "")
    assert a == b
    assert (tmp_path / "a" / "field.csv").read_bytes() == (tmp_path / "b" / "field.csv").read_bytes()
    back = json.loads((tmp_path / "a" / "report.json").read_text())
    assert back["format_version"] == 1
    for name in sc.analyses:
        assert name in back["diagnostics"]


def test_failed_analysis_is_recorded(tmp_path):
    raw = with_(analyses={"growth": {"radii": [0.25, 0.5, 1.0], "base": [0.5]}})
    rep = run_scenario(scenario_from_dict(raw), tmp_path, plots=False)
    assert rep["failures"] == {"growth": "contract_violation"}
    assert rep["diagnostics"]["growth"]["error"] == "contract_violation"


def test_tangent2d_coarse_has_cone_plot(tmp_path):
    sc = load_scenario("tangent2d").with_resolution(128)
    rep = run_scenario(sc, tmp_path)
    assert rep["diagnostics"]["free_boundary"]["count"] > 0
    assert any(p.endswith("free_boundary.svg") for p in rep["artifacts"]["plots"])
    assert (tmp_path / "free_boundary.csv").read_text().startswith("# format_version: 1\nx1,x2\n")


def test_render_plots_empty(tmp_path):
    assert render_plots({"diagnostics": {}}, tmp_path) == []


def test_suite_empty_and_missing(tmp_path):
    m = tmp_path / "empty.toml"
    m.write_text("")
    summ = run_suite(m, tmp_path / "out")
    assert summ["passed"] and summ["scenarios"] == []
    bad = tmp_path / "bad.toml"
    bad.write_text('[[scenario]]\nfile = "missing.toml"\n')
    with pytest.raises(ManifestError):
        run_suite(bad, tmp_path / "out")
    with pytest.raises(ManifestError):
        run_suite(tmp_path / "absent.toml", tmp_path / "out")


def test_suite_assertions(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text('name = "s"\n[domain]\nshape = "interval"\nn = 64\n[analyses.weiss]\nradii = [0.5, 1.0]\n')
    m = tmp_path / "m.toml"
    m.write_text('[[scenario]]\nfile = "s.toml"\nassert = ["diagnostics.weiss.nondecreasing == true", '
                 '"diagnostics.weiss.values[0] > 1"]\n')
    summ = run_suite(m, tmp_path / "out", plots=False)
    st = [a["status"] for a in summ["scenarios"][0]["assertions"]]
    assert st == ["pass", "fail"] and not summ["passed"]


def test_weiss_assertion_policy_for_nonlinear():
    rep = {"scenario": {"operator": {"kind": "perturbed_trace"}}, "diagnostics": {"weiss": {"nondecreasing": False}}}
    out = evaluate_assertion("diagnostics.weiss.nondecreasing == true", rep)
    assert out["status"] == "reported, not asserted"
    with pytest.raises(ManifestError):
        evaluate_assertion("no operator here", rep)


def test_cli_oracle(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert cli.main(["oracle", "profile", "--gamma", "1.5", "--n", "4", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[:2] == ["# format_version: 1", "x1,u"]
    assert float(lines[-1].split(",")[1]) == pytest.approx(1 / 64)
    f = ScalarField.from_csv(out)
    assert f.grid.n == 4


def test_cli_check_operator(capsys):
    assert cli.main(["check-operator", "perturbed_trace", "--theta", "0.2", "--samples", "200"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["convexity_violations"] == 0
    assert cli.main(["check-operator", "laplacian", "--samples", "50", "--dim", "3"]) == 0


def test_cli_solve_plot_and_errors(tmp_path, capsys):
    assert cli.main(["solve", "profile1d", "--n", "64", "-o", str(tmp_path / "r"), "--no-plots"]) == 0
    rep = tmp_path / "r" / "report.json"
    assert rep.exists()
    capsys.readouterr()
    assert cli.main(["plot", str(rep), "-o", str(tmp_path / "plots")]) == 0
    assert "weiss.svg" in capsys.readouterr().out
    assert cli.main(["solve", str(tmp_path / "none.toml"), "-o", str(tmp_path)]) == 2
