import json

import numpy as np
import pytest

from critreg import Grid2D, read_field, write_field
from critreg.cli import CONFIG_SCHEMA, main


def run_cli(tmp_path, cfg, name="run", command=None, extra=()):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([command or cfg["command"], "--config", str(cfg_path), "--out", str(out), *extra])
    report = None
    if (out / "report.json").exists():
        report = json.loads((out / "report.json").read_text())
    return code, report, out


def field_file(tmp_path, func, n=129, name="u.field"):
    g = Grid2D.from_bounds(n, n, -1, 1, -1, 1)
    path = tmp_path / name
    write_field(path, g.sample(func))
    return str(path)


SADDLE_SOLVE = {
    "command": "solve",
    "problem": {"n": 2, "p": 2.0},
    "grid": {"nx": 33, "ny": 33},
    "boundary": {"kind": "oracle", "name": "saddle"},
}


# --- solve -----------------------------------------------------------------------


def test_solve_saddle(tmp_path):
    code, rep, out = run_cli(tmp_path, SADDLE_SOLVE)
    assert code == 0
    assert rep["solver"]["converged"] and rep["solver"]["newton_levels"] == 1
    assert rep["solver"]["relative_residual"] <= 1e-8
    u = read_field(out / "solution.field")
    X, Y = u.grid.mesh()
    assert np.max(np.abs(u.values - (X**2 - Y**2))) <= 1e-9
    assert rep["config"] == SADDLE_SOLVE


def test_solve_radial_continuation(tmp_path):
    cfg = {
        "command": "solve",
        "problem": {"p": 1.8},
        "grid": {"nx": 33, "ny": 33},
        "source": {"kind": "constant", "value": 1.0},
        "boundary": {"kind": "oracle", "name": "radial", "p": 1.8},
    }
    code, rep, _ = run_cli(tmp_path, cfg)
    assert code == 0
    levels = rep["solver"]["levels"]
    assert len(levels) >= 3 and all(lv["converged"] for lv in levels)
    assert all(len(lv["residuals"]) == len(lv["energies"]) for lv in levels)
    assert rep["warnings"] == []


def test_solve_non_convergence(tmp_path, capsys):
    cfg = {
        "command": "solve",
        "problem": {"p": 3.0},
        "grid": {"nx": 17, "ny": 17},
        "source": {"kind": "constant", "value": 1.0},
        "solver": {"max_newton": 1},
    }
    code, rep, out = run_cli(tmp_path, cfg)
    assert code == 3
    assert rep["solver"]["converged"] is False and "no convergence" in rep["error"]
    assert (out / "solution_failed.field").exists()


def test_manufactured_source(tmp_path):
    cfg = dict(SADDLE_SOLVE, coefficient={"kind": "affine", "c0": 2.0, "cx": 0.5},
               source={"kind": "manufactured"})
    code, rep, out = run_cli(tmp_path, cfg)
    assert code == 0
    u = read_field(out / "solution.field")
    X, Y = u.grid.mesh()
    assert np.max(np.abs(u.values - (X**2 - Y**2))) <= 1e-8


# --- validation and I/O -------------------------------------------------------


def test_q_not_above_n(tmp_path, capsys):
    cfg = dict(SADDLE_SOLVE, problem={"n": 2, "p": 2.0, "q": 2.0})
    code, rep, _ = run_cli(tmp_path, cfg)
    assert code == 2 and rep is None
    assert "minimal integrability condition on the source" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch",
    [
        {"bogus": 1},
        {"grid": {"nx": 33, "ny": 33, "spacing": 0.1}},
        {"grid": {"nx": 2, "ny": 33}},
        {"solver": {"eps0": 0.1, "tolerance": 1}},
        {"modulus": {"kind": "holder", "eps": 0.5, "extra": 1}},
        {"modulus": {"kind": "scaled", "c": 2, "inner": {"kind": "holder", "epsilon": 0.1}}},
        {"problem": {"p": "two"}},
        {"solver": {"continuation_factor": 1.5}},
    ],
)
def test_invalid_configs_rejected(tmp_path, capsys, patch):
    code, _, _ = run_cli(tmp_path, dict(SADDLE_SOLVE, **patch))
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")


def test_command_mismatch(tmp_path):
    code, _, _ = run_cli(tmp_path, SADDLE_SOLVE, command="probe")
    assert code == 2


def test_missing_config(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 4


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["solve", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_missing_field_file(tmp_path, capsys):
    code, _, _ = run_cli(tmp_path, {"command": "probe", "field": str(tmp_path / "missing.field")})
    assert code == 4
    assert "missing.field" in capsys.readouterr().err


def test_schema_rejects_unknown_keys_everywhere():
    def walk(node, path):
        if isinstance(node, dict):
            if node.get("type") == "object":
                assert node.get("additionalProperties") is False, path
            for k, v in node.items():
                walk(v, path + [k])

    walk(CONFIG_SCHEMA, [])


# --- probe ---------------------------------------------------------------------------


def test_probe_saddle(tmp_path):
    path = field_file(tmp_path, lambda x, y: x * x - y * y)
    code, rep, out = run_cli(tmp_path, {"command": "probe", "field": path})
    assert code == 0
    assert len(rep["singular_set"]) == 1 and len(rep["probe"]) == 1
    entry = rep["probe"][0]
    assert entry["sup"]["alpha_hat"] == pytest.approx(1.0, abs=1e-6)
    assert entry["sup"]["verdict"] == "pass"
    assert entry["p_mean"]["mode"] == "p_mean"
    assert (out / entry["profile_csv"]).read_text().startswith("k,r_k,tau_k,E_sup,E_pmean")


def test_probe_radial_p3(tmp_path):
    c = (2 / 3) * 2**-0.5
    path = field_file(tmp_path, lambda x, y: c * (1 - np.hypot(x, y) ** 1.5), n=257)
    code, rep, _ = run_cli(tmp_path, {"command": "probe", "problem": {"p": 3.0}, "field": path})
    assert code == 0
    assert rep["probe"][0]["sup"]["alpha_hat"] == pytest.approx(0.5, abs=0.02)
    assert rep["probe"][0]["target"]["alpha"] == pytest.approx(0.5)


def test_probe_affine_warns(tmp_path):
    path = field_file(tmp_path, lambda x, y: 2 * x - y)
    code, rep, _ = run_cli(tmp_path, {"command": "probe", "problem": {"p": 1.8}, "field": path})
    assert code == 0
    assert rep["probe"] == [] and rep["singular_set"] == []
    assert any("no singular points" in w for w in rep["warnings"])


def test_probe_warnings_once_per_occurrence(tmp_path):
    path = field_file(tmp_path, lambda x, y: x * x - y * y)
    cfg = {
        "command": "probe",
        "problem": {"p": 2.0},
        "field": path,
        "modulus": {"kind": "log_power", "beta": 1.0},
        "probe": {"K": 30, "eps0": 5.0, "points": [[0.25, 0.25]]},
    }
    code, rep, _ = run_cli(tmp_path, cfg)
    assert code == 0
    warns = rep["warnings"]
    assert sum("within_paper_range" in w for w in warns) == 1
    assert sum("truncated" in w for w in warns) == 2  # one per probed point
    assert sum("saturated" in w for w in warns) == 2
    assert all(e["profile"]["truncated"] for e in rep["probe"])


# --- check ---------------------------------------------------------------------------


def test_check_holder(tmp_path):
    cfg = {
        "command": "check",
        "problem": {"p": 2.0, "Lambda": 2.0},
        "coefficient": {"kind": "holder_bump", "amplitude": 0.5, "exponent": 0.5},
        "modulus": {"kind": "holder", "eps": 0.5},
        "check": {"R": 1.0},
    }
    code, rep, _ = run_cli(tmp_path, cfg)
    assert code == 0
    assert rep["dini"]["value"] == pytest.approx(2.0, rel=1e-6)
    assert rep["dini"]["verdict"] == "admissible"
    assert rep["structure"]["verdict"] == "pass"
    assert rep["structure"]["n_samples"] >= 10_000


def test_check_borderline_log_diverges(tmp_path):
    cfg = {"command": "check", "problem": {"p": 2.0}, "modulus": {"kind": "log_power", "beta": 1.0}}
    code, rep, _ = run_cli(tmp_path, cfg)
    assert code == 0
    assert rep["dini"]["diverges"] and rep["dini"]["verdict"] == "diverges"
    assert rep["dini"]["value"] is None and rep["dini"]["R"] == 0.5


def test_check_violation_fails(tmp_path):
    cfg = {"command": "check", "problem": {"p": 2.0, "Lambda": 2.0}, "check": {"field": "violation"}}
    code, rep, _ = run_cli(tmp_path, cfg)
    assert code == 0
    assert rep["structure"]["verdict"] == "fail"
    assert rep["structure"]["bound_growth"] > 1


def test_check_seed_changes_plan_only(tmp_path):
    cfg = {"command": "check", "problem": {"p": 3.0, "lambda": 1.0, "Lambda": 4.0},
           "coefficient": {"kind": "holder_bump"},
           "modulus": {"kind": "scaled", "c": 0.5, "inner": {"kind": "holder", "eps": 0.1}}}
    _, a, _ = run_cli(tmp_path, cfg, "a", extra=["--seed", "1"])
    _, b, _ = run_cli(tmp_path, cfg, "b", extra=["--seed", "2"])
    assert a["seed"] == 1 and b["seed"] == 2
    assert a["structure"]["verdict"] == b["structure"]["verdict"] == "pass"
    assert a["structure"]["bound_oscillation"] != b["structure"]["bound_oscillation"]


# --- oracle ---------------------------------------------------------------------------


def test_oracle_command(tmp_path):
    cfg = {"command": "oracle", "problem": {"p": 3.0}, "grid": {"nx": 65, "ny": 65},
           "oracle": {"name": "radial", "p": 3.0}}
    code, rep, out = run_cli(tmp_path, cfg)
    assert code == 0
    assert rep["oracle"]["known_decay"]["exponent"] == pytest.approx(1.5)
    u = read_field(out / "oracle.field")
    assert u.grid.shape == (65, 65)


def test_oracle_3d_has_no_field(tmp_path):
    cfg = {"command": "oracle", "problem": {"n": 3, "p": 2.5}, "oracle": {"name": "radial", "p": 2.5, "n": 3}}
    code, rep, out = run_cli(tmp_path, cfg)
    assert code == 0 and rep["oracle"]["dim"] == 3
    assert not (out / "oracle.field").exists()


# --- pipeline -------------------------------------------------------------------------

PIPELINE = {
    "command": "pipeline",
    "problem": {"n": 2, "p": 2.0, "lambda": 1.0, "Lambda": 2.0, "LambdaTilde": 1.0},
    "grid": {"nx": 129, "ny": 129},
    "coefficient": {"kind": "holder_bump", "amplitude": 0.5, "exponent": 0.1},
    "boundary": {"kind": "oracle", "name": "saddle"},
    "modulus": {"kind": "scaled", "c": 0.5, "inner": {"kind": "holder", "eps": 0.1}},
    "probe": {"points": [[0.5, 0.25]]},
    "check": {"R": 1.0},
}


def test_pipeline_two_points(tmp_path):
    code, rep, out = run_cli(tmp_path, PIPELINE)
    assert code == 0
    singular, regular = rep["probe"]
    assert singular["point"]["is_singular"] and not regular["point"]["is_singular"]
    assert singular["sup"]["alpha_hat"] >= 0.85
    assert regular["sup"]["alpha_hat"] < 0.5  # a regular point decays only linearly
    assert regular["sup"]["verdict"] == "n/a"
    assert rep["verdict"] == {"overall": "pass", "points": ["pass"], "structure": "pass"}
    assert rep["dini"]["verdict"] == "admissible"
    assert (out / "solution.field").exists()
    assert set(rep["timings"]) == {"solve", "structure", "dini"}


def test_pipeline_partial_report_on_failure(tmp_path):
    cfg = dict(PIPELINE, problem={"p": 3.0}, solver={"max_newton": 1}, source={"kind": "constant", "value": 1.0})
    code, rep, _ = run_cli(tmp_path, cfg)
    assert code == 3
    assert "solver" in rep and "probe" not in rep and "verdict" not in rep


def test_report_determinism(tmp_path):
    _, _, out_a = run_cli(tmp_path, PIPELINE, "a")
    _, _, out_b = run_cli(tmp_path, PIPELINE, "b")

    def strip(path):
        rep = json.loads((path / "report.json").read_text())
        rep.pop("timings")
        return json.dumps(rep, sort_keys=True)

    assert strip(out_a) == strip(out_b)
    for name in ("profile_0.csv", "profile_1.csv", "solution.field"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
