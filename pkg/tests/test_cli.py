import json
import math
import subprocess
import sys

import pytest

from narrowescape import cli
from narrowescape.asymptotics import mfpt_annulus_avg, sphere_window_mfpt_avg


def geometry(tmp_path, obj, name="geom.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


ANNULUS = {"type": "annulus", "params": {"R1": 1, "R2": 2},
           "window": {"component": "inner", "center": math.pi, "half_width": 0.3}}
SPHERE_WINDOW = {"type": "decapitated_sphere", "params": {"R": 1, "delta": 0.2},
                 "window": {"component": "cap-rim", "center": math.pi, "half_width": 0.01}}


def test_asymptotic_sphere_window_total(tmp_path, capsys):
    g = geometry(tmp_path, SPHERE_WINDOW)
    code, out, _ = run(capsys, "asymptotic", "--geometry", g, "--output", "csv")
    assert code == cli.EXIT_OK
    rows = cli.read_csv(out)
    total = [r for r in rows if r["term"] == "total"][0]["value"]
    assert total == pytest.approx(24.798, abs=1e-3)
    assert sum(r["value"] for r in rows if r["term"] != "total") == pytest.approx(total, rel=1e-12)


def test_asymptotic_eps_list_and_json(tmp_path, capsys):
    g = geometry(tmp_path, ANNULUS)
    code, out, _ = run(capsys, "asymptotic", "--geometry", g, "--eps", "0.05,0.01", "--output", "json")
    assert code == 0
    recs = json.loads(out)
    assert [r["epsilon"] for r in recs] == [0.05, 0.01]
    assert recs[1]["value"] == mfpt_annulus_avg(1, 2, 0.01).value
    assert recs[1]["error_order"] == "O(ε, β⁴)·R2²/D"


def test_asymptotic_delta_override(tmp_path, capsys):
    g = geometry(tmp_path, SPHERE_WINDOW)
    code, out, _ = run(capsys, "asymptotic", "--geometry", g, "--delta", "0.3", "--eps", "0.05", "--output", "json")
    assert code == 0
    assert json.loads(out)[0]["value"] == sphere_window_mfpt_avg(1, 0.3, 0.05).value


def test_table_output(tmp_path, capsys):
    g = geometry(tmp_path, ANNULUS)
    code, out, _ = run(capsys, "asymptotic", "--geometry", g)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split() == ["epsilon", "term", "value"]
    assert set(lines[1]) <= {"-", " "}
    assert "total" in out


def test_keyvalue_geometry_with_run_block(tmp_path, capsys):
    text = ("type=disk\nR=1\nrun.paths=200\nrun.dt=0.0001\nrun.seed=3\n"
            "window.component=outer\nwindow.half_width=0.5\n")
    g = geometry(tmp_path, text, "geom.txt")
    code, out, _ = run(capsys, "simulate", "--geometry", g, "--output", "json")
    assert code == 0
    rec = json.loads(out)[0]
    assert rec["n_paths"] == 200 and rec["dt_used"] == 1e-4


def test_simulate_csv_json_round_trip_and_determinism(tmp_path, capsys):
    obj = dict(ANNULUS, run={"paths": 200, "dt": 1e-4})
    g = geometry(tmp_path, obj)
    code, csv_out, _ = run(capsys, "simulate", "--geometry", g, "--output", "csv", "--seed", "4")
    assert code == 0
    code, json_out, _ = run(capsys, "simulate", "--geometry", g, "--output", "json", "--seed", "4")
    assert cli.read_csv(csv_out) == json.loads(json_out)
    code, again, _ = run(capsys, "simulate", "--geometry", g, "--output", "csv", "--seed", "4")
    assert again == csv_out
    out_file = tmp_path / "res.csv"
    code, stdout, _ = run(capsys, "simulate", "--geometry", g, "--output", "csv", "--seed", "4",
                          "--out", str(out_file))
    assert stdout == "" and out_file.read_text() == csv_out


def test_series_command(tmp_path, capsys):
    g = geometry(tmp_path, ANNULUS)
    code, out, _ = run(capsys, "series", "--geometry", g, "--eps", "0.05", "--output", "csv")
    assert code == 0
    rows = cli.read_csv(out)
    assert [r["method"] for r in rows] == ["neumann", "collocation"]
    assert all(r["c0"] > 0 for r in rows)
    code, out, _ = run(capsys, "series", "--geometry", g, "--method", "collocation", "--N", "32",
                       "--output", "json")
    rec = json.loads(out)[0]
    assert len(rec["c"]) == 33 and "condition" in rec["residuals"]


def test_sweep_cusp_scaled_column(tmp_path, capsys):
    obj = {"type": "tangent_circles", "params": {"R": 0.5, "d": 0.5},
           "run": {"paths": 300, "dt": 1e-5, "adaptive_near_singularity": True}}
    g = geometry(tmp_path, obj)
    code, out, err = run(capsys, "sweep", "--geometry", g, "--eps", "0.2,0.1,0.05", "--output", "csv")
    assert code == 0
    rows = cli.read_csv(out)
    assert list(rows[0]) == ["epsilon", "mean", "stderr", "n_absorbed", "n_censored", "log_inv_eps",
                             "mean_times_eps"]
    assert [r["epsilon"] for r in rows] == [0.2, 0.1, 0.05]
    for r in rows:
        assert r["mean_times_eps"] == r["mean"] * r["epsilon"]
    assert 0.4 < rows[-1]["mean_times_eps"] < 0.75
    assert "slope" in err


def test_compare_pass(tmp_path, capsys):
    obj = {"type": "decapitated_sphere", "params": {"R": 1, "delta": 0.6},
           "run": {"paths": 2000, "dt": 1e-4, "start": {"coords": [2.0, 0.0]}}}
    g = geometry(tmp_path, obj)
    code, out, _ = run(capsys, "compare", "--geometry", g, "--output", "json")
    rec = json.loads(out)[0]
    assert rec["verdict"] == "PASS" and code == cli.EXIT_OK
    assert rec["error_order"] == "exact"


def test_compare_fail_for_mid_edge_window(tmp_path, capsys):
    # the corner formula does not apply to a window in the middle of the edge
    obj = {"type": "rectangle", "params": {"a": 1, "b": 1},
           "window": {"component": "top-edge", "center": 0.5, "half_width": 0.01, "convention": "arclength"},
           "run": {"paths": 2000, "dt": 1e-5}}
    g = geometry(tmp_path, obj)
    code, out, _ = run(capsys, "compare", "--geometry", g, "--output", "csv")
    assert code == cli.EXIT_FAIL
    assert cli.read_csv(out)[0]["verdict"] == "FAIL"


def test_tolerances_are_data():
    tol = cli.load_tolerances()
    assert tol["annulus"]["rel"] == 0.10 and tol["rectangle"]["rel"] == 0.07
    assert tol["decapitated_sphere"]["rel"] == 0.10


@pytest.mark.parametrize("obj,extra", [
    ({"type": "annulus", "params": {"R1": 2, "R2": 1}}, []),
    ({"type": "blob", "params": {}}, []),
    (dict(ANNULUS, run={"colour": "red"}), []),
    (ANNULUS, ["--delta", "0.3"]),
    (ANNULUS, ["--eps", "a,b"]),
    ({"type": "disk", "params": {"R": 1}}, []),
    (dict(ANNULUS, run={"paths": 10}), []),
])
def test_geometry_errors_exit_2(tmp_path, capsys, obj, extra):
    g = geometry(tmp_path, obj)
    code, _, err = run(capsys, "simulate", "--geometry", g, *extra)
    assert code == cli.EXIT_GEOMETRY
    assert "error" in err


def test_missing_file_and_resolution_exit_2(tmp_path, capsys):
    code, _, _ = run(capsys, "asymptotic", "--geometry", str(tmp_path / "nope.json"))
    assert code == cli.EXIT_GEOMETRY
    g = geometry(tmp_path, dict(ANNULUS, run={"dt": 0.1, "paths": 100}))
    code, _, err = run(capsys, "simulate", "--geometry", g)
    assert code == cli.EXIT_GEOMETRY and "dt" in err


def test_solver_failure_exit_3(tmp_path, capsys):
    g = geometry(tmp_path, {"type": "annulus", "params": {"R1": 1.7, "R2": 2},
                            "window": {"component": "inner", "half_width": 0.05}})
    code, _, err = run(capsys, "series", "--geometry", g, "--method", "neumann")
    assert code == cli.EXIT_CONVERGENCE
    assert "solver" in err


def test_censoring_exit_4(tmp_path, capsys):
    g = geometry(tmp_path, dict(ANNULUS, run={"paths": 100, "dt": 1e-4, "max_steps": 100}))
    code, _, _ = run(capsys, "simulate", "--geometry", g)
    assert code == cli.EXIT_CENSORED


def test_module_entry_point(tmp_path):
    g = geometry(tmp_path, {"type": "blob"})
    proc = subprocess.run([sys.executable, "-m", "narrowescape", "asymptotic", "--geometry", g],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "narrowescape", "asymptotic", "--geometry",
                           geometry(tmp_path, SPHERE_WINDOW, "s.json"), "--output", "csv"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "total" in proc.stdout
