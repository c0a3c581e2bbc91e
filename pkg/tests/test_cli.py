import json
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st_

from lorentzian_eikonal.cli import EXIT_CONFIG, EXIT_OK, RunConfig, main
from lorentzian_eikonal.errors import ConfigError

REPORT_KEYS = {"task", "config_digest", "seed", "results", "violations", "timings"}


def base_config(task="solve", **extra):
    cfg = {
        "task": task,
        "spacetime": {"kind": "minkowski", "dim": 2},
        "surface": {"level": 1.0, "datum": {"form": "constant", "c": 0.0}},
        "grid": {"t": [-1, 1], "space": [[-1, 1]], "counts": [11, 11], "t_open_end": True},
        "options": {"reference": "t - 1"},
    }
    cfg.update(extra)
    return cfg


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def report(out):
    rep = json.loads((out / "report.json").read_text())
    assert set(rep) == REPORT_KEYS
    return rep


def test_solve_constant_benchmark(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["solve", "--config", str(write(tmp_path, base_config())), "--out", str(out)]) == EXIT_OK
    rep = report(out)
    assert rep["results"]["max_error"] < 1e-6
    assert rep["seed"] == 42 and rep["results"]["grid_shape"] == [11, 11]
    header = (out / "field.csv").read_text().splitlines()[0]
    assert header.split(",")[:3] == ["t", "x", "u"]
    line = capsys.readouterr().out
    for key in ("task=solve", "grid=", "max_residual=", "wall="):
        assert key in line


def test_solve_is_deterministic(tmp_path):
    cfg = write(tmp_path, base_config(surface={"level": 1.0, "datum": {"form": "linear", "a": [0.75]}}))
    for name in ("a", "b"):
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a" / "field.csv").read_bytes() == (tmp_path / "b" / "field.csv").read_bytes()


def test_counterexample_report(tmp_path):
    out = tmp_path / "ce"
    assert main(["counterexample", "--c", "-1", "--out", str(out)]) == EXIT_OK
    res = report(out)["results"]
    assert res["viscosity"] and res["orientation"] == "Mixed"
    assert res["disagreement_region"] == "x < -1.0" and res["disagreement_matches"]
    assert res["failed_premises"] == ["past_consistent"]
    assert (out / "counterexample.csv").exists()


def test_counterexample_rejects_nonnegative_c(tmp_path):
    assert main(["counterexample", "--c", "0.5", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_stability_table(tmp_path):
    cfg = base_config("stability", grid={"t": [-1, 0.5], "space": [[-1, 1]], "counts": [5, 7]})
    out = tmp_path / "s"
    assert main(["stability", "--config", str(write(tmp_path, cfg)), "--terms", "5", "--out", str(out)]) == EXIT_OK
    rep = report(out)
    assert rep["violations"] == []
    rows = (out / "stability.csv").read_text().splitlines()
    assert rows[0] == "n,e_n,bound" and len(rows) == 6
    for row in rows[1:]:
        n, e, b = row.split(",")
        assert float(e) <= float(b)


def test_ray_task(tmp_path):
    out = tmp_path / "r"
    cfg = write(tmp_path, base_config("ray", surface={"level": 1.0, "datum": {"form": "linear", "a": [0.75]}}))
    assert main(["ray", "--config", str(cfg), "--point", "0,0", "--out", str(out)]) == EXIT_OK
    rep = report(out)
    assert rep["results"]["calibration_defect"] < 1e-5
    assert rep["results"]["solve"]["value"] == pytest.approx(-1.25, abs=1e-6)
    assert (out / "ray.csv").read_text().startswith("s,t,x")


def test_distance_task(tmp_path):
    out = tmp_path / "d"
    cfg = write(tmp_path, {"task": "distance", "spacetime": {"kind": "minkowski", "dim": 2}})
    assert main(["distance", "--config", str(cfg), "--from", "0,0", "--to", "2,1", "--out", str(out)]) == EXIT_OK
    assert report(out)["results"]["value"] == pytest.approx(3 ** 0.5, abs=1e-12)
    rows = (out / "distance.csv").read_text().splitlines()
    assert rows[0] == "x_t,x_x,y_t,y_x,d,backend"


def test_verify_task(tmp_path):
    out = tmp_path / "v"
    cfg = base_config("verify", options={"probes": 6})
    assert main(["verify", "--config", str(write(tmp_path, cfg)), "--out", str(out)]) == EXIT_OK
    rep = report(out)
    assert rep["violations"] == [] and rep["results"]["max_residual"] < 1e-3
    assert rep["results"]["orientation"]["orientation"] == "PastConsistent"
    assert (out / "violations.csv").read_text().splitlines() == ["test,t,x,gVV"]


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LORENTZ_EIKONAL_OUT", str(tmp_path / "env"))
    assert main(["solve", "--config", str(write(tmp_path, base_config()))]) == EXIT_OK
    assert (tmp_path / "env" / "report.json").exists()


def test_config_digest_tracks_content(tmp_path):
    a = RunConfig.from_dict(base_config())
    b = RunConfig.from_dict(base_config(seed=7))
    assert a.digest != b.digest and a.digest == RunConfig.from_dict(base_config()).digest


@pytest.mark.parametrize("cfg", [
    base_config(colour="blue"),
    base_config(spacetime={"kind": "minkowski", "dim": 2, "shape": 1}),
    base_config(surface={"level": 1.0, "datum": {"form": "constant", "c": 0.0, "d": 1}}),
    base_config(surface={"level": 9.0}),
    base_config(grid={"t": [-1, 1.5], "space": [[-1, 1]], "counts": [3, 3]}),
    base_config(grid={"t": [-1, 0], "space": [[-1, 1]], "counts": [3, 3], "step": 2}),
    base_config(spacetime={"kind": "anti_de_sitter"}),
    {"task": "solve", "spacetime": {"kind": "minkowski", "dim": 2}},
    base_config(seed="x"),
])
def test_invalid_configs_exit_2(tmp_path, cfg, capsys):
    out = tmp_path / "never"
    assert main(["solve", "--config", str(write(tmp_path, cfg)), "--out", str(out)]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert not out.exists()


def test_unreadable_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad)]) == EXIT_CONFIG


@settings(max_examples=40)
@given(value=st_.one_of(st_.floats(max_value=0.0), st_.floats(min_value=1.0), st_.just(float("nan"))),
       key=st_.sampled_from(["tol_ode", "tol_dist", "tol_visc", "h_fd"]))
def test_out_of_range_tolerances_rejected(value, key):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(base_config(tolerances={key: value}))


def test_computation_error_exits_1_with_partial_report(tmp_path):
    cfg = write(tmp_path, base_config("ray"))
    out = tmp_path / "e"
    assert main(["ray", "--config", str(cfg), "--point", "1.5,0", "--out", str(out)]) == 1
    assert "error" in report(out)["results"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lorentzian_eikonal", "counterexample", "--c", "-1",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and "task=counterexample" in proc.stdout
