import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qsync import classical as C
from qsync.cli import main
from qsync.sweep import ConfigError, SweepConfig, default_jobs, emit, load_config, run_sweep

HB_TOML = """
model = "classical_hb"
measure = "bandwidth"

[[axes]]
name = "beta_bar"
min = 0.0
max = 1.0
count = 3

[[axes]]
name = "F_bar"
min = 0.1
max = 0.2
count = 2

[fixed]
lambda_bar = 0.5
"""


@pytest.fixture
def hb_config(tmp_path):
    path = tmp_path / "hb.toml"
    path.write_text(HB_TOML)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_grid_sweep_writes_one_row_per_cell(hb_config, tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", str(hb_config), "--out", str(out), "--jobs", "1"]) == 0
    rows = read_rows(out / "hb.csv")
    assert len(rows) == 6
    for row in rows:
        assert row["status"] == "ok"
        ref = C.hb_bandwidth(0.5, float(row["beta_bar"]), float(row["F_bar"]))
        assert float(row["bandwidth"]) == ref


def test_one_axis_sweep_matches_formula():
    cfg = SweepConfig.from_dict({"model": "classical_hb", "measure": "bandwidth",
                                 "axes": [{"name": "beta_bar", "min": 0, "max": 2, "count": 5}],
                                 "fixed": {"lambda_bar": 0.3, "F_bar": 0.1}})
    res = run_sweep(cfg, jobs=1)
    ref = [C.hb_bandwidth(0.3, b, 0.1) for b in np.linspace(0, 2, 5)]
    assert np.array_equal(res.values(), np.array(ref))


def test_outputs_are_byte_identical_across_jobs(hb_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", str(hb_config), "--out", str(a), "--jobs", "1", "--seed", "7"]) == 0
    assert main(["sweep", str(hb_config), "--out", str(b), "--jobs", "2", "--seed", "7"]) == 0
    for name in ("hb.csv", "hb.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seeded_classical_cells_are_deterministic(tmp_path):
    cfg = {"model": "classical_coupled", "measure": "classification",
           "axes": [{"name": "eta", "min": 0.2, "max": 1.4, "count": 2},
                    {"name": "delta", "min": 0.1, "max": 1.3, "count": 2}],
           "fixed": {"lam": 0.5}, "solver": {"seed": 3}}
    c = SweepConfig.from_dict(cfg)
    v1 = run_sweep(c, jobs=1).values()
    v2 = run_sweep(c, jobs=2).values()
    assert np.array_equal(v1, v2)
    # eta=1.4, delta=1.3 lies beyond the Hopf curve: amplitude death
    assert v1[1, 1] == 2


def test_json_sidecar_round_trip(hb_config, tmp_path):
    out = tmp_path / "o1"
    main(["sweep", str(hb_config), "--out", str(out), "--jobs", "1"])
    sidecar = out / "hb.json"
    doc = json.loads(sidecar.read_text())
    assert doc["shape"] == [3, 2]
    again = tmp_path / "o2"
    assert main(["sweep", str(sidecar), "--out", str(again), "--jobs", "1"]) == 0
    assert (again / "hb.csv").read_bytes() == (out / "hb.csv").read_bytes()
    assert load_config(sidecar) == load_config(hb_config)


@pytest.mark.parametrize("patch", [
    ("model = \"classical_hb\"", "model = \"nonsense\""),
    ("measure = \"bandwidth\"", "measure = \"sigma\""),
    ("count = 3", "count = 1"),
    ("lambda_bar = 0.5", "kappa = 0.5"),
    ("name = \"beta_bar\"", "name = \"lam\""),
])
def test_invalid_config_exits_2(tmp_path, patch, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(HB_TOML.replace(*patch))
    assert main(["sweep", str(path), "--out", str(tmp_path)]) == 2
    assert "qsync sweep" in capsys.readouterr().err


def test_unreadable_and_malformed_configs(tmp_path):
    assert main(["sweep", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("model = [")
    assert main(["sweep", str(bad)]) == 2
    assert main(["sweep", str(bad), "--format", "xml"]) == 2
    assert main(["bogus"]) == 2


def test_failing_cells_are_isolated(tmp_path):
    path = tmp_path / "part.toml"
    path.write_text(HB_TOML.replace("min = 0.0\nmax = 1.0\ncount = 3", "min = 0.0\nmax = 1.0\n"
                                    "count = 3").replace("lambda_bar = 0.5", "lambda_bar = 0.5"))
    cfg = SweepConfig.from_dict({"model": "classical_hb", "measure": "bandwidth",
                                 "axes": [{"name": "lambda_bar", "min": 0.0, "max": 1.0,
                                           "count": 3}],
                                 "fixed": {"beta_bar": 0.2, "F_bar": 0.1}})
    res = run_sweep(cfg, jobs=1)
    assert res.n_failed == 1
    assert res.cells[0]["status"] == "error:ValueError"
    assert np.isnan(res.values()[0]) and np.all(np.isfinite(res.values()[1:]))
    paths = emit(res, tmp_path / "iso", ("csv",), stem="iso")
    rows = read_rows(paths[0])
    assert [r["status"] for r in rows] == ["error:ValueError", "ok", "ok"]


def test_all_cells_failing_exits_3(tmp_path):
    path = tmp_path / "dead.toml"
    path.write_text(HB_TOML.replace('name = "beta_bar"\nmin = 0.0\nmax = 1.0',
                                    'name = "lambda_bar"\nmin = -1.0\nmax = 0.0')
                    .replace("lambda_bar = 0.5", "beta_bar = 0.5"))
    assert main(["sweep", str(path), "--out", str(tmp_path / "o")]) == 3


def test_quantum_cells_report_residual(tmp_path):
    cfg = SweepConfig.from_dict({"model": "coupled_reactive", "measure": "sigma",
                                 "axes": [{"name": "lam", "min": 0.5, "max": 1.0, "count": 2}],
                                 "fixed": {"r": 0.3, "delta": 0.05, "g": 0.4},
                                 "solver": {"N": 5}})
    res = run_sweep(cfg, jobs=1)
    assert res.n_failed == 0
    assert all(c["diag"]["residual"] < 1e-9 for c in res.cells)


def test_qsync_jobs_environment(monkeypatch):
    monkeypatch.setenv("QSYNC_JOBS", "3")
    assert default_jobs() == 3
    monkeypatch.setenv("QSYNC_JOBS", "zero")
    with pytest.raises(ConfigError):
        default_jobs()
    monkeypatch.delenv("QSYNC_JOBS")
    assert default_jobs() >= 1


def test_oracle_command(capsys):
    assert main(["oracle", "hb_bandwidth", "0.5", "1.0", "0.2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == C.hb_bandwidth(0.5, 1.0, 0.2)
    assert main(["oracle", "two_level_sigma", "delta_bar=0", "eta_bar=1"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(2 / 31)


def test_oracle_errors():
    assert main(["oracle", "no_such_oracle"]) == 2
    assert main(["oracle", "hb_bandwidth", "0.5", "x", "0.2"]) == 2
    assert main(["oracle", "hb_bandwidth", "0.5", "1", "0.2", "9"]) == 2
    assert main(["oracle", "hb_bandwidth", "0", "1", "0.2"]) == 3


def test_converge_command(capsys):
    assert main(["converge", "deep_quantum", "kappa=1", "gamma=100", "delta=0", "eta=2",
                 "--n-start", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert 3 <= out["N"] <= 8
    assert main(["converge", "nonsense"]) == 2
    assert main(["converge", "approx_dvdp", "lam=0", "r=1", "--n-start", "6",
                 "--n-cap", "10"]) == 3


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qsync.cli", "oracle", "pl_frequency", "0.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == 0.984375
