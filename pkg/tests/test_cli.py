"""End-to-end tests of the command-line interface.

Every test drives ``cli.main(argv)`` in-process and inspects exit codes,
stdout/stderr, and the files written to the run directory: CSV tables,
``fit.json``, ``summary.txt``, and the checksummed ``manifest.json``.
"""

import hashlib
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from chaosbound import analysis, cli
from chaosbound.series import OtocSeries, PoincareSet

TC = 1.0 / math.pi


def run_cli(capsys, *argv):
    rc = cli.main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


def ini_from(config, path):
    lines = []
    for sec, kv in config.items():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {v}" for k, v in kv.items())
    path.write_text("\n".join(lines) + "\n")
    return str(path)


# ------------------------------------------------------------ shared run

CLASSICAL_ARGS = ("-s", "temperature=0.95Tc", "-s", "n_traj=32",
                  "-s", "t_max=2.0", "-s", "dt=0.01",
                  "-s", "record_every=10", "-s", "seed=3")


@pytest.fixture(scope="module")
def classical_run(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("classical") / "run")
    rc = cli.main(["classical-otoc", "-o", out, *CLASSICAL_ARGS])
    assert rc == cli.EXIT_OK
    return out


# ------------------------------------------------------- parser and help

def test_no_subcommand_shows_help(capsys):
    rc, out, _ = run_cli(capsys)
    assert rc == cli.EXIT_CONFIG
    assert "usage:" in out
    assert "subcommand" in out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("otoc ")


def test_console_script_version():
    proc = subprocess.run([sys.executable, "-m", "chaosbound.cli",
                           "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("otoc ")


# --------------------------------------------------------------- validate

def test_validate_ok_prints_constants_and_warnings(tmp_path, capsys):
    path = ini_from({"run": {"method": "classical-otoc"},
                     "otoc": {"temperature": "0.95Tc", "dt": "0.5"}},
                    tmp_path / "c.ini")
    rc, out, err = run_cli(capsys, "validate", path)
    assert rc == cli.EXIT_OK
    assert err == ""
    assert "ok: classical-otoc config valid (nothing executed)" in out
    assert "V_b = 3.125" in out
    assert "T_c = 0.318309886" in out
    assert "warning:" in out and "dt" in out


def test_validate_requires_config(capsys):
    rc, _, err = run_cli(capsys, "validate")
    assert rc == cli.EXIT_CONFIG
    assert "validate needs a config file" in err


def test_validate_reports_field_of_bad_key(tmp_path, capsys):
    path = ini_from({"run": {"method": "classical-otoc"},
                     "otoc": {"temperature": "-0.5"}}, tmp_path / "c.ini")
    rc, _, err = run_cli(capsys, "validate", path)
    assert rc == cli.EXIT_CONFIG
    assert "config error" in err
    assert "[otoc.temperature]" in err


# ------------------------------------------------------ config rejection

def test_unknown_key_rejected(tmp_path, capsys):
    rc, _, err = run_cli(capsys, "classical-otoc", "-o",
                         str(tmp_path / "r"), "-s", "temperature=0.5",
                         "-s", "banana=3")
    assert rc == cli.EXIT_CONFIG
    assert "unknown key" in err


def test_ambiguous_bare_key_rejected(tmp_path, capsys):
    rc, _, err = run_cli(capsys, "sweep", "-o", str(tmp_path / "r"),
                         "-s", "t_max=5")
    assert rc == cli.EXIT_CONFIG
    assert "ambiguous" in err
    assert "t_max" in err


def test_quantum_requires_grid_section(tmp_path, capsys):
    rc, _, err = run_cli(capsys, "quantum-otoc", "-o", str(tmp_path / "r"),
                         "-s", "temperature=0.4")
    assert rc == cli.EXIT_CONFIG
    assert "[grid]" in err


def test_env_worker_count_must_be_integer(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("OTOC_WORKERS", "abc")
    rc, _, err = run_cli(capsys, "classical-otoc", "-o",
                         str(tmp_path / "r"), "-s", "temperature=0.5",
                         "-s", "n_traj=4", "-s", "t_max=0.1")
    assert rc == cli.EXIT_CONFIG
    assert "not an integer" in err


# ------------------------------------------------- classical run outputs

def test_classical_run_outputs(classical_run):
    for name in ("otoc.csv", "fit.json", "summary.txt", "manifest.json"):
        assert os.path.exists(os.path.join(classical_run, name))

    data = manifest(classical_run)
    assert data["format"] == "chaosbound-manifest v1"
    assert data["subcommand"] == "classical-otoc"
    assert data["seed"] == 3
    assert data["workers"] == 1
    assert data["config"]["otoc"]["temperature"] == "0.95Tc"
    assert data["config"]["run"]["method"] == "classical-otoc"
    der = data["derived"]
    assert math.isclose(der["barrier_height"], 3.125, rel_tol=1e-12)
    assert math.isclose(der["t_crossover"], TC, rel_tol=1e-12)
    assert math.isclose(der["dissociation_ridge"], 12.5, rel_tol=1e-12)
    assert der["n_beads"] == 1

    series = OtocSeries.from_csv(os.path.join(classical_run, "otoc.csv"))
    assert series.kind == "classical_thermal"
    assert series.n_samples == 32
    assert series.times[0] == 0.0
    assert series.values[0] == 1.0          # C(0) = hbar^2 exactly
    assert series.std_errors[0] == 0.0
    assert series.times.size == 21          # t_max/(dt*record_every) + 1

    with open(os.path.join(classical_run, "fit.json")) as fh:
        fit = json.load(fh)
    assert math.isclose(fit["bound"], 2.0 * math.pi * 0.95 * TC,
                        rel_tol=1e-9)   # 2*pi*kB*T/hbar with hbar = kB = 1
    assert fit["convention"] == analysis.CONVENTION


def test_manifest_checksums_recompute(classical_run):
    data = manifest(classical_run)
    outputs = data["outputs"]
    assert set(outputs) == {"otoc.csv", "fit.json", "summary.txt"}
    for name, rec in outputs.items():
        path = os.path.join(classical_run, name)
        assert sha256(path) == rec["sha256"]
        assert os.path.getsize(path) == rec["bytes"]


def test_config_echo_reproduces_run(classical_run, tmp_path, capsys):
    """The manifest echoes enough configuration to replay the run."""
    data = manifest(classical_run)
    path = ini_from(data["config"], tmp_path / "echo.ini")
    out2 = str(tmp_path / "replay")
    rc, _, _ = run_cli(capsys, "classical-otoc", "-c", path, "-o", out2)
    assert rc == cli.EXIT_OK
    assert sha256(os.path.join(out2, "otoc.csv")) == \
        data["outputs"]["otoc.csv"]["sha256"]


def test_otoc_csv_roundtrip_is_byte_stable(classical_run, tmp_path):
    src = os.path.join(classical_run, "otoc.csv")
    series = OtocSeries.from_csv(src)
    dst = tmp_path / "copy.csv"
    series.to_csv(str(dst))
    assert dst.read_bytes() == open(src, "rb").read()


def test_rerun_requires_force(tmp_path, capsys):
    out = str(tmp_path / "r")
    args = ("classical-otoc", "-o", out, "-s", "temperature=0.5",
            "-s", "n_traj=4", "-s", "t_max=0.2", "-s", "dt=0.01")
    rc, _, _ = run_cli(capsys, *args)
    assert rc == cli.EXIT_OK
    rc, _, err = run_cli(capsys, *args)
    assert rc == cli.EXIT_CONFIG
    assert "already holds a run" in err
    assert "--force" in err
    rc, _, _ = run_cli(capsys, *args, "--force")
    assert rc == cli.EXIT_OK


def test_worker_count_does_not_change_bytes(tmp_path, capsys):
    args = ("-s", "temperature=0.95Tc", "-s", "n_traj=10",
            "-s", "t_max=1.0", "-s", "dt=0.01", "-s", "record_every=10",
            "-s", "seed=11")
    d1, d2 = str(tmp_path / "w1"), str(tmp_path / "w2")
    rc1, _, _ = run_cli(capsys, "classical-otoc", "-o", d1, "-w", "1", *args)
    rc2, _, _ = run_cli(capsys, "classical-otoc", "-o", d2, "-w", "2", *args)
    assert rc1 == rc2 == cli.EXIT_OK
    b1 = open(os.path.join(d1, "otoc.csv"), "rb").read()
    b2 = open(os.path.join(d2, "otoc.csv"), "rb").read()
    assert b1 == b2
    assert manifest(d1)["workers"] == 1
    assert manifest(d2)["workers"] == 2


# ------------------------------------------------------- other pipelines

def test_rpmd_alias_and_bead_metadata(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, _ = run_cli(capsys, "rpmd", "-o", out,
                       "-s", "temperature=1.5Tc", "-s", "n_traj=6",
                       "-s", "n_beads=4", "-s", "t_max=0.5",
                       "-s", "dt=0.01", "-s", "record_every=5")
    assert rc == cli.EXIT_OK
    data = manifest(out)
    assert data["subcommand"] == "rpmd-otoc"
    der = data["derived"]
    assert der["n_beads"] == 4
    assert len(der["omega_k"]) == 4
    assert der["omega_k"][0] == 0.0
    assert all(w > 0 for w in der["omega_k"][1:])
    series = OtocSeries.from_csv(os.path.join(out, "otoc.csv"))
    assert series.kind == "rpmd_thermal"
    assert series.values[0] == 1.0


def test_micro_classical_shell_summary(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, _ = run_cli(capsys, "micro", "-o", out,
                       "-s", "kind=classical", "-s", "energy=2.0",
                       "-s", "n_traj=12", "-s", "t_max=1.0",
                       "-s", "dt=0.005", "-s", "record_every=10")
    assert rc == cli.EXIT_OK
    text = open(os.path.join(out, "summary.txt")).read()
    assert "shell H = 2 (E/V_b = 0.64)" in text
    data = manifest(out)
    assert data["subcommand"] == "micro-otoc"
    assert data["summary"]["kind"] == "classical"
    series = OtocSeries.from_csv(os.path.join(out, "otoc.csv"))
    assert series.kind == "classical_micro"


def test_micro_rpmd_shell_summary(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, _ = run_cli(capsys, "micro", "-o", out,
                       "-s", "kind=rpmd", "-s", "t_label=0.4",
                       "-s", "energy=1.0", "-s", "n_beads=4",
                       "-s", "n_traj=6", "-s", "t_max=1.0",
                       "-s", "dt=0.005", "-s", "record_every=10")
    assert rc == cli.EXIT_OK
    text = open(os.path.join(out, "summary.txt")).read()
    assert "ring-polymer shell, n_beads = 4" in text
    assert manifest(out)["summary"]["kind"] == "rpmd"
    series = OtocSeries.from_csv(os.path.join(out, "otoc.csv"))
    assert series.kind == "rpmd_micro"


def test_potential_scan_grid_and_derived(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, out_text, _ = run_cli(capsys, "potential-scan", "-o", out,
                              "-s", "nx=16", "-s", "ny=16",
                              "-s", "xmin=-3", "-s", "xmax=3",
                              "-s", "ymin=-1", "-s", "ymax=2")
    assert rc == cli.EXIT_OK
    assert "dissociation ridge = 12.5" in out_text
    lines = open(os.path.join(out, "potential.csv")).read().splitlines()
    assert lines[0] == "x,y,v"
    assert len(lines) == 1 + 16 * 16
    der = manifest(out)["derived"]
    assert der["reference_temperature"] is None
    assert der["n_beads"] == 1
    assert der["omega_k"] == [0.0]


def test_poincare_section_output(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, _ = run_cli(capsys, "poincare", "-o", out,
                       "-s", "energy=2.0", "-s", "n_traj=4",
                       "-s", "t_max=50", "-s", "max_cross=40")
    assert rc == cli.EXIT_OK
    ps = PoincareSet.from_csv(os.path.join(out, "section.csv"))
    assert ps.energy == 2.0
    assert ps.points.shape[1] == 5
    assert ps.points.shape[0] > 0
    assert np.all(ps.points[:, 4] == 0.0)   # single-bead dynamics: r_g = 0
    assert ps.meta["max_energy_drift"] < 1e-8
    assert manifest(out)["summary"]["n_points"] == ps.points.shape[0]


def test_sweep_outputs_and_series_files(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, _ = run_cli(capsys, "sweep", "-o", out,
                       "-s", "sweep.method=classical",
                       "-s", "temperatures=1.5Tc,3Tc", "-s", "n_traj=24",
                       "-s", "otoc.t_max=2.0", "-s", "dt=0.01",
                       "-s", "record_every=10")
    assert rc == cli.EXIT_OK
    header = open(os.path.join(out, "bound_report.csv")).readline().strip()
    assert header == ("temperature,t_over_tc,lambda,stderr,bound,"
                      "lambda_over_bound,accepted,window_lo,window_hi,r2,"
                      "n_points,violation")
    with open(os.path.join(out, "bound_report.json")) as fh:
        rep = json.load(fh)
    assert rep["format"] == "chaosbound-bound-report v1"
    assert rep["method"] == "classical"
    temps = rep["temperatures"]
    assert len(temps) == 2
    assert math.isclose(temps[0], 1.5 * TC, rel_tol=1e-12)
    assert math.isclose(temps[1], 3.0 * TC, rel_tol=1e-12)
    assert rep["n_violations"] == len(rep["violations"]) == 0
    assert sorted(rep["series_files"].values()) == \
        ["otoc_00.csv", "otoc_01.csv"]
    for name in ("otoc_00.csv", "otoc_01.csv"):
        series = OtocSeries.from_csv(os.path.join(out, name))
        assert series.n_samples == 24
    assert manifest(out)["summary"]["method"] == "classical"


def test_instanton_chain_outputs(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, _ = run_cli(capsys, "instanton", "-o", out,
                       "-s", "temperatures=1.05Tc,0.95Tc",
                       "-s", "n_beads=16")
    assert rc == cli.EXIT_OK
    for name in ("chain.csv", "report.json", "geometry_00.csv",
                 "geometry_01.csv", "spectrum_00.csv", "spectrum_01.csv"):
        assert os.path.exists(os.path.join(out, name))
    with open(os.path.join(out, "report.json")) as fh:
        rep = json.load(fh)
    assert rep["format"] == "chaosbound-instanton v1"
    recs = rep["records"]
    assert len(recs) == 2
    assert math.isclose(recs[0]["t_over_tc"], 1.05, rel_tol=1e-12)
    assert recs[0]["collapsed"] is True
    assert math.isclose(recs[0]["eta"], 2.0, rel_tol=1e-9)
    assert recs[1]["collapsed"] is False
    assert recs[1]["n_negative"] == 1
    assert 1.5 < recs[1]["eta"] < recs[1]["bound"]
    assert all(r["satisfied"] for r in recs)
    lines = open(os.path.join(out, "chain.csv")).read().splitlines()
    assert len(lines) == 3
    assert manifest(out)["summary"]["all_satisfied"] is True


def test_husimi_output_and_index_guard(tmp_path, capsys):
    out = str(tmp_path / "r")
    grid = ("-s", "grid.nx=32", "-s", "grid.ny=24",
            "-s", "nx_out=8", "-s", "np_out=6")
    rc, _, _ = run_cli(capsys, "husimi", "-o", out, *grid)
    assert rc == cli.EXIT_OK
    lines = open(os.path.join(out, "husimi.csv")).read().splitlines()
    assert lines[0] == "x,px,q"
    assert len(lines) == 1 + 8 * 6
    dens_lines = open(os.path.join(out, "density.csv")).read().splitlines()
    assert dens_lines[0] == "x,y,density"
    assert len(dens_lines) == 1 + 32 * 24
    dens = np.loadtxt(os.path.join(out, "density.csv"),
                      delimiter=",", skiprows=1)
    # |psi|^2 on the grid integrates to one (endpoints inclusive)
    dx, dy = 12.0 / 31, 12.0 / 23
    assert math.isclose(dens[:, 2].sum() * dx * dy, 1.0, abs_tol=1e-9)
    assert np.all(dens[:, 2] >= 0.0)
    data = manifest(out)
    assert set(data["outputs"]) == {"husimi.csv", "density.csv",
                                    "summary.txt"}
    summ = data["summary"]
    assert 0.0 < summ["state_energy"] < 12.5
    assert math.isclose(summ["e_over_vb"], summ["state_energy"] / 3.125,
                        rel_tol=1e-12)
    text = open(os.path.join(out, "summary.txt")).read()
    assert "Husimi section of eigenstate" in text

    rc, _, err = run_cli(capsys, "husimi", "-o", str(tmp_path / "r2"),
                         *grid, "-s", "state_index=5000")
    assert rc == cli.EXIT_CONFIG
    assert "out of range" in err


def test_rp_trajectory_outputs(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, _ = run_cli(capsys, "rp-trajectory", "-o", out,
                       "-s", "t_label=0.95Tc", "-s", "section.t_max=2",
                       "-s", "n_beads=8", "-s", "trajectory.traj=2",
                       "-s", "trajectory.record_every=100",
                       "-s", "trajectory.n_snapshots=3")
    assert rc == cli.EXIT_OK
    data = manifest(out)
    assert set(data["outputs"]) == {"path.csv", "snapshots.csv",
                                    "summary.txt"}
    summ = data["summary"]
    assert summ["energy_total"] == pytest.approx(8 * 3.125)
    assert summ["n_beads"] == 8
    assert summ["max_energy_drift"] < 1e-8
    lines = open(os.path.join(out, "path.csv")).read().splitlines()
    assert lines[0] == "t,x,y,px,rg"
    # 2.0 / (0.002 * 100) recorded steps plus the initial row
    assert len(lines) == 1 + 11
    assert summ["n_path_rows"] == 11
    path = np.loadtxt(os.path.join(out, "path.csv"),
                      delimiter=",", skiprows=1)
    assert np.allclose(path[:, 0], 0.2 * np.arange(11))
    assert path[0, 4] <= 1e-12          # beads start piled
    assert summ["rg_max"] == pytest.approx(path[:, 4].max())
    snap = open(os.path.join(out, "snapshots.csv")).read().splitlines()
    assert snap[0] == "snap,t,bead,x,y"
    assert len(snap) == 1 + 3 * 8       # n_snapshots * n_beads
    assert summ["n_snapshots"] == 3
    text = open(os.path.join(out, "summary.txt")).read()
    assert "shell trajectory 2" in text

    # the section time label is required configuration
    rc, _, err = run_cli(capsys, "rp-trajectory", "-o", str(tmp_path / "r2"))
    assert rc == cli.EXIT_CONFIG
    assert "t_label" in err


def test_gyration_small_sample_is_numeric_failure(tmp_path, capsys):
    out = str(tmp_path / "r")
    rc, _, err = run_cli(capsys, "gyration", "-o", out,
                         "-s", "t_label=0.25Tc", "-s", "section.n_traj=4",
                         "-s", "section.t_max=20", "-s", "n_beads=4",
                         "-s", "section.dt=0.01", "-s", "energy=1.0")
    assert rc == cli.EXIT_NUMERIC
    assert "numerical failure in gyration" in err
    assert "at least 8 samples" in err
    assert not os.path.exists(os.path.join(out, "manifest.json"))


def test_gyration_in_dir_checksum_guard(tmp_path, capsys):
    src = str(tmp_path / "section")
    rc, _, _ = run_cli(capsys, "centroid-poincare", "-o", src,
                       "-s", "t_label=0.25Tc", "-s", "n_traj=10",
                       "-s", "t_max=40", "-s", "n_beads=4",
                       "-s", "dt=0.01", "-s", "energy=1.0")
    assert rc == cli.EXIT_OK
    section = os.path.join(src, "section.csv")

    rc, _, _ = run_cli(capsys, "gyration", "-o", str(tmp_path / "g1"),
                       "-s", f"in_dir={src}")
    assert rc == cli.EXIT_OK
    with open(os.path.join(tmp_path, "g1", "split.json")) as fh:
        split = json.load(fh)
    assert split["format"] == "chaosbound-gyration v1"
    assert split["n_trajectories"] == 10
    assert split["in_dir"] == src

    blob = open(section, "rb").read()
    with open(section, "wb") as fh:
        fh.write(blob + b"x")
    rc, _, err = run_cli(capsys, "gyration", "-o", str(tmp_path / "g2"),
                         "-s", f"in_dir={src}")
    assert rc == cli.EXIT_CONFIG
    assert "checksum mismatch" in err
    assert "refusing stale or edited input" in err

    os.remove(section)
    rc, _, err = run_cli(capsys, "gyration", "-o", str(tmp_path / "g3"),
                         "-s", f"in_dir={src}")
    assert rc == cli.EXIT_CONFIG
    assert "missing section.csv" in err

    os.remove(os.path.join(src, "manifest.json"))
    rc, _, err = run_cli(capsys, "gyration", "-o", str(tmp_path / "g4"),
                         "-s", f"in_dir={src}")
    assert rc == cli.EXIT_CONFIG
    assert "no manifest.json" in err
