"""End-to-end against real run directories written by the otoc CLI."""

import os
import subprocess
import sys

import pytest

pytest.importorskip("chaosbound")

from chaosbound_figures import FigureRecipe, PanelSpec, render
from chaosbound_figures.io import RunDir


def otoc(*args):
    proc = subprocess.run([sys.executable, "-m", "chaosbound.cli",
                           *args], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def real_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    scan = str(root / "scan")
    traj = str(root / "traj")
    inst = str(root / "inst")
    otoc("potential-scan", "-o", scan,
         "-s", "grid.nx=40", "-s", "grid.ny=32")
    otoc("rp-trajectory", "-o", traj, "-s", "t_label=0.95Tc",
         "-s", "section.t_max=4", "-s", "n_beads=8",
         "-s", "trajectory.record_every=50",
         "-s", "trajectory.n_snapshots=4")
    otoc("instanton", "-o", inst, "-s", "temperatures=0.8Tc")
    return scan, traj, inst


def test_real_manifests_verify(real_runs):
    scan, traj, inst = real_runs
    assert RunDir(scan).table("potential.csv").n_rows == 40 * 32
    assert RunDir(traj).table("path.csv").col("rg").max() > 0
    geo = RunDir(inst).table("geometry_00.csv")
    assert geo.columns == ["bead", "x", "y"]
    assert geo.n_rows >= 16


def test_render_from_real_runs(real_runs, tmp_path):
    scan, traj, inst = real_runs
    rec = FigureRecipe("real", [
        PanelSpec("pes", "potential_contour",
                  {"potential": (scan, "potential.csv")}),
        PanelSpec("rp", "trajectory_instanton",
                  {"path": (traj, "path.csv"),
                   "snapshots": (traj, "snapshots.csv"),
                   "instanton": (inst, "geometry_00.csv"),
                   "potential": (scan, "potential.csv")},
                  {"title": "trajectory vs instanton"}),
    ])
    files = render(rec, str(tmp_path / "figs"))
    assert [os.path.basename(f) for f in files] == [
        "real_pes.png", "real_rp.png"]
    assert all(os.path.getsize(f) > 5000 for f in files)


def test_cli_all_roles_against_mixed_runs(real_runs, tmp_path):
    """The fig3 entry point renders from freshly produced directories."""
    scan, traj, inst = real_runs
    # a real gyration needs a long centroid section; synthesize the rest
    sys.path.insert(0, os.path.dirname(__file__))
    from conftest import make_run, otoc_csv, section_csv, csv_text
    import json
    import numpy as np

    gyr = make_run(tmp_path / "gyr", "gyration", {
        "hist.csv": csv_text(
            "bin_lo,bin_hi,count",
            [(i * 0.1, (i + 1) * 0.1, 5) for i in range(10)]),
        "section_filtered.csv": section_csv(rg_max=0.4, seed=4),
        "split.json": json.dumps({"threshold": 0.6, "separation": 3.0,
                                  "bimodal": True})})
    sect = make_run(tmp_path / "sect", "poincare",
                    {"section.csv": section_csv(seed=5)})
    micro = make_run(tmp_path / "micro", "micro-otoc",
                     {"otoc.csv": otoc_csv(kind="rpmd_micro")})
    proc = subprocess.run(
        [sys.executable, "-m", "chaosbound_figures.cli", "fig3",
         "--section", f"classical={sect}", "--micro", f"RPMD={micro}",
         "--gyration", gyr, "--full-section", sect,
         "--trajectory", traj, "--instanton", inst, "--scan", scan,
         "-o", str(tmp_path / "figs")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(proc.stdout.splitlines()) == 5
