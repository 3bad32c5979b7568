"""The otoc-figures command line: recipes, flags, exit codes."""

import os
import subprocess
import sys

import pytest

from chaosbound_figures import cli

from conftest import make_run, otoc_csv


def run_cli(capsys, *argv):
    rc = cli.main(list(argv))
    cap = capsys.readouterr()
    return rc, cap.out, cap.err


def test_fig1_cli(grid_run, husimi_run, section_run, tmp_path, capsys):
    out = str(tmp_path / "figs")
    rc, stdout, _ = run_cli(capsys, "fig1", "--scan", grid_run,
                            "--husimi", husimi_run,
                            "--section", section_run, "-o", out)
    assert rc == cli.EXIT_OK
    written = stdout.splitlines()
    assert len(written) == 4
    assert all(os.path.isfile(p) for p in written)


def test_fig2_cli_and_max_curves(sweep_run, tmp_path, capsys):
    out = str(tmp_path / "figs")
    rc, stdout, _ = run_cli(capsys, "fig2", "--sweep", sweep_run,
                            "--max-curves", "2", "-o", out)
    assert rc == cli.EXIT_OK
    assert len(stdout.splitlines()) == 2


def test_fig3_cli(section_run, gyration_run, trajectory_run,
                  instanton_run, tmp_path, capsys):
    micro = make_run(tmp_path / "micro", "micro-otoc",
                     {"otoc.csv": otoc_csv(kind="classical_micro")})
    out = str(tmp_path / "figs")
    rc, stdout, _ = run_cli(
        capsys, "fig3",
        "--section", f"classical=E-shell={section_run}",
        "--micro", f"rpmd micro={micro}",
        "--gyration", gyration_run, "--full-section", section_run,
        "--trajectory", trajectory_run, "--instanton", instanton_run,
        "-o", out)
    assert rc == cli.EXIT_OK
    assert len(stdout.splitlines()) == 5


def test_missing_role_is_input_error(tmp_path, capsys):
    rc, _, err = run_cli(capsys, "fig2", "-o", str(tmp_path / "f"))
    assert rc == cli.EXIT_INPUT
    assert "--sweep" in err


def test_checksum_mismatch_exit_code(sweep_run, tmp_path, capsys):
    with open(os.path.join(sweep_run, "otoc_00.csv"), "a") as fh:
        fh.write("5,1,0\n")
    out = str(tmp_path / "figs")
    rc, stdout, err = run_cli(capsys, "fig2", "--sweep", sweep_run,
                              "-o", out)
    assert rc == cli.EXIT_INPUT
    assert "checksum" in err
    assert stdout == ""
    assert not os.path.isdir(out) or os.listdir(out) == []


def test_nonexistent_run_dir(tmp_path, capsys):
    rc, _, err = run_cli(capsys, "fig2",
                         "--sweep", str(tmp_path / "missing"),
                         "-o", str(tmp_path / "f"))
    assert rc == cli.EXIT_INPUT
    assert "not found" in err


def test_console_entry_point(sweep_run, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "chaosbound_figures.cli", "fig2",
         "--sweep", sweep_run, "-o", str(tmp_path / "figs")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(proc.stdout.splitlines()) == 2


def test_label_parsing_keeps_equals_signs():
    pairs = cli._labeled(["T=2Tc=/runs/a", "/runs/b/"])
    assert pairs == [("T=2Tc", "/runs/a"), ("b", "/runs/b/")]
