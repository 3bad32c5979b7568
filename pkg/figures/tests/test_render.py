"""Recipe rendering: one file per panel, determinism, refusals."""

import hashlib
import os

import pytest

from chaosbound_figures import (ChecksumMismatch, FigureInputError,
                                FigureRecipe, PanelSpec, fig1, fig2, fig3,
                                render)

from conftest import make_run, otoc_csv


def _digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def test_fig1_one_file_per_panel(grid_run, husimi_run, section_run,
                                 tmp_path):
    out = str(tmp_path / "figs")
    files = render(fig1(grid_run, husimi_run, section_run), out)
    assert [os.path.basename(f) for f in files] == [
        "fig1_a_potential.png", "fig1_b_density.png",
        "fig1_c_husimi.png", "fig1_d_section.png"]
    for f in files:
        assert os.path.getsize(f) > 1000


def test_fig2_from_sweep(sweep_run, tmp_path):
    out = str(tmp_path / "figs")
    files = render(fig2(sweep_run), out)
    assert [os.path.basename(f) for f in files] == [
        "fig2_a_otocs.png", "fig2_b_lambda.png"]


def test_fig3_all_panels(section_run, gyration_run, trajectory_run,
                         instanton_run, grid_run, tmp_path):
    micro = make_run(tmp_path / "micro", "micro-otoc",
                     {"otoc.csv": otoc_csv(kind="rpmd_micro")})
    rec = fig3([("classical", section_run), ("centroid", section_run)],
               [("RPMD", micro)], gyration_run, trajectory_run,
               instanton_run, full_section_dir=section_run,
               scan_dir=grid_run)
    files = render(rec, str(tmp_path / "figs"))
    names = [os.path.basename(f) for f in files]
    assert names == ["fig3_a_sections.png", "fig3_b_micro_otocs.png",
                     "fig3_c_rg_hist.png", "fig3_d_partition.png",
                     "fig3_e_trajectory.png"]


def test_rendering_is_deterministic(sweep_run, tmp_path):
    a = render(fig2(sweep_run), str(tmp_path / "a"))
    b = render(fig2(sweep_run), str(tmp_path / "b"))
    assert [_digest(f) for f in a] == [_digest(f) for f in b]


def test_checksum_mismatch_aborts_before_any_output(sweep_run, tmp_path):
    # corrupt the *last* panel's input: nothing at all may be written
    with open(os.path.join(sweep_run, "bound_report.csv"), "a") as fh:
        fh.write("# edited\n")
    out = str(tmp_path / "figs")
    with pytest.raises(ChecksumMismatch):
        render(fig2(sweep_run), out)
    assert not os.path.isdir(out) or os.listdir(out) == []


def test_missing_input_file_names_the_run(grid_run, husimi_run,
                                          section_run, tmp_path):
    rec = fig1(grid_run, husimi_run, section_run)
    rec.panels[0].inputs["potential"] = (grid_run, "nope.csv")
    with pytest.raises(FigureInputError, match="nope.csv"):
        render(rec, str(tmp_path / "figs"))


def test_unknown_renderer_kind(grid_run, tmp_path):
    rec = FigureRecipe("x", [PanelSpec(
        "p", "nonexistent", {"potential": (grid_run, "potential.csv")})])
    with pytest.raises(FigureInputError, match="unknown renderer"):
        render(rec, str(tmp_path / "figs"))


def test_unknown_style_preset(sweep_run, tmp_path):
    with pytest.raises(ValueError, match="preset"):
        render(fig2(sweep_run, style_name="neon"), str(tmp_path / "f"))


def test_recipe_lists_input_files(sweep_run):
    rec = fig2(sweep_run)
    files = rec.input_files()
    assert (sweep_run, "bound_report.csv") in files
    assert any(n.startswith("otoc_") for _, n in files)


def test_svg_output(sweep_run, tmp_path):
    files = render(fig2(sweep_run), str(tmp_path / "figs"), fmt="svg")
    assert all(f.endswith(".svg") for f in files)
    assert all(os.path.getsize(f) > 500 for f in files)
