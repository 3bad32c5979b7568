"""Individual panel behaviours, probed through single-panel recipes."""

import os

import pytest

from chaosbound_figures import (FigureRecipe, MissingColumn, PanelSpec,
                                render)
from chaosbound_figures.panels import RENDERERS

from conftest import make_run, csv_text, otoc_csv, section_csv


def _single(tmp_path, kind, inputs, options=None):
    rec = FigureRecipe("t", [PanelSpec("p", kind, inputs, options or {})])
    return render(rec, str(tmp_path / "figs"))[0]


def test_empty_otoc_renders_blank_panel_with_warning(tmp_path):
    """An empty series still yields an image, annotated as empty."""
    run = make_run(tmp_path / "r", "rpmd-otoc",
                   {"otoc.csv": "t,c,stderr\n"})
    # render via the panel function to inspect the axes afterwards
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure
    from chaosbound_figures.io import RunDir
    from chaosbound_figures.recipe import LoadedInput

    rd = RunDir(run)
    fig = Figure()
    FigureCanvasAgg(fig)
    func, _ = RENDERERS["otoc_curves"]
    func(fig, {"empty run": LoadedInput(rd, "otoc.csv",
                                        table=rd.table("otoc.csv"))}, {})
    ax = fig.axes[0]
    assert not ax.lines                      # blank axes
    texts = [t.get_text() for t in ax.texts]
    assert any("no data" in t and "empty run" in t for t in texts)

    # and the file-level path still writes an image
    path = _single(tmp_path, "otoc_curves",
                   {"empty run": (run, "otoc.csv")})
    assert os.path.getsize(path) > 1000


def test_mixed_empty_and_full_curves(tmp_path):
    run = make_run(tmp_path / "r", "sweep",
                   {"otoc.csv": otoc_csv(), "empty.csv": "t,c,stderr\n"})
    path = _single(tmp_path, "otoc_curves",
                   {"full": (run, "otoc.csv"),
                    "none": (run, "empty.csv")})
    assert os.path.exists(path)


def test_missing_column_failure_is_descriptive(tmp_path):
    run = make_run(tmp_path / "r", "rpmd-otoc",
                   {"otoc.csv": "t,value\n0,1\n"})
    with pytest.raises(MissingColumn, match="columns: t, value"):
        _single(tmp_path, "otoc_curves", {"x": (run, "otoc.csv")})


def test_grid_panel_rejects_partial_grid(tmp_path):
    rows = [(0.0, 0.0, 1.0), (0.0, 1.0, 2.0), (1.0, 0.0, 3.0)]
    run = make_run(tmp_path / "r", "potential-scan",
                   {"potential.csv": csv_text("x,y,v", rows)})
    from chaosbound_figures.io import FigureInputError
    with pytest.raises(FigureInputError, match="grid"):
        _single(tmp_path, "potential_contour",
                {"potential": (run, "potential.csv")})


def test_axis_range_options_applied(tmp_path):
    run = make_run(tmp_path / "r", "rpmd-otoc", {"otoc.csv": otoc_csv()})
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure
    from chaosbound_figures.io import RunDir
    from chaosbound_figures.recipe import LoadedInput

    rd = RunDir(run)
    fig = Figure()
    FigureCanvasAgg(fig)
    func, _ = RENDERERS["otoc_curves"]
    func(fig, {"c": LoadedInput(rd, "otoc.csv",
                                table=rd.table("otoc.csv"))},
         {"xlim": (0.0, 2.0), "title": "abc"})
    ax = fig.axes[0]
    assert ax.get_xlim() == (0.0, 2.0)
    assert ax.get_title() == "abc"


def test_lambda_bound_marks_violation(tmp_path):
    rows = [(0.2, 0.63, 1.0, 0.05, 1.256, 0.8, 1, 0.5, 2.0, 0.99, 30, 0),
            (0.4, 1.26, 3.0, 0.05, 2.513, 1.2, 1, 0.5, 2.0, 0.99, 30, 1),
            (0.6, 1.88, float("nan"), float("nan"), 3.77, float("nan"),
             0, float("nan"), float("nan"), float("nan"), 0, 0)]
    text = csv_text(
        "temperature,t_over_tc,lambda,stderr,bound,lambda_over_bound,"
        "accepted,window_lo,window_hi,r2,n_points,violation", rows)
    run = make_run(tmp_path / "r", "sweep", {"bound_report.csv": text})
    path = _single(tmp_path, "lambda_bound",
                   {"report": (run, "bound_report.csv")})
    assert os.path.getsize(path) > 1000


def test_sections_panel_accepts_many_inputs(tmp_path):
    run = make_run(tmp_path / "r", "poincare",
                   {"a.csv": section_csv(seed=1),
                    "b.csv": section_csv(seed=2),
                    "c.csv": section_csv(seed=3)})
    path = _single(tmp_path, "sections",
                   {"one": (run, "a.csv"), "two": (run, "b.csv"),
                    "three": (run, "c.csv")})
    assert os.path.exists(path)


def test_trajectory_panel_without_potential_background(
        trajectory_run, instanton_run, tmp_path):
    path = _single(tmp_path, "trajectory_instanton",
                   {"path": (trajectory_run, "path.csv"),
                    "snapshots": (trajectory_run, "snapshots.csv"),
                    "instanton": (instanton_run, "geometry_00.csv")})
    assert os.path.getsize(path) > 1000
