"""Figure recipes: which files feed which panels, and the renderer.

A :class:`FigureRecipe` names a set of panels; each :class:`PanelSpec`
points at files inside completed run directories.  :func:`render` first
loads and checksum-verifies every input of every panel — any mismatch
aborts the whole figure before an image is written — then draws one
image file per panel.
"""

import os
from dataclasses import dataclass, field

from matplotlib import rc_context
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from . import style
from .io import FigureInputError, RunDir
from .panels import RENDERERS


@dataclass
class PanelSpec:
    """One panel: a renderer kind plus its input files and options.

    ``inputs`` maps a role name (used as the curve/axes label by some
    renderers) to a ``(run_dir, filename)`` pair.
    """
    name: str
    kind: str
    inputs: dict
    options: dict = field(default_factory=dict)


@dataclass
class FigureRecipe:
    """A named list of panels rendered together under one style."""
    name: str
    panels: list
    style: str = "paper"

    def input_files(self):
        return [(run, fname) for p in self.panels
                for run, fname in p.inputs.values()]


@dataclass
class LoadedInput:
    """A verified input: parsed content plus its origin run."""
    run: RunDir
    name: str
    table: object = None
    record: object = None


def _load(run, name):
    if name.endswith(".json"):
        return LoadedInput(run, name, record=run.record(name))
    return LoadedInput(run, name, table=run.table(name))


def render(recipe, out_dir, fmt="png"):
    """Render every panel of ``recipe`` into ``out_dir``.

    All inputs are verified against their run manifests up front;
    nothing is written unless every file of every panel passes.
    Returns the list of written image paths, one per panel.
    """
    runs = {}
    loaded = []
    for panel in recipe.panels:
        if panel.kind not in RENDERERS:
            raise FigureInputError(
                f"panel {panel.name}: unknown renderer {panel.kind!r} "
                f"(available: {', '.join(sorted(RENDERERS))})")
        ins = {}
        for role, (run_path, fname) in panel.inputs.items():
            key = os.path.abspath(run_path)
            if key not in runs:
                runs[key] = RunDir(run_path)
            ins[role] = _load(runs[key], fname)
        loaded.append((panel, ins))

    os.makedirs(out_dir, exist_ok=True)
    written = []
    with rc_context(style.preset(recipe.style)):
        for panel, ins in loaded:
            func, figsize = RENDERERS[panel.kind]
            fig = Figure(figsize=panel.options.get("figsize", figsize))
            FigureCanvasAgg(fig)
            func(fig, ins, panel.options)
            fig.tight_layout()
            path = os.path.join(out_dir, f"{recipe.name}_{panel.name}.{fmt}")
            metadata = style.PNG_METADATA if fmt == "png" else None
            fig.savefig(path, dpi=style.DPI, metadata=metadata)
            written.append(path)
    return written


# --------------------------------------------------------- stock recipes


def fig1(scan_dir, husimi_dir, section_dir, style_name="paper"):
    """Model overview: potential surface, eigenstate, Husimi, section."""
    return FigureRecipe("fig1", [
        PanelSpec("a_potential", "potential_contour",
                  {"potential": (scan_dir, "potential.csv")},
                  {"title": "potential energy surface"}),
        PanelSpec("b_density", "position_density",
                  {"density": (husimi_dir, "density.csv")},
                  {"title": "eigenstate density"}),
        PanelSpec("c_husimi", "husimi_map",
                  {"husimi": (husimi_dir, "husimi.csv")},
                  {"title": "Husimi section"}),
        PanelSpec("d_section", "sections",
                  {"classical section": (section_dir, "section.csv")}),
    ], style=style_name)


def fig2(sweep_dir, style_name="paper", max_curves=None):
    """Thermal OTOC curves and the fitted exponents against the bound."""
    run = RunDir(sweep_dir)
    report = run.record("bound_report.json")
    t_c = report["t_crossover"]
    pairs = sorted(report["series_files"].items(),
                   key=lambda kv: float(kv[0]))
    if max_curves is not None:
        pairs = pairs[:max_curves]
    curves = {f"T = {float(t) / t_c:.3g} $T_c$": (sweep_dir, fname)
              for t, fname in pairs}
    return FigureRecipe("fig2", [
        PanelSpec("a_otocs", "otoc_curves", curves,
                  {"title": f"{report['method']} OTOCs"}),
        PanelSpec("b_lambda", "lambda_bound",
                  {"report": (sweep_dir, "bound_report.csv")},
                  {"title": "growth rate vs bound"}),
    ], style=style_name)


def fig3(section_dirs, micro_dirs, gyration_dir, trajectory_dir,
         instanton_dir, full_section_dir=None, instanton_index=0,
         scan_dir=None, style_name="paper"):
    """Mechanism: sections, micro OTOCs, r_g split, instanton overlay.

    ``section_dirs`` and ``micro_dirs`` are ``(label, run_dir)`` pairs;
    ``full_section_dir`` is the run holding the unfiltered centroid
    section (defaults to ``gyration_dir``, which only works when that
    run recomputed its own section).
    """
    full_dir = full_section_dir or gyration_dir
    geometry = f"geometry_{instanton_index:02d}.csv"
    traj_inputs = {"path": (trajectory_dir, "path.csv"),
                   "snapshots": (trajectory_dir, "snapshots.csv"),
                   "instanton": (instanton_dir, geometry)}
    if scan_dir:
        traj_inputs["potential"] = (scan_dir, "potential.csv")
    return FigureRecipe("fig3", [
        PanelSpec("a_sections", "sections",
                  {label: (d, "section.csv") for label, d in section_dirs}),
        PanelSpec("b_micro_otocs", "otoc_curves",
                  {label: (d, "otoc.csv") for label, d in micro_dirs},
                  {"title": "microcanonical OTOCs"}),
        PanelSpec("c_rg_hist", "gyration_hist",
                  {"hist": (gyration_dir, "hist.csv"),
                   "split": (gyration_dir, "split.json")},
                  {"title": "compact vs extended polymers"}),
        PanelSpec("d_partition", "section_partition",
                  {"full": (full_dir, "section.csv"),
                   "filtered": (gyration_dir, "section_filtered.csv"),
                   "split": (gyration_dir, "split.json")}),
        PanelSpec("e_trajectory", "trajectory_instanton", traj_inputs,
                  {"title": "ring-polymer trajectory"}),
    ], style=style_name)
