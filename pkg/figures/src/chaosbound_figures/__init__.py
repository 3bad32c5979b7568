"""Render publication figures from chaosbound run directories.

This package is a pure consumer: it reads the CSV/JSON files written by
the ``otoc`` command line, verifies them against each run's
``manifest.json`` checksums, and draws figures.  It never recomputes
physics; if an input file changed since its run finished, rendering is
refused.
"""

from .io import (ChecksumMismatch, FigureInputError, MissingColumn,
                 RunDir, Table)
from .recipe import (FigureRecipe, PanelSpec, fig1, fig2, fig3, render)

__all__ = [
    "ChecksumMismatch", "FigureInputError", "MissingColumn", "RunDir",
    "Table", "FigureRecipe", "PanelSpec", "fig1", "fig2", "fig3",
    "render",
]

__version__ = "1.0.0"
