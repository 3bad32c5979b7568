"""Checksum-verified access to chaosbound run directories.

Every read goes through :class:`RunDir`, which loads ``manifest.json``
once and verifies each requested file's size and SHA-256 digest against
the manifest record before parsing it.  A file that is missing, is not
listed as an output of the run, or whose bytes changed since the run
finished raises instead of being read.
"""

import hashlib
import json
import math
import os

import numpy as np

MANIFEST_FORMAT = "chaosbound-manifest v1"


class FigureInputError(Exception):
    """An input run directory or file cannot be used."""


class ChecksumMismatch(FigureInputError):
    """A file's bytes no longer match its manifest record."""


class MissingColumn(FigureInputError):
    """A CSV table lacks a column the renderer needs."""


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Table:
    """A parsed CSV table: named float columns plus optional meta."""

    def __init__(self, columns, data, meta, origin):
        self.columns = list(columns)
        self.data = data
        self.meta = meta
        self.origin = origin

    @property
    def n_rows(self):
        return 0 if not self.columns else self.data[self.columns[0]].size

    def col(self, name):
        try:
            return self.data[name]
        except KeyError:
            raise MissingColumn(
                f"{self.origin}: no column '{name}' "
                f"(columns: {', '.join(self.columns)})") from None

    def cols(self, *names):
        return tuple(self.col(n) for n in names)


def _cell(text):
    if text == "":
        return math.nan
    return float(text)


def parse_csv(path, origin=None):
    """Parse a chaosbound CSV file into a :class:`Table`.

    Leading ``#`` lines (format magic and the JSON meta line) are
    consumed; the first uncommented line is the header.  Empty cells
    become NaN.
    """
    origin = origin or path
    meta = None
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("meta "):
                    meta = json.loads(body[5:])
                continue
            if header is None:
                header = line.split(",")
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise FigureInputError(
                    f"{origin}: row with {len(cells)} cells under a "
                    f"{len(header)}-column header")
            try:
                rows.append([_cell(c) for c in cells])
            except ValueError as exc:
                raise FigureInputError(f"{origin}: {exc}") from None
    if header is None:
        raise FigureInputError(f"{origin}: no header row")
    arr = (np.asarray(rows, dtype=float) if rows
           else np.empty((0, len(header))))
    data = {name: arr[:, i] for i, name in enumerate(header)}
    return Table(header, data, meta, origin)


class RunDir:
    """One completed run directory, gated by its manifest."""

    def __init__(self, path):
        self.path = os.path.abspath(path)
        if not os.path.isdir(self.path):
            raise FigureInputError(f"run directory not found: {path}")
        man = os.path.join(self.path, "manifest.json")
        if not os.path.isfile(man):
            raise FigureInputError(
                f"{path}: no manifest.json (not a completed run "
                f"directory)")
        try:
            with open(man, encoding="utf-8") as fh:
                self.manifest = json.load(fh)
        except ValueError as exc:
            raise FigureInputError(f"{man}: invalid JSON ({exc})") from None
        fmt = self.manifest.get("format")
        if fmt != MANIFEST_FORMAT:
            raise FigureInputError(
                f"{man}: format {fmt!r}, expected {MANIFEST_FORMAT!r}")
        self.outputs = self.manifest.get("outputs", {})

    @property
    def subcommand(self):
        return self.manifest.get("subcommand")

    @property
    def summary(self):
        return self.manifest.get("summary", {})

    def verify(self, name):
        """Return the file's path after checking it against the manifest."""
        if name not in self.outputs:
            listed = ", ".join(sorted(self.outputs)) or "none"
            raise FigureInputError(
                f"{name} is not an output of {self.path} "
                f"(manifest lists: {listed})")
        path = os.path.join(self.path, name)
        if not os.path.isfile(path):
            raise FigureInputError(f"{path}: listed in manifest but missing")
        rec = self.outputs[name]
        if os.path.getsize(path) != rec["bytes"] or \
                _sha256(path) != rec["sha256"]:
            raise ChecksumMismatch(
                f"{path}: checksum does not match the run manifest "
                f"(file changed after the run finished); refusing to "
                f"render from it")
        return path

    def table(self, name):
        path = self.verify(name)
        return parse_csv(path, origin=path)

    def record(self, name):
        path = self.verify(name)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
