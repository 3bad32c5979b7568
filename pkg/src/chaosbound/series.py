"""Result containers and their CSV round-trip."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class OtocSeries:
    """An out-of-time-ordered correlator on a time grid.

    values[k] = C(times[k]); std_errors are standard errors of the
    ensemble mean (zero for deterministic methods).
    """

    times: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    n_samples: int
    kind: str
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        head = dict(self.meta)
        head["kind"] = self.kind
        head["n_samples"] = self.n_samples
        with open(path, "w") as fh:
            fh.write("# chaosbound-otoc v1\n")
            fh.write(f"# meta {json.dumps(head, sort_keys=True)}\n")
            fh.write("t,c,stderr\n")
            for t, c, s in zip(self.times, self.values, self.std_errors):
                fh.write(f"{_fmt(t)},{_fmt(c)},{_fmt(s)}\n")

    @classmethod
    def from_csv(cls, path) -> "OtocSeries":
        with open(path) as fh:
            magic = fh.readline()
            if "chaosbound-otoc" not in magic:
                raise ValueError(f"{path}: not an OTOC series file")
            meta = json.loads(fh.readline().split("# meta", 1)[1])
            header = fh.readline().strip()
            if header != "t,c,stderr":
                raise ValueError(f"{path}: unexpected columns {header!r}")
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        kind = meta.pop("kind")
        n_samples = int(meta.pop("n_samples"))
        if rows.size == 0:
            rows = rows.reshape(0, 3)
        return cls(times=rows[:, 0], values=rows[:, 1], std_errors=rows[:, 2],
                   n_samples=n_samples, kind=kind, meta=meta)


@dataclass
class PoincareSet:
    """Surface-of-section points (y=0 upward crossings of the centroid).

    points columns: trajectory index, crossing time, X, P_X, running max
    radius of gyration at the crossing (0 for single-bead dynamics).
    """

    points: np.ndarray  # (M, 5)
    energy: float
    meta: dict = field(default_factory=dict)

    COLUMNS = "traj,t,x,px,rg_max"

    def to_csv(self, path) -> None:
        head = dict(self.meta)
        head["energy"] = self.energy
        with open(path, "w") as fh:
            fh.write("# chaosbound-section v1\n")
            fh.write(f"# meta {json.dumps(head, sort_keys=True)}\n")
            fh.write(self.COLUMNS + "\n")
            for row in self.points:
                fh.write(f"{int(row[0])}," +
                         ",".join(_fmt(v) for v in row[1:]) + "\n")

    @classmethod
    def from_csv(cls, path) -> "PoincareSet":
        with open(path) as fh:
            magic = fh.readline()
            if "chaosbound-section" not in magic:
                raise ValueError(f"{path}: not a section file")
            meta = json.loads(fh.readline().split("# meta", 1)[1])
            header = fh.readline().strip()
            if header != cls.COLUMNS:
                raise ValueError(f"{path}: unexpected columns {header!r}")
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        if rows.size == 0:
            rows = rows.reshape(0, 5)
        return cls(points=rows, energy=float(meta.pop("energy")), meta=meta)


def ensemble_otoc(stab: np.ndarray, times: np.ndarray, hbar: float,
                  kind: str, meta: dict) -> OtocSeries:
    """C(t) = hbar^2 <s(t)^2> over the ensemble, with standard errors."""
    n = stab.shape[0]
    s2 = stab * stab * hbar * hbar
    values = s2.mean(axis=0)
    if n > 1:
        stderr = s2.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        stderr = np.zeros_like(values)
    return OtocSeries(times=times.copy(), values=values, std_errors=stderr,
                      n_samples=n, kind=kind, meta=meta)
