"""Shared fixtures: synthetic run directories with valid manifests."""

import hashlib
import json
import math
import os

import matplotlib
import numpy as np
import pytest

matplotlib.use("Agg")

RNG = np.random.default_rng(42)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def make_run(root, subcommand, files, summary=None):
    """Write ``files`` (name -> text) plus a valid manifest.json."""
    os.makedirs(root, exist_ok=True)
    outputs = {}
    for name, text in files.items():
        path = os.path.join(root, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs[name] = {"sha256": _sha256(path),
                         "bytes": os.path.getsize(path)}
    manifest = {"format": "chaosbound-manifest v1",
                "subcommand": subcommand,
                "summary": summary or {},
                "outputs": outputs}
    with open(os.path.join(root, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    return str(root)


def csv_text(header, rows):
    lines = [header]
    lines += [",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                       for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def otoc_csv(n=40, lam=1.5, scale=1.0, kind="rpmd_thermal"):
    t = np.linspace(0.0, 4.0, n)
    c = scale * np.exp(lam * t)
    err = 0.05 * c
    body = csv_text("t,c,stderr", list(zip(t, c, err)))
    meta = json.dumps({"kind": kind, "n_samples": 1000})
    return f"# chaosbound-otoc v1\n# meta {meta}\n" + body


def section_csv(n_traj=6, n_cross=30, rg_max=0.3, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_traj):
        t = np.sort(rng.uniform(0, 100, n_cross))
        for j in range(n_cross):
            rows.append((i, t[j], rng.uniform(-3, 3),
                         rng.uniform(-2, 2), rg_max * (i + 1) / n_traj))
    meta = json.dumps({"kind": "section"})
    return (f"# chaosbound-section v1\n# meta {meta}\n"
            + csv_text("traj,t,x,px,rg_max", rows))


@pytest.fixture()
def grid_run(tmp_path):
    """A potential-scan-like run with a small full grid."""
    xs = np.linspace(-2.0, 2.0, 9)
    ys = np.linspace(-1.0, 3.0, 7)
    rows = [(x, y, float(x * x + y * y)) for x in xs for y in ys]
    return make_run(tmp_path / "scan", "potential-scan",
                    {"potential.csv": csv_text("x,y,v", rows)})


@pytest.fixture()
def husimi_run(tmp_path):
    xs = np.linspace(-2.0, 2.0, 8)
    ys = np.linspace(-1.0, 3.0, 6)
    dens = [(x, y, float(math.exp(-x * x - y * y))) for x in xs for y in ys]
    xg = np.linspace(-3.0, 3.0, 7)
    pg = np.linspace(-2.0, 2.0, 5)
    hus = [(x, p, float(math.exp(-(x - 1) ** 2 - p * p)))
           for x in xg for p in pg]
    return make_run(tmp_path / "husimi", "husimi",
                    {"density.csv": csv_text("x,y,density", dens),
                     "husimi.csv": csv_text("x,px,q", hus)},
                    summary={"state_index": 12, "state_energy": 3.3,
                             "e_over_vb": 1.056})


@pytest.fixture()
def section_run(tmp_path):
    return make_run(tmp_path / "sect", "poincare",
                    {"section.csv": section_csv()})


@pytest.fixture()
def sweep_run(tmp_path):
    temps = [0.25, 0.5, 1.0]
    t_c = 1.0 / math.pi
    files, series = {}, {}
    rows = []
    for i, temp in enumerate(temps):
        name = f"otoc_{i:02d}.csv"
        files[name] = otoc_csv(lam=1.0 + i * 0.3)
        series[f"{temp:.17g}"] = name
        bound = 2.0 * math.pi * temp
        rows.append((temp, temp / t_c, 1.0 + i * 0.3, 0.05, bound,
                     (1.0 + i * 0.3) / bound, 1, 0.5, 2.5, 0.999, 40, 0))
    files["bound_report.csv"] = csv_text(
        "temperature,t_over_tc,lambda,stderr,bound,lambda_over_bound,"
        "accepted,window_lo,window_hi,r2,n_points,violation", rows)
    files["bound_report.json"] = json.dumps(
        {"format": "chaosbound-bound-report v1", "method": "rpmd",
         "t_crossover": t_c, "temperatures": temps,
         "series_files": series, "violations": []})
    return make_run(tmp_path / "sweep", "sweep", files)


@pytest.fixture()
def gyration_run(tmp_path):
    edges = np.linspace(0.0, 2.0, 21)
    counts = [30 * math.exp(-((e - 0.3) / 0.15) ** 2)
              + 20 * math.exp(-((e - 1.4) / 0.2) ** 2) for e in edges[:-1]]
    hist = csv_text("bin_lo,bin_hi,count",
                    [(edges[i], edges[i + 1], int(c))
                     for i, c in enumerate(counts)])
    split = json.dumps({"format": "chaosbound-gyration v1",
                        "threshold": 0.8, "separation": 4.2,
                        "mu_lo": 0.3, "mu_hi": 1.4, "bimodal": True})
    return make_run(tmp_path / "gyr", "gyration",
                    {"hist.csv": hist,
                     "section_filtered.csv": section_csv(rg_max=0.5, seed=1),
                     "split.json": split})


@pytest.fixture()
def trajectory_run(tmp_path):
    t = np.linspace(0.0, 10.0, 50)
    path = csv_text("t,x,y,px,rg",
                    [(float(ti), float(np.cos(ti)), float(np.sin(ti)),
                      0.1, 0.02 * ti) for ti in t])
    rows = []
    for s, ts in enumerate((0.0, 5.0, 10.0)):
        for b in range(6):
            ang = 2 * math.pi * b / 6
            rows.append((s, ts, b, math.cos(ts) + 0.1 * math.cos(ang),
                         math.sin(ts) + 0.1 * math.sin(ang)))
    snaps = csv_text("snap,t,bead,x,y", rows)
    return make_run(tmp_path / "traj", "rp-trajectory",
                    {"path.csv": path, "snapshots.csv": snaps})


@pytest.fixture()
def instanton_run(tmp_path):
    rows = [(b, 1.0 + 0.5 * math.cos(2 * math.pi * b / 16),
             0.5 * math.sin(2 * math.pi * b / 16)) for b in range(16)]
    return make_run(tmp_path / "inst", "instanton",
                    {"geometry_00.csv": csv_text("bead,x,y", rows)})
