"""Command-line front end: every pipeline as a seeded, reproducible run.

Each subcommand reads an optional INI config plus --set overrides,
executes one pipeline, and writes its numeric tables as CSV, a JSON
manifest with a sha256 checksum per output file, and a human-readable
summary.txt into the output directory.  Identical (config, seed) gives
byte-identical data files at any worker count.

Exit codes: 0 success, 2 invalid configuration or inputs, 3 numerical
failure inside a pipeline.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from types import SimpleNamespace

import numpy as np

from . import __version__, analysis, classical, instanton, quantum, \
    ring_polymer, sampling
from .config import ConfigError, RunConfig, load_config
from .quantum import GridSpec
from .series import OtocSeries, PoincareSet, _fmt

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

MANIFEST_NAME = "manifest.json"


# -------------------------------------------------------------- utilities

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    return obj


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True,
                  allow_nan=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    """Rows are iterables of preformatted strings."""
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _g(x):
    return _fmt(x)


# --------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    """Provenance record: echoed config, code version, timestamps,
    derived constants, and a checksum for every output file."""

    subcommand: str
    config: dict
    config_path: str | None
    derived: dict
    seed: int
    workers: int
    created_utc: str
    finished_utc: str
    elapsed_s: float
    outputs: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    version: str = __version__

    FORMAT = "chaosbound-manifest v1"

    def write(self, out_dir):
        payload = {"format": self.FORMAT, **asdict(self)}
        _write_json(os.path.join(out_dir, MANIFEST_NAME), payload)

    @staticmethod
    def load(out_dir):
        path = os.path.join(out_dir, MANIFEST_NAME)
        if not os.path.exists(path):
            raise ConfigError(f"no {MANIFEST_NAME} in {out_dir}")
        with open(path) as fh:
            data = json.load(fh)
        if data.get("format") != RunManifest.FORMAT:
            raise ConfigError(f"{path}: unrecognized manifest format "
                              f"{data.get('format')!r}")
        return data


def checksum_outputs(out_dir, names):
    out = {}
    for name in names:
        path = os.path.join(out_dir, name)
        out[name] = {"sha256": _sha256(path),
                     "bytes": os.path.getsize(path)}
    return out


def verify_against_manifest(run_dir, names):
    """Check that `names` in `run_dir` still match its manifest.
    Raises ConfigError on a missing file or checksum mismatch."""
    data = RunManifest.load(run_dir)
    listed = data.get("outputs", {})
    for name in names:
        path = os.path.join(run_dir, name)
        if name not in listed:
            raise ConfigError(f"{run_dir}: manifest does not list {name}")
        if not os.path.exists(path):
            raise ConfigError(f"{run_dir}: missing {name}")
        have = _sha256(path)
        want = listed[name]["sha256"]
        if have != want:
            raise ConfigError(
                f"{run_dir}/{name}: checksum mismatch (file {have[:12]}.., "
                f"manifest {want[:12]}..): refusing stale or edited input")
    return data


def _derived_block(cfg: RunConfig):
    """Constants the run pins down: barrier, crossover temperature, and
    the free ring-polymer mode frequencies at the reference point."""
    pot = cfg.potential
    p = pot.params
    t_ref = None
    for sec, key in (("otoc", "temperature"), ("otoc", "t_label"),
                     ("section", "t_label"), ("instanton", "temperature")):
        v = cfg.values.get(sec, {}).get(key)
        if v is not None:
            t_ref = v
            break
    if t_ref is None:
        for sec in ("otoc", "instanton"):
            ts = cfg.values.get(sec, {}).get("temperatures")
            if ts:
                t_ref = max(ts)
                break
    nb = 1
    uses_beads = cfg.method in ("rpmd-otoc", "centroid-poincare",
                                "gyration", "instanton") or (
        cfg.method == "micro-otoc" and
        cfg.values["otoc"]["kind"] == "rpmd") or (
        cfg.method == "sweep" and cfg.values["sweep"]["method"] == "rpmd")
    if uses_beads and t_ref is not None:
        sec = "instanton" if cfg.method == "instanton" else (
            "section" if "section" in cfg.values else "otoc")
        nb = cfg.values.get(sec, {}).get("n_beads")
        if nb is None:
            nb = instanton.default_instanton_beads(pot, t_ref) \
                if cfg.method == "instanton" \
                else ring_polymer.default_n_beads(pot, t_ref)
    if nb > 1 and t_ref is not None:
        beta_n = 1.0 / (p.kb * t_ref * nb)
        omega_k = sampling.nm_frequencies(nb, beta_n, p.hbar).tolist()
    else:
        omega_k = [0.0]
    return {"barrier_height": p.barrier_height,
            "t_crossover": p.t_crossover,
            "dissociation_ridge": p.g * p.a_well**2 + p.morse_d,
            "n_beads": int(nb),
            "reference_temperature": t_ref,
            "omega_k": omega_k}


# ------------------------------------------------------------ fit helpers

def _policy(cfg: RunConfig):
    f = cfg.values.get("fit")
    if f is None:
        return None
    return analysis.WindowPolicy(
        mode=f["mode"], t_start=f["t_start"], t_end=f["t_end"],
        min_points=f["min_points"], flat_tol=f["flat_tol"],
        r2_min=f["r2_min"], noise_mult=f["noise_mult"],
        local_half=f["local_half"], local_sigma_mult=f["local_sigma_mult"])


def _fit_dict(fit: analysis.LyapunovFit):
    return {"lambda": fit.lam, "stderr": fit.stderr,
            "window": list(fit.window) if fit.window else None,
            "r_squared": fit.r_squared, "n_points": fit.n_points,
            "accepted": fit.accepted, "reason": fit.reason,
            "noise_floor": fit.noise_floor, "convention": fit.convention}


def _fit_lines(fit, bound):
    if fit.accepted:
        w0, w1 = fit.window
        lines = [f"lambda = {fit.lam:.6g} +- {fit.stderr:.3g}  "
                 f"(window {w0:.4g}..{w1:.4g}, {fit.n_points} points, "
                 f"r2 {fit.r_squared:.4f})",
                 f"bound 2*pi*kB*T/hbar = {bound:.6g}; "
                 f"lambda/bound = {fit.lam / bound:.4f}"]
    else:
        lines = [f"no exponential window accepted: {fit.reason}"]
    return lines


def _otoc_common(cfg, out, series, temperature):
    """Shared tail of every single-temperature OTOC handler."""
    p = cfg.potential.params
    series.to_csv(os.path.join(out, "otoc.csv"))
    fit = analysis.fit_lyapunov(series, _policy(cfg))
    bound = 2.0 * math.pi * p.kb * temperature / p.hbar
    payload = _fit_dict(fit)
    payload.update({"temperature": temperature,
                    "t_over_tc": temperature / p.t_crossover,
                    "bound": bound,
                    "policy": asdict(_policy(cfg)) if _policy(cfg) else None})
    _write_json(os.path.join(out, "fit.json"), payload)
    summary = {"temperature": temperature, "bound": bound,
               "lambda": fit.lam, "stderr": fit.stderr,
               "accepted": fit.accepted,
               "max_energy_drift": series.meta.get("max_energy_drift")}
    lines = [f"T = {temperature:.6g}  (T/Tc = "
             f"{temperature / p.t_crossover:.4g}), kind = {series.kind}, "
             f"{series.n_samples} samples"]
    lines += _fit_lines(fit, bound)
    return ["otoc.csv", "fit.json"], summary, lines


# ---------------------------------------------------------------- handlers

def _run_potential_scan(cfg, out):
    pot = cfg.potential
    p = pot.params
    g = cfg.values["grid"]
    xs = np.linspace(g["xmin"], g["xmax"], g["nx"])
    ys = np.linspace(g["ymin"], g["ymax"], g["ny"])
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    vals = pot.value(pts)
    rows = ((_g(q[0]), _g(q[1]), _g(v)) for q, v in zip(pts, vals))
    _write_csv(os.path.join(out, "potential.csv"), "x,y,v", rows)
    q_min, v_min = pot.minimum()
    ridge = p.g * p.a_well**2 + p.morse_d
    summary = {"barrier_height": p.barrier_height,
               "t_crossover": p.t_crossover,
               "v_min": v_min, "x_min": abs(q_min[0]),
               "dissociation_ridge": ridge,
               "grid": [g["nx"], g["ny"]]}
    lines = [f"potential surface on {g['nx']}x{g['ny']} grid, "
             f"x in [{g['xmin']:g}, {g['xmax']:g}], "
             f"y in [{g['ymin']:g}, {g['ymax']:g}]",
             f"wells at x = +-{abs(q_min[0]):.6g} (V = {v_min:.3g}); "
             f"barrier V_b = {p.barrier_height:.6g}; "
             f"T_c = {p.t_crossover:.6g}; "
             f"dissociation ridge = {ridge:.6g}"]
    return ["potential.csv"], summary, lines


def _run_classical_otoc(cfg, out):
    o = cfg.values["otoc"]
    series = classical.classical_thermal_otoc(
        cfg.potential, o["temperature"], n_traj=o["n_traj"],
        t_max=o["t_max"], dt=o["dt"], record_every=o["record_every"],
        seed=cfg.seed, workers=cfg.workers)
    return _otoc_common(cfg, out, series, o["temperature"])


def _run_rpmd_otoc(cfg, out):
    o = cfg.values["otoc"]
    series = ring_polymer.rpmd_otoc(
        cfg.potential, o["temperature"], n_traj=o["n_traj"],
        t_max=o["t_max"], n_beads=o["n_beads"], dt=o["dt"],
        record_every=o["record_every"], seed=cfg.seed, workers=cfg.workers)
    return _otoc_common(cfg, out, series, o["temperature"])


def _run_quantum_otoc(cfg, out):
    o, q, g = (cfg.values[k] for k in ("otoc", "quantum", "grid"))
    grid = GridSpec(g["nx"], g["ny"], g["xmin"], g["xmax"],
                    g["ymin"], g["ymax"])
    series = quantum.quantum_otoc(
        cfg.potential, o["temperature"], t_max=q["t_max"],
        dt_out=q["dt_out"], grid=grid, comm_tol=q["comm_tol"])
    names, summary, lines = _otoc_common(cfg, out, series, o["temperature"])
    for key in ("n_out", "n_int", "comm_err"):
        if key in series.meta:
            summary[key] = series.meta[key]
    return names, summary, lines


def _run_micro_otoc(cfg, out):
    o = cfg.values["otoc"]
    if o["kind"] == "classical":
        series = classical.classical_micro_otoc(
            cfg.potential, o["energy"], n_traj=o["n_traj"],
            t_max=o["t_max"], dt=o["dt"], record_every=o["record_every"],
            seed=cfg.seed, workers=cfg.workers)
        label = o["energy"] / cfg.potential.params.barrier_height
        extra = [f"shell H = {o['energy']:.6g} (E/V_b = {label:.4g})"]
        # growth is reported against the label-temperature bound only
        # when one is given; default to T_c
        t_ref = o["t_label"] or cfg.potential.params.t_crossover
    else:
        series = ring_polymer.rpmd_micro_otoc(
            cfg.potential, o["t_label"], n_traj=o["n_traj"],
            t_max=o["t_max"], n_beads=o["n_beads"],
            energy_per_bead=o["energy"], dt=o["dt"],
            record_every=o["record_every"], seed=cfg.seed,
            workers=cfg.workers)
        extra = [f"ring-polymer shell, n_beads = {series.meta['n_beads']}, "
                 f"spring label T = {o['t_label']:.6g}"]
        t_ref = o["t_label"]
    names, summary, lines = _otoc_common(cfg, out, series, t_ref)
    summary["kind"] = o["kind"]
    return names, summary, extra + lines


def _run_poincare(cfg, out):
    s = cfg.values["section"]
    ps = classical.poincare_section(
        cfg.potential, s["energy"], n_traj=s["n_traj"], t_max=s["t_max"],
        dt=s["dt"], seed=cfg.seed, workers=cfg.workers,
        max_cross=s["max_cross"])
    ps.to_csv(os.path.join(out, "section.csv"))
    summary = {"energy": ps.energy, "n_points": int(ps.points.shape[0]),
               "n_traj": s["n_traj"],
               "max_energy_drift": ps.meta.get("max_energy_drift")}
    lines = [f"surface of section at H = {ps.energy:.6g}: "
             f"{ps.points.shape[0]} crossings from {s['n_traj']} "
             f"trajectories",
             f"max relative energy drift "
             f"{ps.meta.get('max_energy_drift', 0.0):.3g}"]
    if "warning" in ps.meta:
        lines.append(f"warning: {ps.meta['warning']}")
    return ["section.csv"], summary, lines


def _centroid_section(cfg, out):
    s = cfg.values["section"]
    ps = ring_polymer.centroid_poincare(
        cfg.potential, s["t_label"], n_traj=s["n_traj"], t_max=s["t_max"],
        n_beads=s["n_beads"], energy_per_bead=s["energy"], dt=s["dt"],
        seed=cfg.seed, workers=cfg.workers, max_cross=s["max_cross"])
    ps.to_csv(os.path.join(out, "section.csv"))
    rg = ps.meta["rg_final"]
    _write_csv(os.path.join(out, "trajectories.csv"), "traj,rg_final",
               ((str(i), _g(v)) for i, v in enumerate(rg)))
    return ps, ["section.csv", "trajectories.csv"]


def _run_centroid_poincare(cfg, out):
    ps, names = _centroid_section(cfg, out)
    s = cfg.values["section"]
    summary = {"t_label": s["t_label"], "energy_total": ps.energy,
               "n_beads": ps.meta["n_beads"],
               "n_points": int(ps.points.shape[0]),
               "max_energy_drift": ps.meta.get("max_energy_drift")}
    lines = [f"centroid section on H_N = {ps.energy:.6g} "
             f"({ps.meta['n_beads']} beads, spring label "
             f"T = {s['t_label']:.6g}): {ps.points.shape[0]} crossings",
             f"max relative energy drift "
             f"{ps.meta.get('max_energy_drift', 0.0):.3g}"]
    if "warning" in ps.meta:
        lines.append(f"warning: {ps.meta['warning']}")
    return names, summary, lines


def _run_rp_trajectory(cfg, out):
    s = cfg.values["section"]
    tr = cfg.values["trajectory"]
    path, snap_times, snapshots, meta = ring_polymer.rp_trajectory(
        cfg.potential, s["t_label"], traj=tr["traj"], t_max=s["t_max"],
        n_beads=s["n_beads"], energy_per_bead=s["energy"], dt=s["dt"],
        record_every=tr["record_every"], n_snapshots=tr["n_snapshots"],
        seed=cfg.seed)
    _write_csv(os.path.join(out, "path.csv"), "t,x,y,px,rg",
               (tuple(_g(v) for v in row) for row in path))
    srows = ((str(i), _g(t), str(b), _g(xy[0]), _g(xy[1]))
             for i, t in enumerate(snap_times)
             for b, xy in enumerate(snapshots[i]))
    _write_csv(os.path.join(out, "snapshots.csv"), "snap,t,bead,x,y", srows)
    summary = {"t_label": s["t_label"], "traj": tr["traj"],
               "energy_total": meta["energy"], "n_beads": meta["n_beads"],
               "n_path_rows": int(path.shape[0]),
               "n_snapshots": int(snapshots.shape[0]),
               "max_energy_drift": meta["max_energy_drift"],
               "rg_max": float(path[:, 4].max())}
    lines = [f"shell trajectory {tr['traj']} on H_N = {meta['energy']:.6g} "
             f"({meta['n_beads']} beads, spring label "
             f"T = {s['t_label']:.6g})",
             f"path: {path.shape[0]} rows to t = {s['t_max']:.6g}; "
             f"{snapshots.shape[0]} bead snapshots",
             f"max r_g along path {path[:, 4].max():.6g}",
             f"max relative energy drift {meta['max_energy_drift']:.3g}"]
    return ["path.csv", "snapshots.csv"], summary, lines


def _run_instanton(cfg, out):
    pot = cfg.potential
    p = pot.params
    sec = cfg.values["instanton"]
    temps = sec["temperatures"] or [sec["temperature"]]
    results = instanton.instanton_chain(
        pot, temps, n_beads=sec["n_beads"], tol=sec["tol"],
        max_iter=sec["max_iter"], trust=sec["trust"],
        zero_band=sec["zero_band"])
    names, records, rows, lines = [], [], [], []
    for i, res in enumerate(results):
        rep = instanton.bound_check(res, pot)  # raises on violation
        gname, sname = f"geometry_{i:02d}.csv", f"spectrum_{i:02d}.csv"
        _write_csv(os.path.join(out, gname), "bead,x,y",
                   ((str(b), _g(q[0]), _g(q[1]))
                    for b, q in enumerate(res.geometry)))
        _write_csv(os.path.join(out, sname), "index,eigenvalue",
                   ((str(k), _g(v))
                    for k, v in enumerate(res.hessian_spectrum)))
        names += [gname, sname]
        amp = instanton.mode1_amplitude(pot, res.temperature)
        rec = {"temperature": res.temperature,
               "t_over_tc": res.temperature / p.t_crossover,
               "n_beads": res.n_beads, "collapsed": res.collapsed,
               "action_value": res.action_value,
               "grad_norm": res.grad_norm,
               "n_negative": res.n_negative,
               "zero_mode_residual": res.zero_mode_residual,
               "zero_overlap": res.zero_overlap,
               "eta": res.eta, "eta_projected": res.eta_projected,
               "mode1_amplitude": amp,
               "geometry_file": gname, "spectrum_file": sname}
        rec.update({k: rep[k] for k in
                    ("bound", "eta_over_bound", "omega1_finite_n",
                     "orthogonal_mode_sum", "satisfied",
                     "satisfied_finite_n")})
        records.append(rec)
        rows.append((
            _g(res.temperature), _g(res.temperature / p.t_crossover),
            str(res.n_beads), _g(res.eta), _g(rep["bound"]),
            _g(rep["eta_over_bound"]), _g(rep["omega1_finite_n"]),
            _g(res.action_value), _g(res.grad_norm),
            str(res.n_negative), _g(res.zero_mode_residual),
            _g(res.zero_overlap), _g(rep["orthogonal_mode_sum"]),
            _g(amp), str(int(res.collapsed)), str(int(rep["satisfied"]))))
        tag = "collapsed (barrier top)" if res.collapsed else \
            f"|grad| = {res.grad_norm:.2e}"
        lines.append(
            f"T/Tc = {res.temperature / p.t_crossover:.4g}: eta = "
            f"{res.eta:.6f}, bound = {rep['bound']:.6f} "
            f"(eta/bound = {rep['eta_over_bound']:.4f}), index "
            f"{res.n_negative}, {tag}")
    _write_csv(os.path.join(out, "chain.csv"),
               "temperature,t_over_tc,n_beads,eta,bound,eta_over_bound,"
               "omega1_finite_n,action,grad_norm,n_negative,"
               "zero_mode_residual,zero_overlap,orthogonal_mode_sum,"
               "mode1_amplitude,collapsed,satisfied", rows)
    _write_json(os.path.join(out, "report.json"),
                {"format": "chaosbound-instanton v1",
                 "convention": analysis.CONVENTION,
                 "t_crossover": p.t_crossover, "records": records})
    names += ["chain.csv", "report.json"]
    summary = {"n_temperatures": len(records),
               "all_satisfied": all(r["satisfied"] for r in records),
               "max_grad_norm": max(r["grad_norm"] for r in records)}
    return names, summary, lines


def _run_husimi(cfg, out):
    pot = cfg.potential
    p = pot.params
    g, q = cfg.values["grid"], cfg.values["quantum"]
    grid = GridSpec(g["nx"], g["ny"], g["xmin"], g["xmax"],
                    g["ymin"], g["ymax"])
    spec = quantum.solve_spectrum(pot, grid)
    idx = q["state_index"]
    if idx is None:
        idx = int(np.argmin(np.abs(spec.energies - p.barrier_height)))
    if idx >= spec.energies.size:
        raise ConfigError(f"quantum.state_index {idx} out of range "
                          f"(grid supports {spec.energies.size} states)",
                          "quantum.state_index")
    energy = float(spec.energies[idx])
    psi = spec.vecs[:, idx].reshape(1, grid.nx, grid.ny)
    shim = SimpleNamespace(psi_out=psi, grid=grid, hbar=p.hbar)
    xg = np.linspace(q["x_lo"], q["x_hi"], q["nx_out"])
    pg = np.linspace(q["p_lo"], q["p_hi"], q["np_out"])
    qmap = quantum.husimi_section(shim, pot, 0, xg, pg)
    rows = ((_g(xg[i]), _g(pg[j]), _g(qmap[i, j]))
            for i in range(xg.size) for j in range(pg.size))
    _write_csv(os.path.join(out, "husimi.csv"), "x,px,q", rows)
    dens = (psi[0] ** 2) / (grid.dx * grid.dy)
    drows = ((_g(grid.xs[i]), _g(grid.ys[j]), _g(dens[i, j]))
             for i in range(grid.nx) for j in range(grid.ny))
    _write_csv(os.path.join(out, "density.csv"), "x,y,density", drows)
    summary = {"state_index": idx, "state_energy": energy,
               "e_over_vb": energy / p.barrier_height,
               "max_residual": spec.max_residual}
    lines = [f"Husimi section of eigenstate {idx} "
             f"(E = {energy:.6g}, E/V_b = "
             f"{energy / p.barrier_height:.4f}) on "
             f"{xg.size}x{pg.size} (x, p_x) grid",
             f"position density on the {grid.nx}x{grid.ny} grid "
             "in density.csv"]
    return ["husimi.csv", "density.csv"], summary, lines


def _run_gyration(cfg, out):
    gy = cfg.values["gyration"]
    names = []
    if gy["in_dir"]:
        src = gy["in_dir"]
        verify_against_manifest(src, ["section.csv"])
        ps = PoincareSet.from_csv(os.path.join(src, "section.csv"))
        origin = {"in_dir": src}
    else:
        ps, names = _centroid_section(cfg, out)
        origin = {"computed": True}
    rg = np.asarray(ps.meta["rg_final"], dtype=float)
    counts, edges, stats = ring_polymer.gyration_histogram(
        rg, bins=gy["bins"])
    _write_csv(os.path.join(out, "hist.csv"), "bin_lo,bin_hi,count",
               ((_g(edges[i]), _g(edges[i + 1]), str(int(c)))
                for i, c in enumerate(counts)))

    traj_ids, dims, island = analysis.classify_island_points(
        ps, d_max=gy["d_max"], min_points=gy["min_points"])
    _write_csv(os.path.join(out, "dims.csv"), "traj,dimension,island",
               ((str(t), _g(d), str(int(f)))
                for t, d, f in zip(traj_ids, dims, island)))

    keep = ps.points[:, 4] <= stats.threshold
    filtered = PoincareSet(
        points=ps.points[keep], energy=ps.energy,
        meta={"filter": "rg_max <= threshold",
              "threshold": stats.threshold, **origin})
    filtered.to_csv(os.path.join(out, "section_filtered.csv"))

    frac, n_cls, traj_frac = analysis.island_region_fraction(
        ps, stats.threshold, d_max=gy["d_max"], min_points=gy["min_points"])

    payload = {"format": "chaosbound-gyration v1", **asdict(stats),
               "n_trajectories": int(rg.size),
               "n_points": int(ps.points.shape[0]),
               "n_retained": int(keep.sum()),
               "n_retained_classified": n_cls,
               "island_fraction_retained": frac,
               "island_trajectory_fraction": traj_frac,
               "n_island_traj": int(island.sum()),
               "n_classified_traj": int(np.isfinite(dims).sum()),
               "d_max": gy["d_max"], **origin}
    _write_json(os.path.join(out, "split.json"), payload)
    names += ["hist.csv", "dims.csv", "section_filtered.csv", "split.json"]
    summary = {k: payload[k] for k in
               ("threshold", "separation", "bimodal", "n_retained",
                "island_fraction_retained")}
    lines = [
        f"max r_g split: threshold = {stats.threshold:.4g}, cluster "
        f"separation = {stats.separation:.3g} "
        f"({'bimodal' if stats.bimodal else 'NOT bimodal'}), "
        f"clusters {stats.n_lo}/{stats.n_hi} at "
        f"{stats.mu_lo:.3g}/{stats.mu_hi:.3g}",
        f"retained {int(keep.sum())}/{ps.points.shape[0]} low-r_g points; "
        f"island trajectories {int(island.sum())}/"
        f"{int(np.isfinite(dims).sum())} classified; retained points in "
        f"island regions = {frac:.4f} (on island orbits: {traj_frac:.4f})"]
    return names, summary, lines


def _run_sweep(cfg, out):
    pot = cfg.potential
    p = pot.params
    method = cfg.values["sweep"]["method"]
    o = cfg.values["otoc"]
    temps = o["temperatures"] or analysis.default_sweep_temperatures(pot)
    rc = {"potential": pot, "seed": cfg.seed, "workers": cfg.workers,
          "n_traj": o["n_traj"], "t_max": o["t_max"], "dt": o["dt"],
          "record_every": o["record_every"]}
    if method == "rpmd" and o["n_beads"] is not None:
        rc["n_beads"] = o["n_beads"]
    if method == "quantum":
        g, q = cfg.values["grid"], cfg.values["quantum"]
        rc["grid"] = GridSpec(g["nx"], g["ny"], g["xmin"], g["xmax"],
                              g["ymin"], g["ymax"])
        rc["t_max"] = q["t_max"]
        rc["dt_out"] = q["dt_out"]
    report = analysis.bound_sweep(method, temps, rc, _policy(cfg),
                                  keep_series=True)
    series_list = report.meta.pop("series")

    names, files = [], {}
    for i, series in enumerate(series_list):
        name = f"otoc_{i:02d}.csv"
        series.to_csv(os.path.join(out, name))
        names.append(name)
        files[_g(report.temperatures[i])] = name

    lams, errs = report.lambdas[method], report.stderrs[method]
    fits = report.fits[method]
    viol_at = {v["temperature"] for v in report.violations}
    rows, lines = [], []
    for i, t in enumerate(report.temperatures):
        fit, b = fits[i], report.bound_values[i]
        w0 = _g(fit.window[0]) if fit.window else ""
        w1 = _g(fit.window[1]) if fit.window else ""
        rows.append((_g(t), _g(t / p.t_crossover), _g(lams[i]),
                     _g(errs[i]), _g(b),
                     _g(lams[i] / b) if fit.accepted else "nan",
                     str(int(fit.accepted)), w0, w1, _g(fit.r_squared),
                     str(fit.n_points), str(int(t in viol_at))))
        if fit.accepted:
            lines.append(f"T/Tc = {t / p.t_crossover:.4g}: lambda = "
                         f"{lams[i]:.4f} +- {errs[i]:.4f}, bound = "
                         f"{b:.4f}, lambda/bound = {lams[i] / b:.4f}"
                         + ("  ** VIOLATION" if t in viol_at else ""))
        else:
            lines.append(f"T/Tc = {t / p.t_crossover:.4g}: no exponential "
                         f"window ({fit.reason})")
    _write_csv(os.path.join(out, "bound_report.csv"),
               "temperature,t_over_tc,lambda,stderr,bound,"
               "lambda_over_bound,accepted,window_lo,window_hi,r2,"
               "n_points,violation", rows)
    payload = {"format": "chaosbound-bound-report v1", "method": method,
               "convention": analysis.CONVENTION,
               "t_crossover": p.t_crossover,
               "temperatures": report.temperatures,
               "bound_values": report.bound_values,
               "lambda": {method: lams}, "stderr": {method: errs},
               "fits": {method: [_fit_dict(f) for f in fits]},
               "violations": report.violations,
               "n_violations": len(report.violations),
               "series_files": files}
    _write_json(os.path.join(out, "bound_report.json"), payload)
    names += ["bound_report.csv", "bound_report.json"]
    lines.append(f"violations of lambda <= bound*(1 + 3*stderr/lambda): "
                 f"{len(report.violations)}")
    summary = {"method": method, "n_temperatures": int(len(temps)),
               "n_violations": len(report.violations),
               "lambda": {_g(t): (lams[i] if np.isfinite(lams[i]) else None)
                          for i, t in enumerate(report.temperatures)}}
    return names, summary, lines


HANDLERS = {
    "potential-scan": _run_potential_scan,
    "classical-otoc": _run_classical_otoc,
    "rpmd-otoc": _run_rpmd_otoc,
    "quantum-otoc": _run_quantum_otoc,
    "micro-otoc": _run_micro_otoc,
    "poincare": _run_poincare,
    "centroid-poincare": _run_centroid_poincare,
    "rp-trajectory": _run_rp_trajectory,
    "instanton": _run_instanton,
    "husimi": _run_husimi,
    "gyration": _run_gyration,
    "sweep": _run_sweep,
}


# ------------------------------------------------------------------- main

_ALIASES = {"classical": "classical-otoc", "rpmd": "rpmd-otoc",
            "quantum": "quantum-otoc", "micro": "micro-otoc"}

_HELP = {
    "potential-scan": "tabulate the potential surface on a grid",
    "classical-otoc": "thermal classical OTOC at one temperature",
    "rpmd-otoc": "thermal ring-polymer OTOC at one temperature",
    "quantum-otoc": "exact Kubo OTOC at one temperature",
    "micro-otoc": "microcanonical OTOC on an energy shell",
    "poincare": "classical surface of section at fixed energy",
    "centroid-poincare": "ring-polymer centroid surface of section",
    "rp-trajectory": "bead-resolved history of one shell trajectory",
    "instanton": "barrier saddle of the discretized Euclidean action",
    "husimi": "Husimi section of one eigenstate",
    "gyration": "max-r_g split and island filtering of a centroid section",
    "sweep": "OTOC exponents vs the bound over a temperature grid",
    "validate": "check a config without executing anything",
}


def build_parser():
    ap = argparse.ArgumentParser(
        prog="otoc",
        description="Chaos-bound toolkit: classical, ring-polymer, and "
                    "exact quantum OTOCs for the 2D double well.")
    ap.add_argument("--version", action="version",
                    version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", metavar="subcommand")
    inv_alias = {}
    for name, als in (("classical-otoc", ["classical"]),
                      ("rpmd-otoc", ["rpmd"]),
                      ("quantum-otoc", ["quantum"]),
                      ("micro-otoc", ["micro"])):
        inv_alias[name] = als
    for name in list(HANDLERS) + ["validate"]:
        sp = sub.add_parser(name, aliases=inv_alias.get(name, []),
                            help=_HELP[name])
        if name == "validate":
            sp.add_argument("config_pos", nargs="?", metavar="CONFIG",
                            help="config file to validate")
        sp.add_argument("-c", "--config", metavar="FILE",
                        help="INI config file")
        sp.add_argument("-s", "--set", action="append", default=[],
                        dest="overrides", metavar="KEY=VALUE",
                        help="override a config key (section.key=value "
                             "or bare key)")
        if name != "validate":
            sp.add_argument("-o", "--out", metavar="DIR",
                            help="output directory "
                                 "(default runs/<subcommand>)")
            sp.add_argument("-w", "--workers", type=int, metavar="N",
                            help="worker processes "
                                 "(default $OTOC_WORKERS or 1)")
            sp.add_argument("--force", action="store_true",
                            help="overwrite an existing run directory")
    return ap


def _validate_cmd(args):
    path = args.config_pos or args.config
    if path is None:
        print("config error: validate needs a config file", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(method=None, path=path, overrides=args.overrides)
    except ConfigError as exc:
        loc = f" [{exc.field}]" if exc.field else ""
        print(f"config error{loc}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    p = cfg.potential.params
    print(f"ok: {cfg.method} config valid (nothing executed)")
    print(f"V_b = {p.barrier_height:.12g}, T_c = {p.t_crossover:.12g}")
    for w in cfg.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd is None:
        parser.print_help()
        return EXIT_CONFIG
    cmd = _ALIASES.get(args.cmd, args.cmd)
    if cmd == "validate":
        return _validate_cmd(args)

    try:
        cfg = load_config(method=cmd, path=args.config,
                          overrides=args.overrides, workers=args.workers,
                          out_dir=args.out)
        out = cfg.out_dir or os.path.join("runs", cmd)
        manifest_path = os.path.join(out, MANIFEST_NAME)
        if os.path.exists(manifest_path) and not args.force:
            raise ConfigError(
                f"{out} already holds a run ({MANIFEST_NAME} present); "
                "pass --force to overwrite or choose another --out")
        workers = cfg.workers  # may raise on a bad OTOC_WORKERS
    except ConfigError as exc:
        loc = f" [{exc.field}]" if exc.field else ""
        print(f"config error{loc}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(out, exist_ok=True)
    created = datetime.datetime.now(datetime.timezone.utc)
    t0 = time.monotonic()
    try:
        names, summary, lines = HANDLERS[cmd](cfg, out)
    except ConfigError as exc:
        loc = f" [{exc.field}]" if exc.field else ""
        print(f"config error{loc}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sampling.SamplerError, instanton.InstantonError,
            np.linalg.LinAlgError, FloatingPointError, ArithmeticError,
            ValueError) as exc:
        print(f"numerical failure in {cmd}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finished = datetime.datetime.now(datetime.timezone.utc)

    head = [f"otoc {cmd}"]
    for w in cfg.warnings:
        head.append(f"warning: {w}")
    all_lines = head + lines
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write("\n".join(all_lines) + "\n")
    names = list(names) + ["summary.txt"]

    manifest = RunManifest(
        subcommand=cmd, config=cfg.raw, config_path=cfg.path,
        derived=_derived_block(cfg), seed=cfg.seed, workers=workers,
        created_utc=created.isoformat(timespec="seconds"),
        finished_utc=finished.isoformat(timespec="seconds"),
        elapsed_s=round(time.monotonic() - t0, 3),
        outputs=checksum_outputs(out, names),
        summary=_jsonable(summary), warnings=list(cfg.warnings))
    manifest.write(out)

    for line in all_lines:
        print(line)
    print(f"wrote {len(names)} files + {MANIFEST_NAME} to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
