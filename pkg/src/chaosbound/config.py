"""Run configuration: INI schema, temperature literals, validation.

A run is described by a flat key-value file with sections (configparser
dialect).  Every key is checked against the schema below; unknown
sections or keys are rejected, as are out-of-range values.  Temperatures
may be absolute ("0.35") or multiples of the crossover temperature
("1.1Tc"); both forms resolve to the same absolute value.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .potential import DoubleWell2D, PotentialParams


class ConfigError(ValueError):
    """Rejected configuration.  `field` names the offending key."""

    def __init__(self, message, field=""):
        super().__init__(message)
        self.field = field


METHODS = (
    "potential-scan", "classical-otoc", "rpmd-otoc", "quantum-otoc",
    "micro-otoc", "poincare", "centroid-poincare", "rp-trajectory",
    "instanton", "husimi", "gyration", "sweep",
)

_TC_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*[Tt]c$")


def parse_temperature(text, t_crossover):
    """Absolute value of a temperature literal: "0.5" or "0.95Tc"."""
    s = str(text).strip()
    m = _TC_RE.match(s)
    if m:
        return float(m.group(1)) * t_crossover
    try:
        return float(s)
    except ValueError:
        raise ConfigError(
            f"bad temperature literal {s!r} (want a number or '<x>Tc')")


def parse_temperature_list(text, t_crossover):
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty temperature list")
    return [parse_temperature(p, t_crossover) for p in parts]


# ------------------------------------------------------------------ schema

@dataclass(frozen=True)
class Field:
    kind: str              # int | float | temp | temp_list | str | choice
    default: object = None  # None means "no default; optional unless required"
    lo: float | None = None          # inclusive lower bound (numeric kinds)
    lo_open: bool = False            # exclusive lower bound instead
    choices: tuple = ()
    help: str = ""


def _f(kind, default=None, lo=None, lo_open=False, choices=(), help=""):
    return Field(kind, default, lo, lo_open, tuple(choices), help)


# Sections and keys.  `lo` with lo_open=True means "strictly greater".
SCHEMA: dict[str, dict[str, Field]] = {
    "run": {
        "method": _f("choice", choices=METHODS),
        "seed": _f("int", 0, lo=0),
        "workers": _f("int", None, lo=1),
        "out_dir": _f("str"),
    },
    "potential": {
        "m": _f("float", 0.5, lo=0, lo_open=True),
        "g": _f("float", 0.08, lo=0, lo_open=True),
        "omega_b": _f("float", 2.0, lo=0, lo_open=True),
        "alpha": _f("float", 0.382, lo=0, lo_open=True),
        "hbar": _f("float", 1.0, lo=0, lo_open=True),
        "kb": _f("float", 1.0, lo=0, lo_open=True),
    },
    "otoc": {
        "temperature": _f("temp", lo=0, lo_open=True),
        "temperatures": _f("temp_list", lo=0, lo_open=True),
        "n_traj": _f("int", 4000, lo=1),
        "t_max": _f("float", 10.0, lo=0, lo_open=True),
        "dt": _f("float", 0.002, lo=0, lo_open=True),
        "record_every": _f("int", 10, lo=1),
        "n_beads": _f("int", None, lo=1),
        # micro-otoc only:
        "kind": _f("choice", "classical", choices=("classical", "rpmd")),
        "energy": _f("float", None, lo=0, lo_open=True),
        "t_label": _f("temp", None, lo=0, lo_open=True),
    },
    "section": {
        "energy": _f("float", None, lo=0, lo_open=True),
        "t_label": _f("temp", None, lo=0, lo_open=True),
        "n_traj": _f("int", 200, lo=1),
        "t_max": _f("float", 400.0, lo=0, lo_open=True),
        "dt": _f("float", 0.002, lo=0, lo_open=True),
        "max_cross": _f("int", 4096, lo=1),
        "n_beads": _f("int", None, lo=1),
    },
    "trajectory": {
        "traj": _f("int", 0, lo=0),
        "record_every": _f("int", 50, lo=1),
        "n_snapshots": _f("int", 12, lo=2),
    },
    "grid": {
        "nx": _f("int", 80, lo=16),
        "ny": _f("int", 64, lo=16),
        "xmin": _f("float", -6.0),
        "xmax": _f("float", 6.0),
        "ymin": _f("float", -3.0),
        "ymax": _f("float", 9.0),
    },
    "quantum": {
        "t_max": _f("float", 8.0, lo=0, lo_open=True),
        "dt_out": _f("float", 0.05, lo=0, lo_open=True),
        "comm_tol": _f("float", 1e-12, lo=0, lo_open=True),
        "tail": _f("float", 1e-6, lo=0, lo_open=True),
        "pad_kt": _f("float", 10.0, lo=0, lo_open=True),
        # husimi only:
        "state_index": _f("int", None, lo=0),
        "nx_out": _f("int", 91, lo=4),
        "np_out": _f("int", 61, lo=4),
        "x_lo": _f("float", -4.5),
        "x_hi": _f("float", 4.5),
        "p_lo": _f("float", -3.0),
        "p_hi": _f("float", 3.0),
    },
    "instanton": {
        "temperature": _f("temp", lo=0, lo_open=True),
        "temperatures": _f("temp_list", lo=0, lo_open=True),
        "n_beads": _f("int", None, lo=4),
        "tol": _f("float", 1e-9, lo=0, lo_open=True),
        "max_iter": _f("int", 200, lo=1),
        "trust": _f("float", 0.3, lo=0, lo_open=True),
        "zero_band": _f("float", 1e-4, lo=0, lo_open=True),
    },
    "fit": {
        "mode": _f("choice", "auto", choices=("auto", "manual")),
        "t_start": _f("float", None, lo=0),
        "t_end": _f("float", None, lo=0, lo_open=True),
        "min_points": _f("int", 20, lo=4),
        "flat_tol": _f("float", 0.10, lo=0, lo_open=True),
        "r2_min": _f("float", 0.995, lo=0, lo_open=True),
        "noise_mult": _f("float", 5.0, lo=0),
        "local_half": _f("int", 5, lo=1),
        "local_sigma_mult": _f("float", 2.0, lo=0),
    },
    "gyration": {
        "in_dir": _f("str"),
        "bins": _f("int", 60, lo=4),
        "d_max": _f("float", 1.5, lo=0, lo_open=True),
        "min_points": _f("int", 40, lo=4),
    },
    "sweep": {
        "method": _f("choice", "classical",
                     choices=("classical", "rpmd", "quantum")),
    },
}

# Sections each method may use (beyond run/potential, always allowed).
_METHOD_SECTIONS = {
    "potential-scan": ("grid",),
    "classical-otoc": ("otoc", "fit"),
    "rpmd-otoc": ("otoc", "fit"),
    "quantum-otoc": ("otoc", "quantum", "grid", "fit"),
    "micro-otoc": ("otoc", "fit"),
    "poincare": ("section",),
    "centroid-poincare": ("section",),
    "rp-trajectory": ("section", "trajectory"),
    "instanton": ("instanton",),
    "husimi": ("quantum", "grid"),
    "gyration": ("section", "gyration"),
    "sweep": ("sweep", "otoc", "quantum", "grid", "fit"),
}


@dataclass
class RunConfig:
    """A validated run description.

    `raw` echoes exactly the keys the user supplied (after overrides),
    as strings; reloading the echo reproduces the run.  `values` holds
    every schema key for the method, defaults filled in.
    """

    method: str
    potential: DoubleWell2D
    values: dict[str, dict[str, object]]
    raw: dict[str, dict[str, str]]
    warnings: list[str] = field(default_factory=list)
    path: str | None = None

    def get(self, section, key):
        return self.values[section][key]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def workers(self) -> int:
        w = self.values["run"]["workers"]
        if w is not None:
            return w
        env = os.environ.get("OTOC_WORKERS", "").strip()
        if env:
            try:
                w = int(env)
            except ValueError:
                raise ConfigError(f"OTOC_WORKERS={env!r} is not an integer",
                                  "run.workers")
            if w < 1:
                raise ConfigError("OTOC_WORKERS must be >= 1", "run.workers")
            return w
        return 1

    @property
    def out_dir(self):
        return self.values["run"]["out_dir"]


# ----------------------------------------------------------------- loading

def _parse_value(section, key, text, spec: Field, t_crossover):
    name = f"{section}.{key}"
    s = str(text).strip()
    try:
        if spec.kind == "int":
            # reject floats masquerading as ints
            v = int(s, 10)
        elif spec.kind == "float":
            v = float(s)
            if not math.isfinite(v):
                raise ValueError("not finite")
        elif spec.kind == "temp":
            v = parse_temperature(s, t_crossover)
        elif spec.kind == "temp_list":
            v = parse_temperature_list(s, t_crossover)
        elif spec.kind == "choice":
            if s not in spec.choices:
                raise ValueError(f"must be one of {', '.join(spec.choices)}")
            return s
        else:  # str
            return s
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{name}: bad value {s!r} ({exc})", name)
    vals = v if isinstance(v, list) else [v]
    for x in vals:
        if spec.lo is not None:
            if spec.lo_open and not x > spec.lo:
                raise ConfigError(
                    f"{name}: {x!r} must be > {spec.lo}", name)
            if not spec.lo_open and not x >= spec.lo:
                raise ConfigError(
                    f"{name}: {x!r} must be >= {spec.lo}", name)
    return v


def _apply_overrides(raw, overrides, method):
    """--set key=value entries.  Qualified "section.key" always works;
    a bare key must be unambiguous among the method's sections."""
    allowed = ("run", "potential") + _METHOD_SECTIONS[method]
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, val = item.split("=", 1)
        key = key.strip()
        if "." in key:
            sec, k = key.split(".", 1)
            if sec not in SCHEMA or k not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r}", key)
            if sec not in allowed:
                raise ConfigError(
                    f"section [{sec}] does not apply to {method}", key)
        else:
            hits = [s for s in allowed if key in SCHEMA[s]]
            if not hits:
                raise ConfigError(f"unknown key {key!r}", key)
            if len(hits) > 1:
                raise ConfigError(
                    f"key {key!r} is ambiguous (sections: "
                    f"{', '.join(hits)}); qualify as section.key", key)
            sec, k = hits[0], key
        raw.setdefault(sec, {})[k] = val.strip()
    return raw


def _require(values, section, key, method, hint=""):
    if values[section].get(key) is None:
        msg = f"{method} requires {section}.{key}"
        if hint:
            msg += f" ({hint})"
        raise ConfigError(msg, f"{section}.{key}")


def load_config(method=None, path=None, overrides=(), workers=None,
                out_dir=None) -> RunConfig:
    """Parse, override, type-check, and cross-validate a run config.

    `method` comes from the subcommand; if the file also names one they
    must agree.  `workers` / `out_dir` are command-line overrides.
    """
    raw: dict[str, dict[str, str]] = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}")
        if cp.defaults():
            raise ConfigError(
                "top-level keys are not allowed; put every key in a section")
        for sec in cp.sections():
            raw[sec] = dict(cp.items(sec))

    file_method = raw.get("run", {}).get("method")
    if method is None:
        if file_method is None:
            raise ConfigError("run.method missing", "run.method")
        method = file_method
        if method not in METHODS:
            raise ConfigError(
                f"run.method {method!r} is not one of {', '.join(METHODS)}",
                "run.method")
    elif file_method is not None and file_method != method:
        raise ConfigError(
            f"config says run.method={file_method} but the {method} "
            "subcommand was invoked", "run.method")
    raw.setdefault("run", {})["method"] = method

    raw = _apply_overrides(raw, overrides, method)
    if raw["run"]["method"] != method:
        raise ConfigError(
            f"run.method override {raw['run']['method']!r} conflicts with "
            f"the {method} subcommand", "run.method")
    if workers is not None:
        raw["run"]["workers"] = str(workers)
    if out_dir is not None:
        raw["run"]["out_dir"] = str(out_dir)

    allowed = ("run", "potential") + _METHOD_SECTIONS[method]
    for sec in raw:
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", sec)
        if sec not in allowed:
            raise ConfigError(
                f"section [{sec}] does not apply to method {method}", sec)
        for key in raw[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}", f"{sec}.{key}")

    # potential first: temperature literals need T_c
    pp = {}
    for key, spec in SCHEMA["potential"].items():
        text = raw.get("potential", {}).get(key)
        pp[key] = spec.default if text is None else _parse_value(
            "potential", key, text, spec, None)
    params = PotentialParams(**pp)
    pot = DoubleWell2D(params)
    tc = params.t_crossover

    values: dict[str, dict[str, object]] = {}
    for sec in allowed:
        values[sec] = {}
        for key, spec in SCHEMA[sec].items():
            text = raw.get(sec, {}).get(key)
            values[sec][key] = spec.default if text is None else \
                _parse_value(sec, key, text, spec, tc)

    cfg = RunConfig(method=method, potential=pot, values=values,
                    raw={s: dict(kv) for s, kv in raw.items() if kv},
                    path=path)
    _cross_validate(cfg)
    cfg.warnings = physics_warnings(cfg)
    return cfg


def _cross_validate(cfg: RunConfig):
    """Method-specific requirements and consistency rules."""
    m, v = cfg.method, cfg.values
    if m in ("classical-otoc", "rpmd-otoc", "quantum-otoc"):
        _require(v, "otoc", "temperature", m)
    if m == "micro-otoc":
        if v["otoc"]["kind"] == "classical":
            _require(v, "otoc", "energy", m, "shell energy, classical kind")
        else:
            _require(v, "otoc", "t_label", m,
                     "bead-count label temperature, rpmd kind")
    if m == "poincare":
        _require(v, "section", "energy", m)
    if m in ("centroid-poincare", "rp-trajectory"):
        _require(v, "section", "t_label", m)
    if m == "gyration" and not v["gyration"].get("in_dir"):
        _require(v, "section", "t_label", m,
                 "or give gyration.in_dir of a centroid-poincare run")
    if m == "instanton":
        ts = v["instanton"]["temperatures"]
        t1 = v["instanton"]["temperature"]
        if ts is None and t1 is None:
            raise ConfigError(
                "instanton requires instanton.temperature or "
                "instanton.temperatures", "instanton.temperature")
        nb = v["instanton"]["n_beads"]
        if nb is not None and nb % 2:
            raise ConfigError("instanton.n_beads must be even",
                              "instanton.n_beads")
    if m in ("quantum-otoc", "husimi") or (
            m == "sweep" and v["sweep"]["method"] == "quantum"):
        if "grid" not in cfg.raw or not cfg.raw["grid"]:
            raise ConfigError(
                f"{m} needs an explicit [grid] section (nx, ny, xmin, "
                "xmax, ymin, ymax): eigenbasis convergence depends on it",
                "grid")
    if "grid" in v:
        g = v["grid"]
        if g["xmax"] <= g["xmin"] or g["ymax"] <= g["ymin"]:
            raise ConfigError("grid box is empty", "grid")
    if "fit" in v and v["fit"]["mode"] == "manual":
        if v["fit"]["t_start"] is None or v["fit"]["t_end"] is None:
            raise ConfigError(
                "fit.mode=manual needs fit.t_start and fit.t_end", "fit")
        if v["fit"]["t_end"] <= v["fit"]["t_start"]:
            raise ConfigError("fit.t_end must exceed fit.t_start",
                              "fit.t_end")


# ------------------------------------------------------- physics warnings

def _stiffest_frequency(cfg: RunConfig):
    """Largest harmonic frequency the integrator must resolve: physical
    well/barrier curvature, plus the stiffest internal spring mode when
    beads are in play."""
    from .ring_polymer import default_n_beads
    from .sampling import nm_frequencies

    pot = cfg.potential
    p = pot.params
    q0, _ = pot.minimum()
    h = pot.hess(q0)
    w_pot = max(math.sqrt(max(np.linalg.eigvalsh(h).max(), 0.0) / p.m),
                p.omega_b)

    sec = "otoc" if "otoc" in cfg.values else "section"
    nb = cfg.values.get(sec, {}).get("n_beads")
    t_ref = None
    for s, k in ((sec, "temperature"), (sec, "t_label"),
                 ("instanton", "temperature")):
        t_ref = cfg.values.get(s, {}).get(k) or t_ref
    temps = cfg.values.get("otoc", {}).get("temperatures")
    if t_ref is None and temps:
        t_ref = max(temps)
    rp_method = cfg.method in ("rpmd-otoc", "centroid-poincare",
                               "gyration") or (
        cfg.method == "micro-otoc" and
        cfg.values["otoc"]["kind"] == "rpmd") or (
        cfg.method == "sweep" and
        cfg.values["sweep"]["method"] == "rpmd")
    if not rp_method or t_ref is None:
        return w_pot
    if nb is None:
        nb = default_n_beads(pot, t_ref)
    if nb < 2:
        return w_pot
    beta_n = 1.0 / (p.kb * t_ref * nb)
    w_spring = nm_frequencies(nb, beta_n, p.hbar).max()
    return math.hypot(w_pot, w_spring)


# Velocity-Verlet linear stability on a harmonic mode needs dt*omega < 2;
# warn at a tenth of that so accuracy problems surface before blowup.
DT_OMEGA_WARN = 0.2


def physics_warnings(cfg: RunConfig) -> list[str]:
    """Sanity checks that do not execute the pipeline."""
    out = []
    p = cfg.potential.params
    dt = None
    for sec in ("otoc", "section"):
        if sec in cfg.values and cfg.values[sec].get("dt") is not None:
            dt = cfg.values[sec]["dt"]
            break
    if dt is not None and cfg.method not in ("potential-scan", "husimi",
                                             "instanton", "quantum-otoc"):
        w_max = _stiffest_frequency(cfg)
        if dt * w_max > DT_OMEGA_WARN:
            out.append(
                f"dt*omega_max = {dt * w_max:.3g} exceeds {DT_OMEGA_WARN} "
                f"(stiffest mode {w_max:.3g}); the splitting destabilizes "
                f"at dt*omega = 2, shrink dt below "
                f"{DT_OMEGA_WARN / w_max:.2g}")

    quantum_run = cfg.method in ("quantum-otoc", "husimi") or (
        cfg.method == "sweep" and cfg.values["sweep"]["method"] == "quantum")
    if quantum_run and "otoc" in cfg.values:
        temps = []
        for key in ("temperature",):
            t = cfg.values["otoc"].get(key)
            if t is not None:
                temps.append(t)
        temps.extend(cfg.values["otoc"].get("temperatures") or [])
        if not temps and cfg.method == "sweep":
            temps = [3.0 * p.t_crossover]  # hottest point of the default grid
        tail = cfg.values.get("quantum", {}).get("tail", 1e-6)
        ridge = p.g * p.a_well**2 + p.morse_d  # dissociation plateau
        for t in temps:
            w = math.exp(-ridge / (p.kb * t))
            if w > tail:
                out.append(
                    f"Boltzmann weight at the dissociation ridge "
                    f"({ridge:.4g}) is {w:.2g} > tail {tail:.2g} at "
                    f"T = {t:.6g}: box eigenstates above the ridge are "
                    f"artifacts; lower the temperature")
    return out
