"""Classical OTOCs and surface-of-section maps.

The classical stability element is d x(t) / d x(0) from the propagated
tangent vector; C_cl(t) = hbar^2 <(dx_t/dx_0)^2> with thermal or
microcanonical initial conditions.
"""

from __future__ import annotations

import numpy as np

from . import engine, sampling
from .series import OtocSeries, PoincareSet, ensemble_otoc


def _steps(t_max, dt, record_every):
    n_steps = int(round(t_max / dt))
    n_steps -= n_steps % record_every
    if n_steps <= 0:
        raise ValueError("t_max too small for dt * record_every")
    times = np.arange(n_steps // record_every + 1) * (dt * record_every)
    return n_steps, times


def _drift(energy_rec):
    e0 = energy_rec[:, :1]
    scale = np.maximum(np.abs(e0), 1e-30)
    return float(np.max(np.abs(energy_rec - e0) / scale))


def sample_thermal_classical(pot, temperature, n_traj, seed,
                             sampler_opts=None):
    """Boltzmann phase-space samples: Metropolis positions, Gaussian
    momenta.  Returns (q (n,1,2), p (n,1,2))."""
    opts = dict(sampler_opts or {})
    beta = 1.0 / (pot.params.kb * temperature)
    rngs = sampling.traj_rngs(seed, n_traj)
    q = sampling.metropolis_positions(pot, beta, rngs, **opts)
    p = sampling.gaussian_momenta(rngs, 1, np.sqrt(pot.mass / beta))
    return q.reshape(n_traj, 1, 2), p


def classical_thermal_otoc(pot, temperature, n_traj=4000, t_max=10.0,
                           dt=0.002, record_every=10, seed=0, workers=1,
                           sampler_opts=None) -> OtocSeries:
    q0, p0 = sample_thermal_classical(pot, temperature, n_traj, seed,
                                      sampler_opts)
    n_steps, times = _steps(t_max, dt, record_every)
    stab, energy, _ = engine.run_otoc_ensemble(
        pot, q0, p0, dt, n_steps, record_every, spring_k=0.0, workers=workers)
    meta = {"temperature": temperature, "seed": seed, "dt": dt,
            "n_beads": 1, "max_energy_drift": _drift(energy)}
    return ensemble_otoc(stab, times, pot.params.hbar, "classical_thermal",
                         meta)


def classical_micro_otoc(pot, energy, n_traj=4000, t_max=10.0, dt=0.002,
                         record_every=10, seed=0, workers=1,
                         box=(-6.0, 6.0, -2.0, 8.0)) -> OtocSeries:
    """OTOC on the H = energy shell.  `energy` must exceed the potential
    minimum inside the sampling box."""
    _, v_min = pot.minimum()
    if energy <= v_min:
        raise ValueError(f"shell energy {energy} below potential minimum")
    rngs = sampling.traj_rngs(seed, n_traj)
    q0, p0 = sampling.uniform_shell_classical(pot, energy, rngs, box=box)
    n_steps, times = _steps(t_max, dt, record_every)
    stab, energy_rec, _ = engine.run_otoc_ensemble(
        pot, q0, p0, dt, n_steps, record_every, spring_k=0.0, workers=workers)
    meta = {"energy": energy, "seed": seed, "dt": dt, "n_beads": 1,
            "max_energy_drift": _drift(energy_rec)}
    return ensemble_otoc(stab, times, pot.params.hbar, "classical_micro",
                         meta)


def poincare_section(pot, energy, n_traj=200, t_max=400.0, dt=0.002,
                     seed=0, workers=1, max_cross=4096,
                     box=(-6.0, 6.0, -2.0, 8.0)) -> PoincareSet:
    """Classical y=0 (upward) surface of section on the H = energy shell."""
    rngs = sampling.traj_rngs(seed, n_traj)
    q0, p0 = sampling.uniform_shell_classical(pot, energy, rngs, box=box)
    n_steps = int(round(t_max / dt))
    counts, data, e0, e1, _ = engine.run_section_ensemble(
        pot, q0, p0, dt, n_steps, max_cross, spring_k=0.0, workers=workers)
    rows = []
    for i in range(n_traj):
        c = counts[i]
        if c:
            block = np.empty((c, 5))
            block[:, 0] = i
            block[:, 1:] = data[i, :c]
            rows.append(block)
    points = np.concatenate(rows, axis=0) if rows else np.empty((0, 5))
    drift = float(np.max(np.abs(e1 - e0) / np.maximum(np.abs(e0), 1e-30)))
    meta = {"seed": seed, "dt": dt, "n_beads": 1, "t_max": t_max,
            "max_energy_drift": drift}
    if points.shape[0] == 0:
        meta["warning"] = "no section crossings within t_max"
    return PoincareSet(points=points, energy=energy, meta=meta)


def in_allowed_region(pot, energy, x, px, tol=1e-9):
    """Section points must satisfy px^2/2m + V(x, 0) <= E."""
    x = np.asarray(x, dtype=float)
    q = np.stack([x, np.zeros_like(x)], axis=-1)
    return px * px / (2.0 * pot.mass) + pot.value(q) <= energy + tol
