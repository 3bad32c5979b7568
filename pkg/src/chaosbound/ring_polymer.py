"""Ring-polymer (RPMD) OTOCs, sections, and polymer geometry.

Conventions: N beads q_1..q_N with cyclic springs, beta_N = beta/N,
spring constant k = m/(beta_N hbar)^2, so

    H_N = sum_i p_i^2/2m + U_N,
    U_N = sum_i V(q_i) + (k/2) sum_i |q_i - q_{i-1}|^2.

Sampling weight is exp(-beta_N H_N): bead momenta are Gaussian at
effective temperature N*T.  The RPMD OTOC is
C(t) = hbar^2 <|d Xbar(t)/d Xbar(0)|^2> with Xbar the x centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine, sampling
from .classical import _drift, _steps, sample_thermal_classical
from .series import OtocSeries, PoincareSet, ensemble_otoc


def beta_of(pot, temperature):
    return 1.0 / (pot.params.kb * temperature)


def spring_constant(pot, temperature, n_beads):
    beta_n = beta_of(pot, temperature) / n_beads
    return pot.mass / (beta_n * pot.params.hbar) ** 2


def omega_ref(pot):
    """Stiffest well frequency: max of the barrier frequency and the
    Morse well frequency alpha*sqrt(2D/m)."""
    p = pot.params
    return max(p.omega_b, p.alpha * math.sqrt(2.0 * p.morse_d / p.m))


def default_n_beads(pot, temperature) -> int:
    """N = max(16, ceil(8 beta hbar w_ref / pi)), rounded up to even."""
    beta = beta_of(pot, temperature)
    n = max(16, math.ceil(8.0 * beta * pot.params.hbar * omega_ref(pot)
                          / math.pi))
    return n + (n % 2)


def matsubara_freq1(pot, temperature) -> complex:
    """First Matsubara frequency sqrt(4 pi^2/(beta hbar)^2 - w_b^2);
    real above the crossover temperature, imaginary below."""
    p = pot.params
    beta = beta_of(pot, temperature)
    val2 = 4.0 * math.pi**2 / (beta * p.hbar) ** 2 - p.omega_b**2
    if val2 >= 0.0:
        return complex(math.sqrt(val2), 0.0)
    return complex(0.0, math.sqrt(-val2))


def u_n(pot, q, temperature):
    """Ring-polymer potential U_N for configurations q (..., N, 2)."""
    q = np.asarray(q, dtype=float)
    k = spring_constant(pot, temperature, q.shape[-2])
    return sampling.rp_potential_energy(pot, q, k)


def rp_force(pot, q, temperature):
    """-grad U_N, shape (..., N, 2)."""
    q = np.asarray(q, dtype=float)
    k = spring_constant(pot, temperature, q.shape[-2])
    f = -pot.grad(q)
    if q.shape[-2] > 1:
        f -= k * (2.0 * q - np.roll(q, 1, axis=-2) - np.roll(q, -1, axis=-2))
    return f


def rp_hessian(pot, q, temperature):
    """Dense Hessian of U_N, shape (2N, 2N), bead-major (x_i, y_i) order."""
    q = np.asarray(q, dtype=float)
    nb = q.shape[-2]
    k = spring_constant(pot, temperature, nb)
    h = np.zeros((2 * nb, 2 * nb))
    hv = pot.hess(q)  # (N, 2, 2)
    for i in range(nb):
        h[2 * i:2 * i + 2, 2 * i:2 * i + 2] = hv[i]
    if nb > 1:
        for i in range(nb):
            for c in range(2):
                h[2 * i + c, 2 * i + c] += 2.0 * k
                h[2 * i + c, 2 * ((i + 1) % nb) + c] -= k
                h[2 * i + c, 2 * ((i - 1) % nb) + c] -= k
    return h


def radius_of_gyration(q):
    """r_g = sqrt(mean_i |q_i - qbar|^2) for configs (..., N, 2)."""
    q = np.asarray(q, dtype=float)
    d = q - q.mean(axis=-2, keepdims=True)
    return np.sqrt((d * d).sum(axis=-1).mean(axis=-1))


def sample_thermal_rp(pot, temperature, n_beads, n_traj, seed,
                      sampler_opts=None):
    """Thermal ring-polymer phase-space samples under exp(-beta_N H_N).

    A single bead collapses H_N to the classical Hamiltonian, so N=1
    delegates to the classical Boltzmann sampler; shared seeds then give
    bit-identical ensembles.
    """
    if n_beads == 1:
        return sample_thermal_classical(pot, temperature, n_traj, seed,
                                        sampler_opts)
    opts = dict(sampler_opts or {})
    beta = beta_of(pot, temperature)
    rngs = sampling.traj_rngs(seed, n_traj)
    q = sampling.pile_positions(pot, beta, n_beads, rngs, **opts)
    sig_p = math.sqrt(pot.mass * n_beads / beta)
    p = sampling.gaussian_momenta(rngs, n_beads, sig_p)
    return q, p


def rpmd_otoc(pot, temperature, n_traj=4000, t_max=10.0, n_beads=None,
              dt=0.002, record_every=10, seed=0, workers=1,
              sampler_opts=None) -> OtocSeries:
    nb = n_beads or default_n_beads(pot, temperature)
    q0, p0 = sample_thermal_rp(pot, temperature, nb, n_traj, seed,
                               sampler_opts)
    k = spring_constant(pot, temperature, nb)
    n_steps, times = _steps(t_max, dt, record_every)
    stab, energy, rg = engine.run_otoc_ensemble(
        pot, q0, p0, dt, n_steps, record_every, spring_k=k, workers=workers)
    meta = {"temperature": temperature, "seed": seed, "dt": dt,
            "n_beads": nb, "max_energy_drift": _drift(energy),
            "mean_rg_max": float(rg[:, -1].mean())}
    return ensemble_otoc(stab, times, pot.params.hbar, "rpmd_thermal", meta)


def rpmd_micro_otoc(pot, t_label, n_traj=2000, t_max=12.0, n_beads=None,
                    energy_per_bead=None, dt=0.002, record_every=10,
                    seed=0, workers=1, sampler_opts=None) -> OtocSeries:
    """OTOC on the H_N = N * energy_per_bead shell (default: the barrier
    height).  t_label sets the spring stiffness through beta_N only."""
    nb = n_beads or default_n_beads(pot, t_label)
    e_pb = pot.params.barrier_height if energy_per_bead is None \
        else energy_per_bead
    e_tot = nb * e_pb
    k = spring_constant(pot, t_label, nb)
    rngs = sampling.traj_rngs(seed, n_traj)
    q0, p0 = sampling.rp_microcanonical(pot, nb, e_tot, rngs)
    n_steps, times = _steps(t_max, dt, record_every)
    stab, energy, rg = engine.run_otoc_ensemble(
        pot, q0, p0, dt, n_steps, record_every, spring_k=k, workers=workers)
    meta = {"t_label": t_label, "energy": e_tot, "seed": seed, "dt": dt,
            "n_beads": nb, "max_energy_drift": _drift(energy),
            "mean_rg_max": float(rg[:, -1].mean())}
    return ensemble_otoc(stab, times, pot.params.hbar, "rpmd_micro", meta)


def centroid_poincare(pot, t_label, n_traj=300, t_max=400.0, n_beads=None,
                      energy_per_bead=None, dt=0.002, seed=0, workers=1,
                      max_cross=4096, sampler_opts=None) -> PoincareSet:
    """Centroid surface of section (Ybar=0, upward) on the
    H_N = N * energy_per_bead shell.  Each point carries the trajectory's
    running max radius of gyration."""
    nb = n_beads or default_n_beads(pot, t_label)
    e_pb = pot.params.barrier_height if energy_per_bead is None \
        else energy_per_bead
    e_tot = nb * e_pb
    k = spring_constant(pot, t_label, nb)
    rngs = sampling.traj_rngs(seed, n_traj)
    q0, p0 = sampling.rp_microcanonical(pot, nb, e_tot, rngs)
    n_steps = int(round(t_max / dt))
    counts, data, e0, e1, rg_fin = engine.run_section_ensemble(
        pot, q0, p0, dt, n_steps, max_cross, spring_k=k, workers=workers)
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
    meta = {"t_label": t_label, "seed": seed, "dt": dt, "n_beads": nb,
            "t_max": t_max, "max_energy_drift": drift,
            "rg_final": rg_fin.tolist()}
    if points.shape[0] == 0:
        meta["warning"] = "no section crossings within t_max"
    return PoincareSet(points=points, energy=e_tot, meta=meta)


# --------------------------------------------------------------- estimators

def rp_trajectory(pot, t_label, traj=0, t_max=100.0, n_beads=None,
                  energy_per_bead=None, dt=0.002, record_every=50,
                  n_snapshots=12, seed=0):
    """Bead-resolved history of one H_N = N * energy_per_bead shell
    trajectory, for inspection and plotting.

    Trajectory `traj` is ensemble member `traj` of the shell ensemble a
    centroid_poincare run draws under the same (seed, t_label, n_beads,
    energy_per_bead): every member has its own counter-based random
    stream, so the selection is independent of how many trajectories any
    other run drew.

    Returns (path, snap_times, snapshots, meta): path is (n_rec + 1, 5)
    with columns (t, Xbar, Ybar, P_Xbar, r_g); snapshots is
    (n_snapshots, N, 2) bead configurations at snap_times (always
    including t = 0 and the final time).
    """
    from . import _kern_np as knp

    nb = n_beads or default_n_beads(pot, t_label)
    e_pb = pot.params.barrier_height if energy_per_bead is None \
        else energy_per_bead
    e_tot = nb * e_pb
    k = spring_constant(pot, t_label, nb)
    rngs = sampling.traj_rngs(seed, traj + 1)
    q0, p0 = sampling.rp_microcanonical(pot, nb, e_tot, rngs)

    n_steps = int(round(t_max / dt))
    if n_steps % record_every:
        raise ValueError("t_max/dt must be a multiple of record_every")
    snap_steps = set(int(s) for s in np.linspace(0, n_steps, n_snapshots)
                     .round().astype(int))
    kind, kp = pot.kind, pot.kernel_params()
    q = np.ascontiguousarray(q0[traj:traj + 1], dtype=float)
    p = np.ascontiguousarray(p0[traj:traj + 1], dtype=float)
    buf = np.empty_like(q)
    inv_m = 1.0 / pot.mass
    e_start = float(knp._energy(kind, kp, k, q, p)[0])

    def row(step):
        c = q[0].mean(axis=0)
        return (step * dt, c[0], c[1], float(p[0, :, 0].mean()),
                float(radius_of_gyration(q[0])))

    path = [row(0)]
    snaps = {0: q[0].copy()}
    for step in range(1, n_steps + 1):
        knp._step_no_tangent(kind, kp, k, q, p, dt, inv_m, buf)
        if step % record_every == 0:
            path.append(row(step))
        if step in snap_steps:
            snaps[step] = q[0].copy()
    e_end = float(knp._energy(kind, kp, k, q, p)[0])
    drift = abs(e_end - e_start) / max(abs(e_start), 1e-30)
    meta = {"t_label": t_label, "traj": int(traj), "seed": seed, "dt": dt,
            "n_beads": nb, "energy": e_tot, "t_max": t_max,
            "max_energy_drift": drift}
    snap_times = np.array(sorted(snaps)) * dt
    snapshots = np.stack([snaps[s] for s in sorted(snaps)])
    return np.array(path), snap_times, snapshots, meta


def energy_estimators(pot, q, temperature):
    """(primitive, virial) total-energy estimators per configuration.

    Their ensemble means agree for a converged sampler; the cross-check
    is the standard sampling validation.
    """
    q = np.asarray(q, dtype=float)
    nb = q.shape[-2]
    beta = beta_of(pot, temperature)
    k = spring_constant(pot, temperature, nb)
    v_mean = pot.value(q).sum(axis=-1) / nb
    u_spring = sampling.rp_spring_energy(q, k)
    prim = nb / beta + v_mean - u_spring / nb
    grad = pot.grad(q)
    d = q - q.mean(axis=-2, keepdims=True)
    vir = 1.0 / beta + 0.5 * (d * grad).sum(axis=(-1, -2)) / nb + v_mean
    return prim, vir


# ----------------------------------------------------------------- gyration

@dataclass
class GyrationStats:
    threshold: float
    separation: float
    mu_lo: float
    mu_hi: float
    sigma_lo: float
    sigma_hi: float
    n_lo: int
    n_hi: int
    bimodal: bool


def gyration_split(values, min_frac=0.02) -> GyrationStats:
    """Two-cluster split of r_g values by exhaustive threshold scan
    (maximizing between-class variance).  `separation` is the cluster-mean
    gap over the pooled within-cluster spread; > 2 flags bimodality.
    """
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    if n < 8:
        raise ValueError("need at least 8 samples for a two-cluster split")
    lo_min = max(2, int(min_frac * n))
    csum = np.cumsum(v)
    total = csum[-1]
    best_score, best_i = -1.0, lo_min
    for i in range(lo_min, n - lo_min + 1):
        mu1 = csum[i - 1] / i
        mu2 = (total - csum[i - 1]) / (n - i)
        score = i * (n - i) * (mu1 - mu2) ** 2
        if score > best_score:
            best_score, best_i = score, i
    lo, hi = v[:best_i], v[best_i:]
    thr = 0.5 * (lo[-1] + hi[0])
    s_lo = lo.std(ddof=1) if lo.size > 1 else 0.0
    s_hi = hi.std(ddof=1) if hi.size > 1 else 0.0
    pooled = math.sqrt(0.5 * (s_lo**2 + s_hi**2))
    sep = abs(hi.mean() - lo.mean()) / pooled if pooled > 0 else math.inf
    return GyrationStats(threshold=float(thr), separation=float(sep),
                         mu_lo=float(lo.mean()), mu_hi=float(hi.mean()),
                         sigma_lo=float(s_lo), sigma_hi=float(s_hi),
                         n_lo=int(lo.size), n_hi=int(hi.size),
                         bimodal=bool(sep > 2.0))


def gyration_histogram(values, bins=60, value_range=None):
    """Histogram plus two-cluster statistics for max-r_g samples."""
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    return counts, edges, gyration_split(values)
