"""Ensemble driver: fixed-size blocks, optional worker pool.

Trajectories are always processed in blocks of BLOCK trajectories, in
index order, whatever the worker count.  Workers only distribute whole
blocks, so output files are byte-identical for any --workers value.
"""

from __future__ import annotations

import multiprocessing as mp

import numpy as np

from . import kernels

BLOCK = 256  # fixed block size; do not make this configurable


def _blocks(n: int):
    return [(i, min(i + BLOCK, n)) for i in range(0, n, BLOCK)]


def _otoc_task(args):
    q, p, dq, dp, kind, kp, spring_k, dt, n_steps, record_every = args
    return kernels.propagate_otoc(q, p, dq, dp, kind, kp, spring_k,
                                  dt, n_steps, record_every)


def _section_task(args):
    q, p, kind, kp, spring_k, dt, n_steps, max_cross = args
    return kernels.propagate_section(q, p, kind, kp, spring_k,
                                     dt, n_steps, max_cross)


def _run(task, args_list, workers):
    if workers <= 1:
        return [task(a) for a in args_list]
    with mp.get_context("fork").Pool(workers) as pool:
        return pool.map(task, args_list)


def run_otoc_ensemble(pot, q0, p0, dt, n_steps, record_every,
                      spring_k=0.0, workers=1):
    """Propagate tangent dynamics for the whole ensemble.

    q0, p0: (n_traj, n_beads, 2).  The tangent starts as a uniform unit
    displacement of every bead along x, so the recorded stability element
    is d Xbar(t) / d Xbar(0) for the centroid Xbar = mean_i x_i.

    Returns (stab, energy, rg_max), each (n_traj, n_rec).
    """
    q0 = np.ascontiguousarray(q0, dtype=float)
    p0 = np.ascontiguousarray(p0, dtype=float)
    n = q0.shape[0]
    kind, kp = pot.kind, pot.kernel_params()
    if n_steps % record_every != 0:
        raise ValueError("n_steps must be a multiple of record_every")
    args = []
    for lo, hi in _blocks(n):
        dq = np.zeros((hi - lo,) + q0.shape[1:])
        dq[..., 0] = 1.0
        dp = np.zeros_like(dq)
        args.append((q0[lo:hi].copy(), p0[lo:hi].copy(), dq, dp,
                     kind, kp, spring_k, dt, n_steps, record_every))
    parts = _run(_otoc_task, args, workers)
    stab = np.concatenate([r[0] for r in parts], axis=0)
    energy = np.concatenate([r[1] for r in parts], axis=0)
    rg_max = np.concatenate([r[2] for r in parts], axis=0)
    return stab, energy, rg_max


def run_section_ensemble(pot, q0, p0, dt, n_steps, max_cross,
                         spring_k=0.0, workers=1):
    """Collect centroid surface-of-section crossings for the ensemble.

    Returns (counts, data, e0, e1, rg_final); data is
    (n_traj, max_cross, 4) with columns (t, Xbar, P_Xbar, running max r_g).
    """
    q0 = np.ascontiguousarray(q0, dtype=float)
    p0 = np.ascontiguousarray(p0, dtype=float)
    n = q0.shape[0]
    kind, kp = pot.kind, pot.kernel_params()
    args = [(q0[lo:hi].copy(), p0[lo:hi].copy(), kind, kp, spring_k,
             dt, n_steps, max_cross) for lo, hi in _blocks(n)]
    parts = _run(_section_task, args, workers)
    counts = np.concatenate([r[0] for r in parts])
    data = np.concatenate([r[1] for r in parts], axis=0)
    e0 = np.concatenate([r[2] for r in parts])
    e1 = np.concatenate([r[3] for r in parts])
    rg_final = np.concatenate([r[4] for r in parts])
    return counts, data, e0, e1, rg_final
