"""Pure-numpy propagation kernels, vectorized over trajectories.

Mirrors the compiled kernels in _core.pyx: fourth-order symplectic
composition of velocity-Verlet (Suzuki-Yoshida triple jump) for a cyclic
bead chain with tangent-vector propagation.  Classical dynamics is the
n_beads = 1 case with zero spring constant.

Arrays q, p, dq, dp have shape (n_traj, n_beads, 2) and are advanced in
place; callers own the copies.
"""

from __future__ import annotations

import numpy as np

from .potential import KIND_DOUBLE_WELL, KIND_FREE, KIND_QUADRATIC

# Suzuki-Yoshida triple-jump coefficients
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1
KICK_C = (0.5 * _W1, 0.5 * (_W0 + _W1), 0.5 * (_W0 + _W1), 0.5 * _W1)
DRIFT_C = (_W1, _W0, _W1)


def _force(kind, kp, q, out):
    """out <- -grad V, bead-local part only."""
    x = q[..., 0]
    y = q[..., 1]
    if kind == KIND_DOUBLE_WELL:
        m, g, a, d, alpha = kp[0], kp[1], kp[2], kp[3], kp[4]
        u = np.exp(-alpha * y)
        x2 = x * x
        out[..., 0] = -4.0 * g * x * (x2 - a) * u
        out[..., 1] = -alpha * u * (2.0 * d * (1.0 - u) - g * x2 * (x2 - 2.0 * a))
    elif kind == KIND_QUADRATIC:
        out[..., 0] = -kp[1] * x
        out[..., 1] = -kp[2] * y
    elif kind == KIND_FREE:
        out[...] = 0.0
    else:
        raise ValueError(f"unknown potential kind {kind}")


def _hess_apply(kind, kp, q, dq, out):
    """out <- H_V(q) dq, bead-local part only."""
    x = q[..., 0]
    y = q[..., 1]
    if kind == KIND_DOUBLE_WELL:
        m, g, a, d, alpha = kp[0], kp[1], kp[2], kp[3], kp[4]
        u = np.exp(-alpha * y)
        x2 = x * x
        hxx = 4.0 * g * (3.0 * x2 - a) * u
        hxy = -4.0 * alpha * g * x * (x2 - a) * u
        hyy = alpha * alpha * u * (2.0 * d * (2.0 * u - 1.0) + g * x2 * (x2 - 2.0 * a))
        out[..., 0] = hxx * dq[..., 0] + hxy * dq[..., 1]
        out[..., 1] = hxy * dq[..., 0] + hyy * dq[..., 1]
    elif kind == KIND_QUADRATIC:
        out[..., 0] = kp[1] * dq[..., 0]
        out[..., 1] = kp[2] * dq[..., 1]
    elif kind == KIND_FREE:
        out[...] = 0.0
    else:
        raise ValueError(f"unknown potential kind {kind}")


def _pot_value(kind, kp, q):
    x = q[..., 0]
    y = q[..., 1]
    if kind == KIND_DOUBLE_WELL:
        m, g, a, d, alpha = kp[0], kp[1], kp[2], kp[3], kp[4]
        u = np.exp(-alpha * y)
        w = 1.0 - u
        x2 = x * x
        return g * (x2 - a) ** 2 + d * w * w - g * x2 * (x2 - 2.0 * a) * w
    if kind == KIND_QUADRATIC:
        return 0.5 * kp[1] * x * x + 0.5 * kp[2] * y * y
    if kind == KIND_FREE:
        return np.zeros(q.shape[:-1])
    raise ValueError(f"unknown potential kind {kind}")


def _spring_apply(spring_k, v, out):
    """out += spring_k * (2 v_i - v_{i-1} - v_{i+1}), cyclic in beads."""
    if v.shape[1] == 1:
        return  # neighbor terms cancel exactly for a single bead
    out += spring_k * (2.0 * v - np.roll(v, 1, axis=1) - np.roll(v, -1, axis=1))


def _kick(kind, kp, spring_k, q, p, dq, dp, c, buf):
    _force(kind, kp, q, buf)
    if q.shape[1] > 1:
        buf -= spring_k * (2.0 * q - np.roll(q, 1, axis=1) - np.roll(q, -1, axis=1))
    p += c * buf
    _hess_apply(kind, kp, q, dq, buf)
    _spring_apply(spring_k, dq, buf)
    dp -= c * buf


def _step(kind, kp, spring_k, q, p, dq, dp, dt, inv_m, buf):
    _kick(kind, kp, spring_k, q, p, dq, dp, KICK_C[0] * dt, buf)
    for i in range(3):
        q += (DRIFT_C[i] * dt * inv_m) * p
        dq += (DRIFT_C[i] * dt * inv_m) * dp
        _kick(kind, kp, spring_k, q, p, dq, dp, KICK_C[i + 1] * dt, buf)


def _energy(kind, kp, spring_k, q, p):
    m = kp[0]
    e = (p * p).sum(axis=(1, 2)) / (2.0 * m) + _pot_value(kind, kp, q).sum(axis=1)
    if q.shape[1] > 1:
        d = q - np.roll(q, 1, axis=1)
        e += 0.5 * spring_k * (d * d).sum(axis=(1, 2))
    return e


def _rg2(q):
    c = q.mean(axis=1, keepdims=True)
    d = q - c
    return (d * d).sum(axis=2).mean(axis=1)


def propagate_otoc(q, p, dq, dp, kind, kp, spring_k, dt, n_steps, record_every):
    """Advance the ensemble, recording the centroid stability element
    d Xbar(t) / d Xbar(0), the conserved energy, and the running max
    radius of gyration at every record point (t = 0 included).
    """
    n_traj, n_beads, _ = q.shape
    n_rec = n_steps // record_every + 1
    stab = np.empty((n_traj, n_rec))
    energy = np.empty((n_traj, n_rec))
    rg_max = np.empty((n_traj, n_rec))
    inv_m = 1.0 / kp[0]
    buf = np.empty_like(q)

    stab[:, 0] = dq[..., 0].mean(axis=1)
    energy[:, 0] = _energy(kind, kp, spring_k, q, p)
    running = np.sqrt(_rg2(q))
    rg_max[:, 0] = running

    k_rec = 1
    for step in range(1, n_steps + 1):
        _step(kind, kp, spring_k, q, p, dq, dp, dt, inv_m, buf)
        np.maximum(running, np.sqrt(_rg2(q)), out=running)
        if step % record_every == 0:
            stab[:, k_rec] = dq[..., 0].mean(axis=1)
            energy[:, k_rec] = _energy(kind, kp, spring_k, q, p)
            rg_max[:, k_rec] = running
            k_rec += 1
    return stab, energy, rg_max


def propagate_section(q, p, kind, kp, spring_k, dt, n_steps, max_cross):
    """Advance the ensemble collecting centroid surface-of-section points.

    A crossing is Ybar passing through 0 with positive centroid velocity.
    The crossing time gets one Newton refinement on a cubic Hermite model
    of Ybar(t); X and P_X are interpolated linearly at the refined time.

    Returns (counts, data, e0, e1, rg_final) where data has shape
    (n_traj, max_cross, 4) with columns (t, Xbar, P_Xbar, max r_g so far).
    """
    n_traj, n_beads, _ = q.shape
    counts = np.zeros(n_traj, dtype=np.int64)
    data = np.zeros((n_traj, max_cross, 4))
    inv_m = 1.0 / kp[0]
    buf = np.empty_like(q)

    e0 = _energy(kind, kp, spring_k, q, p)
    running = np.sqrt(_rg2(q))

    yb_prev = q[..., 1].mean(axis=1)
    vy_prev = p[..., 1].mean(axis=1) * inv_m
    xb_prev = q[..., 0].mean(axis=1)
    px_prev = p[..., 0].mean(axis=1)

    for step in range(1, n_steps + 1):
        _step_no_tangent(kind, kp, spring_k, q, p, dt, inv_m, buf)
        np.maximum(running, np.sqrt(_rg2(q)), out=running)

        yb = q[..., 1].mean(axis=1)
        vy = p[..., 1].mean(axis=1) * inv_m
        xb = q[..., 0].mean(axis=1)
        px = p[..., 0].mean(axis=1)

        hit = (yb_prev < 0.0) & (yb >= 0.0) & (vy > 0.0)
        if hit.any():
            idx = np.flatnonzero(hit & (counts < max_cross))
            if idx.size:
                y0, y1 = yb_prev[idx], yb[idx]
                m0, m1 = vy_prev[idx] * dt, vy[idx] * dt
                th = y0 / (y0 - y1)
                # one Newton step on the Hermite cubic
                h = (
                    (2 * th**3 - 3 * th**2 + 1) * y0
                    + (th**3 - 2 * th**2 + th) * m0
                    + (-2 * th**3 + 3 * th**2) * y1
                    + (th**3 - th**2) * m1
                )
                hp = (
                    (6 * th**2 - 6 * th) * y0
                    + (3 * th**2 - 4 * th + 1) * m0
                    + (-6 * th**2 + 6 * th) * y1
                    + (3 * th**2 - 2 * th) * m1
                )
                safe = np.abs(hp) > 1e-300
                th = np.where(safe, th - h / np.where(safe, hp, 1.0), th)
                th = np.clip(th, 0.0, 1.0)
                t_star = (step - 1) * dt + th * dt
                x_star = xb_prev[idx] + th * (xb[idx] - xb_prev[idx])
                p_star = px_prev[idx] + th * (px[idx] - px_prev[idx])
                c = counts[idx]
                data[idx, c, 0] = t_star
                data[idx, c, 1] = x_star
                data[idx, c, 2] = p_star
                data[idx, c, 3] = running[idx]
                counts[idx] += 1

        yb_prev, vy_prev, xb_prev, px_prev = yb, vy, xb, px

    e1 = _energy(kind, kp, spring_k, q, p)
    return counts, data, e0, e1, running


def _kick_no_tangent(kind, kp, spring_k, q, p, c, buf):
    _force(kind, kp, q, buf)
    if q.shape[1] > 1:
        buf -= spring_k * (2.0 * q - np.roll(q, 1, axis=1) - np.roll(q, -1, axis=1))
    p += c * buf


def _step_no_tangent(kind, kp, spring_k, q, p, dt, inv_m, buf):
    _kick_no_tangent(kind, kp, spring_k, q, p, KICK_C[0] * dt, buf)
    for i in range(3):
        q += (DRIFT_C[i] * dt * inv_m) * p
        _kick_no_tangent(kind, kp, spring_k, q, p, KICK_C[i + 1] * dt, buf)
