# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled propagation kernels: cyclic bead chain with tangent vector,
fourth-order symplectic composition.  API matches _kern_np."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt

cnp.import_array()

cdef double W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
cdef double W0 = 1.0 - 2.0 * W1


cdef inline void _force1(int kind, double g, double a, double d, double alpha,
                         double kx, double ky, double x, double y,
                         double *fx, double *fy) noexcept nogil:
    cdef double u, x2
    if kind == 0:
        u = exp(-alpha * y)
        x2 = x * x
        fx[0] = -4.0 * g * x * (x2 - a) * u
        fy[0] = -alpha * u * (2.0 * d * (1.0 - u) - g * x2 * (x2 - 2.0 * a))
    elif kind == 1:
        fx[0] = -kx * x
        fy[0] = -ky * y
    else:
        fx[0] = 0.0
        fy[0] = 0.0


cdef inline void _hessv1(int kind, double g, double a, double d, double alpha,
                         double kx, double ky, double x, double y,
                         double vx, double vy, double *ox, double *oy) noexcept nogil:
    cdef double u, x2, hxx, hxy, hyy
    if kind == 0:
        u = exp(-alpha * y)
        x2 = x * x
        hxx = 4.0 * g * (3.0 * x2 - a) * u
        hxy = -4.0 * alpha * g * x * (x2 - a) * u
        hyy = alpha * alpha * u * (2.0 * d * (2.0 * u - 1.0) + g * x2 * (x2 - 2.0 * a))
        ox[0] = hxx * vx + hxy * vy
        oy[0] = hxy * vx + hyy * vy
    elif kind == 1:
        ox[0] = kx * vx
        oy[0] = ky * vy
    else:
        ox[0] = 0.0
        oy[0] = 0.0


cdef inline double _pot1(int kind, double g, double a, double d, double alpha,
                         double kx, double ky, double x, double y) noexcept nogil:
    cdef double u, w, x2
    if kind == 0:
        u = exp(-alpha * y)
        w = 1.0 - u
        x2 = x * x
        return g * (x2 - a) * (x2 - a) + d * w * w - g * x2 * (x2 - 2.0 * a) * w
    elif kind == 1:
        return 0.5 * kx * x * x + 0.5 * ky * y * y
    return 0.0


cdef void _kick(int kind, double g, double a, double d, double alpha,
                double kx, double ky, double spring_k, int nb,
                double[:, ::1] q, double[:, ::1] p,
                double[:, ::1] dq, double[:, ::1] dp,
                double c, bint tangent) noexcept nogil:
    cdef int j, jm, jp
    cdef double fx, fy
    for j in range(nb):
        _force1(kind, g, a, d, alpha, kx, ky, q[j, 0], q[j, 1], &fx, &fy)
        if nb > 1:
            jm = j - 1 if j > 0 else nb - 1
            jp = j + 1 if j < nb - 1 else 0
            fx -= spring_k * (2.0 * q[j, 0] - q[jm, 0] - q[jp, 0])
            fy -= spring_k * (2.0 * q[j, 1] - q[jm, 1] - q[jp, 1])
        p[j, 0] += c * fx
        p[j, 1] += c * fy
    if not tangent:
        return
    for j in range(nb):
        _hessv1(kind, g, a, d, alpha, kx, ky, q[j, 0], q[j, 1],
                dq[j, 0], dq[j, 1], &fx, &fy)
        if nb > 1:
            jm = j - 1 if j > 0 else nb - 1
            jp = j + 1 if j < nb - 1 else 0
            fx += spring_k * (2.0 * dq[j, 0] - dq[jm, 0] - dq[jp, 0])
            fy += spring_k * (2.0 * dq[j, 1] - dq[jm, 1] - dq[jp, 1])
        dp[j, 0] -= c * fx
        dp[j, 1] -= c * fy


cdef void _step(int kind, double g, double a, double d, double alpha,
                double kx, double ky, double spring_k, int nb,
                double[:, ::1] q, double[:, ::1] p,
                double[:, ::1] dq, double[:, ::1] dp,
                double dt, double inv_m, bint tangent) noexcept nogil:
    cdef double kc0 = 0.5 * W1 * dt
    cdef double kc1 = 0.5 * (W0 + W1) * dt
    cdef double dc[3]
    cdef double cc
    cdef int s, j
    dc[0] = W1 * dt
    dc[1] = W0 * dt
    dc[2] = W1 * dt
    _kick(kind, g, a, d, alpha, kx, ky, spring_k, nb, q, p, dq, dp, kc0, tangent)
    for s in range(3):
        cc = dc[s] * inv_m
        for j in range(nb):
            q[j, 0] += cc * p[j, 0]
            q[j, 1] += cc * p[j, 1]
        if tangent:
            for j in range(nb):
                dq[j, 0] += cc * dp[j, 0]
                dq[j, 1] += cc * dp[j, 1]
        _kick(kind, g, a, d, alpha, kx, ky, spring_k, nb, q, p, dq, dp,
              kc1 if s < 2 else kc0, tangent)


cdef double _energy1(int kind, double g, double a, double d, double alpha,
                     double kx, double ky, double spring_k, double inv_m,
                     int nb, double[:, ::1] q, double[:, ::1] p) noexcept nogil:
    cdef double e = 0.0
    cdef double ddx, ddy
    cdef int j, jm
    for j in range(nb):
        e += 0.5 * inv_m * (p[j, 0] * p[j, 0] + p[j, 1] * p[j, 1])
        e += _pot1(kind, g, a, d, alpha, kx, ky, q[j, 0], q[j, 1])
    if nb > 1:
        for j in range(nb):
            jm = j - 1 if j > 0 else nb - 1
            ddx = q[j, 0] - q[jm, 0]
            ddy = q[j, 1] - q[jm, 1]
            e += 0.5 * spring_k * (ddx * ddx + ddy * ddy)
    return e


cdef double _rg1(int nb, double[:, ::1] q) noexcept nogil:
    cdef double cx = 0.0, cy = 0.0, s = 0.0, ddx, ddy
    cdef int j
    for j in range(nb):
        cx += q[j, 0]
        cy += q[j, 1]
    cx /= nb
    cy /= nb
    for j in range(nb):
        ddx = q[j, 0] - cx
        ddy = q[j, 1] - cy
        s += ddx * ddx + ddy * ddy
    return sqrt(s / nb)


def propagate_otoc(double[:, :, ::1] q, double[:, :, ::1] p,
                   double[:, :, ::1] dq, double[:, :, ::1] dp,
                   int kind, double[::1] kp, double spring_k,
                   double dt, int n_steps, int record_every):
    cdef int n_traj = q.shape[0]
    cdef int nb = q.shape[1]
    cdef int n_rec = n_steps // record_every + 1
    cdef double g = kp[1], a = kp[2], d = kp[3], alpha = kp[4]
    cdef double kxq = kp[1], kyq = kp[2]
    cdef double inv_m = 1.0 / kp[0]
    stab_np = np.empty((n_traj, n_rec))
    energy_np = np.empty((n_traj, n_rec))
    rg_np = np.empty((n_traj, n_rec))
    cdef double[:, ::1] stab = stab_np
    cdef double[:, ::1] energy = energy_np
    cdef double[:, ::1] rg_max = rg_np
    cdef int i, step, k_rec, j
    cdef double run, val, s

    with nogil:
        for i in range(n_traj):
            s = 0.0
            for j in range(nb):
                s += dq[i, j, 0]
            stab[i, 0] = s / nb
            energy[i, 0] = _energy1(kind, g, a, d, alpha, kxq, kyq, spring_k,
                                    inv_m, nb, q[i], p[i])
            run = _rg1(nb, q[i])
            rg_max[i, 0] = run
            k_rec = 1
            for step in range(1, n_steps + 1):
                _step(kind, g, a, d, alpha, kxq, kyq, spring_k, nb,
                      q[i], p[i], dq[i], dp[i], dt, inv_m, True)
                val = _rg1(nb, q[i])
                if val > run:
                    run = val
                if step % record_every == 0:
                    s = 0.0
                    for j in range(nb):
                        s += dq[i, j, 0]
                    stab[i, k_rec] = s / nb
                    energy[i, k_rec] = _energy1(kind, g, a, d, alpha, kxq, kyq,
                                                spring_k, inv_m, nb, q[i], p[i])
                    rg_max[i, k_rec] = run
                    k_rec += 1
    return stab_np, energy_np, rg_np


def propagate_section(double[:, :, ::1] q, double[:, :, ::1] p,
                      int kind, double[::1] kp, double spring_k,
                      double dt, int n_steps, int max_cross):
    cdef int n_traj = q.shape[0]
    cdef int nb = q.shape[1]
    cdef double g = kp[1], a = kp[2], d = kp[3], alpha = kp[4]
    cdef double kxq = kp[1], kyq = kp[2]
    cdef double inv_m = 1.0 / kp[0]
    counts_np = np.zeros(n_traj, dtype=np.int64)
    data_np = np.zeros((n_traj, max_cross, 4))
    e0_np = np.empty(n_traj)
    e1_np = np.empty(n_traj)
    rg_np = np.empty(n_traj)
    cdef long long[::1] counts = counts_np
    cdef double[:, :, ::1] data = data_np
    cdef double[::1] e0 = e0_np
    cdef double[::1] e1 = e1_np
    cdef double[::1] rg_fin = rg_np
    cdef double[:, :, ::1] dq_dummy = np.zeros((1, nb, 2))
    cdef int i, step, j
    cdef long long c
    cdef double run, val, yb, vy, xb, px, yb_prev, vy_prev, xb_prev, px_prev
    cdef double y0, y1, m0, m1, th, h, hp, sN

    with nogil:
        for i in range(n_traj):
            e0[i] = _energy1(kind, g, a, d, alpha, kxq, kyq, spring_k,
                             inv_m, nb, q[i], p[i])
            run = _rg1(nb, q[i])
            yb_prev = 0.0
            vy_prev = 0.0
            xb_prev = 0.0
            px_prev = 0.0
            for j in range(nb):
                yb_prev += q[i, j, 1]
                vy_prev += p[i, j, 1]
                xb_prev += q[i, j, 0]
                px_prev += p[i, j, 0]
            yb_prev /= nb
            vy_prev = vy_prev * inv_m / nb
            xb_prev /= nb
            px_prev /= nb
            for step in range(1, n_steps + 1):
                _step(kind, g, a, d, alpha, kxq, kyq, spring_k, nb,
                      q[i], p[i], dq_dummy[0], dq_dummy[0], dt, inv_m, False)
                val = _rg1(nb, q[i])
                if val > run:
                    run = val
                yb = 0.0
                vy = 0.0
                xb = 0.0
                px = 0.0
                for j in range(nb):
                    yb += q[i, j, 1]
                    vy += p[i, j, 1]
                    xb += q[i, j, 0]
                    px += p[i, j, 0]
                yb /= nb
                vy = vy * inv_m / nb
                xb /= nb
                px /= nb
                if yb_prev < 0.0 and yb >= 0.0 and vy > 0.0:
                    c = counts[i]
                    if c < max_cross:
                        y0 = yb_prev
                        y1 = yb
                        m0 = vy_prev * dt
                        m1 = vy * dt
                        th = y0 / (y0 - y1)
                        h = ((2 * th * th * th - 3 * th * th + 1) * y0
                             + (th * th * th - 2 * th * th + th) * m0
                             + (-2 * th * th * th + 3 * th * th) * y1
                             + (th * th * th - th * th) * m1)
                        hp = ((6 * th * th - 6 * th) * y0
                              + (3 * th * th - 4 * th + 1) * m0
                              + (-6 * th * th + 6 * th) * y1
                              + (3 * th * th - 2 * th) * m1)
                        if fabs(hp) > 1e-300:
                            th = th - h / hp
                        if th < 0.0:
                            th = 0.0
                        elif th > 1.0:
                            th = 1.0
                        data[i, c, 0] = (step - 1) * dt + th * dt
                        data[i, c, 1] = xb_prev + th * (xb - xb_prev)
                        data[i, c, 2] = px_prev + th * (px - px_prev)
                        data[i, c, 3] = run
                        counts[i] = c + 1
                yb_prev = yb
                vy_prev = vy
                xb_prev = xb
                px_prev = px
            e1[i] = _energy1(kind, g, a, d, alpha, kxq, kyq, spring_k,
                             inv_m, nb, q[i], p[i])
            rg_fin[i] = run
    return counts_np, data_np, e0_np, e1_np, rg_np
