"""Initial-condition samplers.

Every trajectory owns a counter-based RNG stream keyed by
(master seed, trajectory index), so ensembles are reproducible and
independent of how work is distributed.  Samplers consume each stream in
a fixed documented order.

Position sampling is Metropolis for classical ensembles (one independent
chain per trajectory, scale adapted during the first half of burn-in and
frozen after) and thermostatted normal-mode Langevin dynamics for ring
polymers.  Momenta are always drawn exactly Gaussian afterwards.
"""

from __future__ import annotations

import math

import numpy as np

# fixed internal batch sizes; results must not depend on work partitioning,
# so these are constants rather than configuration
_MET_BLOCK = 512
_PILE_BLOCK = 64

_MASK64 = (1 << 64) - 1


class SamplerError(RuntimeError):
    pass


def traj_rngs(seed: int, n: int, offset: int = 0):
    """Per-trajectory Philox streams keyed (seed, trajectory index)."""
    return [
        np.random.Generator(np.random.Philox(
            key=np.array([seed & _MASK64, (offset + i) & _MASK64],
                         dtype=np.uint64)))
        for i in range(n)
    ]


# ---------------------------------------------------------------- classical

def metropolis_positions(pot, beta, rngs, burn_in=10000, gap=100,
                         scale0=0.5, band=(0.3, 0.5), target=0.4):
    """Boltzmann position samples, one independent chain per stream.

    Stream order per trajectory: (burn_in + gap) proposal pairs, then
    (burn_in + gap) acceptance uniforms.  Returns (n, 2) positions.

    Raises SamplerError if the tuned ensemble acceptance leaves `band`
    or any single chain freezes.
    """
    n = len(rngs)
    n_steps = burn_in + gap
    adapt_until = burn_in // 2
    q_min, _ = pot.minimum()
    out = np.empty((n, 2))
    acc_all = np.empty(n)

    for lo in range(0, n, _MET_BLOCK):
        hi = min(lo + _MET_BLOCK, n)
        b = hi - lo
        steps = np.empty((b, n_steps, 2))
        logu = np.empty((b, n_steps))
        for i in range(b):
            rng = rngs[lo + i]
            steps[i] = rng.standard_normal((n_steps, 2))
            logu[i] = np.log(np.maximum(rng.random(n_steps), 1e-300))

        q = np.empty((b, 2))
        q[:, 0] = np.where((np.arange(lo, hi) % 2) == 0, q_min[0], -q_min[0])
        q[:, 1] = q_min[1]
        v = pot.value(q)
        scale = np.full(b, scale0)
        acc_win = np.zeros(b)
        acc_frozen = np.zeros(b)
        n_frozen = 0

        for s in range(n_steps):
            prop = q + scale[:, None] * steps[:, s]
            vp = pot.value(prop)
            accept = logu[:, s] < -beta * (vp - v)
            q[accept] = prop[accept]
            v[accept] = vp[accept]
            if s < adapt_until:
                acc_win += accept
                if (s + 1) % 100 == 0:
                    scale *= np.exp(0.3 * (acc_win / 100.0 - target))
                    np.clip(scale, 1e-3, 10.0, out=scale)
                    acc_win[:] = 0.0
            else:
                acc_frozen += accept
                n_frozen += 1

        out[lo:hi] = q
        acc_all[lo:hi] = acc_frozen / n_frozen

    mean_acc = float(acc_all.mean())
    if not (band[0] <= mean_acc <= band[1]):
        raise SamplerError(
            f"metropolis acceptance {mean_acc:.3f} outside band {band}")
    stuck = int((acc_all < 0.02).sum())
    if stuck:
        raise SamplerError(f"{stuck} chains frozen (acceptance < 2%)")
    return out


def gaussian_momenta(rngs, n_beads, sigma):
    """Exact Maxwell-Boltzmann momenta, (n, n_beads, 2)."""
    n = len(rngs)
    out = np.empty((n, n_beads, 2))
    for i, rng in enumerate(rngs):
        out[i] = sigma * rng.standard_normal((n_beads, 2))
    return out


def uniform_shell_classical(pot, energy, rngs, box=(-6.0, 6.0, -2.0, 8.0),
                            max_tries=10000):
    """Microcanonical H = E samples: positions uniform on {V <= E} inside
    `box`, momentum direction uniform, magnitude fixed by the energy gap.

    Stream order: (2 uniforms per position attempt)*, then 1 uniform for
    the momentum angle.  Returns (q (n,1,2), p (n,1,2)).
    """
    n = len(rngs)
    x0, x1, y0, y1 = box
    q = np.empty((n, 1, 2))
    p = np.empty((n, 1, 2))
    m = pot.mass
    for i, rng in enumerate(rngs):
        for _ in range(max_tries):
            cand = np.array([x0 + (x1 - x0) * rng.random(),
                             y0 + (y1 - y0) * rng.random()])
            v = float(pot.value(cand))
            if v <= energy:
                break
        else:
            raise SamplerError(f"no V <= E point found in box for E={energy}")
        phi = 2.0 * math.pi * rng.random()
        pmag = math.sqrt(2.0 * m * (energy - v))
        q[i, 0] = cand
        p[i, 0] = (pmag * math.cos(phi), pmag * math.sin(phi))
    return q, p


# ------------------------------------------------------------- ring polymer

def nm_frequencies(n_beads, beta_n, hbar=1.0):
    """Free ring-polymer normal-mode frequencies w_k = (2/beta_N hbar)
    sin(k pi / N), k = 0..N-1."""
    k = np.arange(n_beads)
    return (2.0 / (beta_n * hbar)) * np.sin(k * np.pi / n_beads)


def nm_matrix(n_beads):
    """Orthonormal real Fourier transform C, rows = modes.  Row 0 is the
    centroid; row k carries frequency w_{nu}, nu = min(k, N-k)."""
    n = n_beads
    j = np.arange(n)
    c = np.empty((n, n))
    c[0] = 1.0 / math.sqrt(n)
    for k in range(1, n):
        nu = min(k, n - k)
        if 2 * nu == n:
            c[k] = np.where(j % 2 == 0, 1.0, -1.0) / math.sqrt(n)
        elif k <= n // 2:
            c[k] = math.sqrt(2.0 / n) * np.cos(2.0 * np.pi * nu * j / n)
        else:
            c[k] = math.sqrt(2.0 / n) * np.sin(2.0 * np.pi * nu * j / n)
    return c


def _nm_freq_by_row(n_beads, beta_n, hbar=1.0):
    nu = np.minimum(np.arange(n_beads), n_beads - np.arange(n_beads))
    return (2.0 / (beta_n * hbar)) * np.sin(nu * np.pi / n_beads)


class _PileStepper:
    """One Langevin step: half surface kick, exact free-polymer evolution
    with Ornstein-Uhlenbeck halves in normal modes, half surface kick."""

    def __init__(self, pot, beta, n_beads, dt, gamma0=None, hbar=1.0):
        self.pot = pot
        self.m = pot.mass
        self.dt = dt
        self.nb = n_beads
        beta_n = beta / n_beads
        if gamma0 is None:
            gamma0 = 0.1 / (beta_n * hbar)
        self.cmat = nm_matrix(n_beads)
        w = _nm_freq_by_row(n_beads, beta_n, hbar)
        gamma = 2.0 * w
        gamma[0] = gamma0
        self.f1 = np.exp(-0.5 * dt * gamma)[:, None]
        self.f2 = np.sqrt((1.0 - self.f1[:, 0] ** 2) * self.m / beta_n)[:, None]
        self.cos_wt = np.cos(w * dt)[:, None]
        sw = np.zeros_like(w)
        np.divide(np.sin(w * dt), w, where=w > 0, out=sw)
        self.sin_w = sw[:, None]  # sin(w dt)/w, centroid row handled apart
        self.msin = (self.m * w * np.sin(w * dt))[:, None]
        self.sig_p = math.sqrt(self.m / beta_n)

    def run(self, q, p, noise):
        """Advance (q, p) through noise.shape[1] steps; noise has shape
        (b, n_steps, 2, N, 2) with independent normals per OU half."""
        for s in range(noise.shape[1]):
            p = p - (0.5 * self.dt) * self.pot.grad(q)
            qn = np.einsum("kj,bjc->bkc", self.cmat, q)
            pn = np.einsum("kj,bjc->bkc", self.cmat, p)
            pn = self.f1 * pn + self.f2 * noise[:, s, 0]
            qn_new = self.cos_wt * qn + self.sin_w * pn / self.m
            qn_new[:, 0] = qn[:, 0] + (self.dt / self.m) * pn[:, 0]
            pn = -self.msin * qn + self.cos_wt * pn
            qn = qn_new
            pn = self.f1 * pn + self.f2 * noise[:, s, 1]
            q = np.einsum("kj,bkc->bjc", self.cmat, qn)
            p = np.einsum("kj,bkc->bjc", self.cmat, pn)
            p = p - (0.5 * self.dt) * self.pot.grad(q)
        return q, p


def pile_positions(pot, beta, n_beads, rngs, t_burn=40.0, dt=0.04,
                   gamma0=None, hbar=1.0):
    """Ring-polymer position sampler targeting exp(-beta_N U_N).

    Chains start collapsed at a well (sign alternating with trajectory
    parity) with internal modes drawn from the free-polymer Gaussian.
    Stream order per trajectory: N*2 internal-mode normals, N*2 thermostat
    momentum normals, then n_steps*2*N*2 noise normals (two independent
    blocks per step, one per thermostat half).

    Returns (n, N, 2) bead positions.
    """
    n = len(rngs)
    nb = n_beads
    beta_n = beta / nb
    m = pot.mass
    n_steps = max(1, int(round(t_burn / dt)))
    stepper = _PileStepper(pot, beta, nb, dt, gamma0, hbar)
    cmat = stepper.cmat
    w = _nm_freq_by_row(nb, beta_n, hbar)
    sig_q = np.zeros(nb)
    np.divide(1.0, np.sqrt(beta_n * m) * w, where=w > 0, out=sig_q)
    q_min, _ = pot.minimum()
    out = np.empty((n, nb, 2))

    for lo in range(0, n, _PILE_BLOCK):
        hi = min(lo + _PILE_BLOCK, n)
        b = hi - lo
        qn = np.zeros((b, nb, 2))
        pn = np.empty((b, nb, 2))
        noise = np.empty((b, n_steps, 2, nb, 2))
        sign = np.where((np.arange(lo, hi) % 2) == 0, 1.0, -1.0)
        qn[:, 0, 0] = sign * q_min[0] * math.sqrt(nb)
        qn[:, 0, 1] = q_min[1] * math.sqrt(nb)
        for i in range(b):
            rng = rngs[lo + i]
            qn[i, 1:] += sig_q[1:, None] * rng.standard_normal((nb - 1, 2))
            pn[i] = stepper.sig_p * rng.standard_normal((nb, 2))
            noise[i] = rng.standard_normal((n_steps, 2, nb, 2))
        q = np.einsum("kj,bkc->bjc", cmat, qn)
        p = np.einsum("kj,bkc->bjc", cmat, pn)
        q, p = stepper.run(q, p, noise)
        if not np.isfinite(q).all():
            raise SamplerError(
                f"thermostatted dynamics diverged; dt={dt}, N={nb}")
        out[lo:hi] = q
    return out


def rp_spring_energy(q, spring_k):
    d = q - np.roll(q, 1, axis=-2)
    return 0.5 * spring_k * (d * d).sum(axis=(-1, -2))


def rp_potential_energy(pot, q, spring_k):
    """U_N: bead potential sum plus spring term."""
    return pot.value(q).sum(axis=-1) + rp_spring_energy(q, spring_k)


def rp_microcanonical(pot, n_beads, energy, rngs,
                      box=(-6.0, 6.0, -2.0, 8.0), max_retries=100000):
    """Samples on the H_N = `energy` shell.

    Bead configurations start collapsed on a centroid drawn uniformly
    over the box region with kinetic headroom (V <= energy / N, the
    only reachable entry region: an equilibrium polymer's spring energy
    alone exceeds N V_b for any N > 1).  Momenta are drawn Gaussian and
    rescaled by one common factor onto the shell, so the momentum
    direction is uniform on the sphere.  Returns (q (n,N,2), p (n,N,2)).
    """
    n = len(rngs)
    e_bead = energy / n_beads
    x0, x1, y0, y1 = box
    q = np.empty((n, n_beads, 2))
    for i, rng in enumerate(rngs):
        for _ in range(max_retries):
            xy = rng.random(2)
            xy[0] = x0 + (x1 - x0) * xy[0]
            xy[1] = y0 + (y1 - y0) * xy[1]
            if pot.value(xy[None, :])[0] <= e_bead:
                break
        else:
            raise SamplerError(
                f"no headroom point with V <= {e_bead} found in box")
        q[i] = xy
    m = pot.mass
    u = n_beads * pot.value(q[:, 0, :])     # collapsed: U_N = N V(centroid)
    p = np.empty((n, n_beads, 2))
    for i, rng in enumerate(rngs):
        p[i] = rng.standard_normal((n_beads, 2))
    ke = (p * p).sum(axis=(1, 2)) / (2.0 * m)
    p *= np.sqrt((energy - u) / ke)[:, None, None]
    return q, p
