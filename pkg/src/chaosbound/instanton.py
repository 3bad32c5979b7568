"""Barrier instanton: index-1 saddles of the ring-polymer potential U_N.

Below the crossover temperature the collapsed barrier configuration (all
beads at the saddle of V) destabilizes and the stationary point of
interest becomes a closed bead path straddling the barrier.  Its Hessian
carries exactly one negative eigenvalue and one near-zero eigenvalue
(the discrete remnant of imaginary-time translation); every mode
orthogonal to the centroid must be non-negative, which yields the chain

    eta^2 <= omega_1(N)^2 <= (2 pi k_B T / hbar)^2,

with eta the centroid-projected instability frequency
eta^2 = -(1/mN) sum_i Vxx(q_i) and omega_1 the first ring-polymer
Matsubara frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ring_polymer as rp
from . import sampling


class InstantonError(RuntimeError):
    pass


@dataclass
class InstantonResult:
    geometry: np.ndarray        # (N, 2) bead positions
    temperature: float
    n_beads: int
    action_value: float         # U_N at the saddle; collapsed value is N V_b
    grad_norm: float
    hessian_spectrum: np.ndarray  # ascending eigenvalues of H/m
    n_negative: int
    zero_mode_residual: float   # |eigenvalue| of the translation mode
    zero_index: int             # its position in the spectrum
    zero_overlap: float         # |<mode, bead-permutation tangent>|
    eta: float                  # from the explicit -(1/mN) sum of Vxx
    eta_projected: float        # from the centroid row of the full Hessian
    collapsed: bool
    meta: dict = field(default_factory=dict)

    @property
    def bound(self) -> float:
        """2 pi k_B T / hbar in the potential's units."""
        return self.meta["bound"]


def _centroid_x_dir(n_beads):
    v = np.zeros(2 * n_beads)
    v[0::2] = 1.0 / math.sqrt(n_beads)
    return v


def _eta_pair(pot, q, hess_mw):
    """(explicit, projected) instability frequencies.  Negative curvature
    averages can round to slightly negative eta^2 at T >= crossover; both
    values are sqrt(max(., 0))."""
    n = q.shape[0]
    vxx = pot.hess(q)[:, 0, 0]
    e2_expl = -float(vxx.sum()) / (pot.mass * n)
    v = _centroid_x_dir(n)
    e2_proj = -float(v @ hess_mw @ v)
    return (math.sqrt(max(e2_expl, 0.0)), math.sqrt(max(e2_proj, 0.0)),
            e2_expl, e2_proj)


def _permutation_tangent(q):
    """Normalized discrete imaginary-time translation direction."""
    t = (np.roll(q, -1, axis=0) - np.roll(q, 1, axis=0)).ravel()
    n = np.linalg.norm(t)
    return t / n if n > 0 else t


def _newton_saddle(pot, q0, temperature, tol=1e-9, max_iter=200,
                   trust=0.3, lam_floor=1e-8):
    """Spectrally clipped Newton iteration to a stationary point of U_N.

    Eigenvalues with |lambda| below lam_floor * max|lambda| are clipped
    in magnitude so the near-zero translation mode cannot blow up the
    step; steps are capped at the trust radius.
    """
    q = q0.copy()
    nb = q.shape[0]
    for _ in range(max_iter):
        g = -rp.rp_force(pot, q, temperature).ravel()
        gn = float(np.abs(g).max())
        if gn < tol:
            return q
        h = rp.rp_hessian(pot, q, temperature)
        lam, vec = np.linalg.eigh(h)
        floor = lam_floor * float(np.abs(lam).max())
        lam_c = np.where(np.abs(lam) < floor,
                         np.where(lam < 0, -floor, floor), lam)
        step = -vec @ ((vec.T @ g) / lam_c)
        sn = float(np.linalg.norm(step))
        if sn > trust * math.sqrt(nb):
            step *= trust * math.sqrt(nb) / sn
        q += step.reshape(nb, 2)
    raise InstantonError(
        f"saddle search did not converge in {max_iter} iterations; "
        f"last gradient max-norm {gn:.3e}")


def _analyze(pot, q, temperature, grad_norm, collapsed,
             zero_band=1e-4) -> InstantonResult:
    nb = q.shape[0]
    p = pot.params
    h = rp.rp_hessian(pot, q, temperature) / pot.mass
    lam, vec = np.linalg.eigh(h)
    band = zero_band * float(np.abs(lam).max())
    n_neg = int(np.sum(lam < -band))
    in_band = np.flatnonzero(np.abs(lam) <= band)
    tang = _permutation_tangent(q)
    if in_band.size:
        overlaps = np.abs(vec[:, in_band].T @ tang)
        pick = in_band[int(np.argmax(overlaps))]
        zero_eig = float(lam[pick])
        zero_overlap = float(np.abs(vec[:, pick] @ tang))
        ambiguous = bool(in_band.size > 1)
    else:
        pick = int(np.argmin(np.abs(lam)))
        zero_eig = float(lam[pick])
        zero_overlap = float(np.abs(vec[:, pick] @ tang)) \
            if np.linalg.norm(tang) > 0 else 0.0
        ambiguous = False
    eta, eta_p, e2, e2p = _eta_pair(pot, q, h)
    bound = 2.0 * math.pi * p.kb * temperature / p.hbar
    omega1 = float(sampling.nm_frequencies(
        nb, 1.0 / (p.kb * temperature * nb), p.hbar)[1]) if nb > 1 else bound
    meta = {"bound": bound, "omega1_finite_n": omega1,
            "zero_band": band, "ambiguous_zero_band": ambiguous,
            "eta_sq_explicit": e2, "eta_sq_projected": e2p,
            "spring_k": rp.spring_constant(pot, temperature, nb)}
    meta["zero_eig_signed"] = zero_eig
    return InstantonResult(
        geometry=q, temperature=float(temperature), n_beads=nb,
        action_value=float(rp.u_n(pot, q, temperature)), grad_norm=grad_norm,
        hessian_spectrum=lam, n_negative=n_neg,
        zero_mode_residual=abs(zero_eig), zero_index=int(pick),
        zero_overlap=zero_overlap, eta=eta, eta_projected=eta_p,
        collapsed=collapsed, meta=meta)


def collapsed_saddle(pot, temperature, n_beads) -> np.ndarray:
    """All beads at the barrier stationary point of V."""
    return np.zeros((n_beads, 2))


def mode1_amplitude(pot, temperature):
    """Normal-form estimate of the instanton x-amplitude: treating
    V(x, 0) as the exact quartic V_b - (m w_b^2/2) x^2 + g x^4, the first
    Matsubara mode bifurcates with A^2 = (m/3g)(w_b^2 - Omega^2),
    Omega = 2 pi k_B T / hbar.  Returns 0 at or above the crossover."""
    p = pot.params
    omega = 2.0 * math.pi * p.kb * temperature / p.hbar
    a2 = (p.m / (3.0 * p.g)) * (p.omega_b**2 - omega**2)
    return math.sqrt(max(a2, 0.0))


def default_instanton_beads(pot, temperature) -> int:
    """Same growth rule as the dynamics default, but never below 32."""
    n = max(32, rp.default_n_beads(pot, temperature))
    return n + (n % 2)


def _displaced_init(pot, temperature, n_beads, delta=0.1):
    q = collapsed_saddle(pot, temperature, n_beads)
    amp = max(mode1_amplitude(pot, temperature), delta)
    i = np.arange(n_beads)
    q[:, 0] = amp * np.cos(2.0 * np.pi * i / n_beads)
    return q


def find_instanton(pot, temperature, n_beads=None, tol=1e-9, max_iter=200,
                   trust=0.3, zero_band=1e-4, init_strategy="continuation",
                   n_continuation=8) -> InstantonResult:
    """Index-1 saddle of U_N at the given temperature.

    For T >= the crossover the collapsed configuration is returned with
    `collapsed=True` (eta = w_b by the barrier Hessian).  Below it, the
    default strategy walks temperature down from just below the
    crossover, displacing the collapsed saddle along the first Matsubara
    mode and reusing each converged geometry as the next start.
    `init_strategy` may also be "direct" (single solve from the
    normal-form amplitude) or an explicit (N, 2) array.
    """
    p = pot.params
    tc = p.t_crossover
    nb = n_beads or default_instanton_beads(pot, temperature)
    if nb % 2 or nb < 4:
        raise ValueError("n_beads must be even and at least 4")
    if temperature >= tc:
        q = collapsed_saddle(pot, temperature, nb)
        return _analyze(pot, q, temperature, 0.0, True, zero_band)

    if isinstance(init_strategy, np.ndarray):
        q = _newton_saddle(pot, init_strategy.copy(), temperature, tol,
                           max_iter, trust)
    elif init_strategy == "direct":
        q = _newton_saddle(pot, _displaced_init(pot, temperature, nb),
                           temperature, tol, max_iter, trust)
    elif init_strategy == "continuation":
        t_hi = min(0.995 * tc, 0.5 * (tc + temperature))
        ladder = np.linspace(t_hi, temperature, n_continuation)
        q = _displaced_init(pot, ladder[0], nb)
        for t_step in ladder:
            q = _newton_saddle(pot, q, t_step, tol, max_iter, trust)
    else:
        raise ValueError(f"unknown init strategy {init_strategy!r}")

    gn = float(np.abs(rp.rp_force(pot, q, temperature)).max())
    res = _analyze(pot, q, temperature, gn, False, zero_band)
    if res.n_negative != 1:
        raise InstantonError(
            f"converged to a stationary point of index {res.n_negative}, "
            f"not an index-1 saddle (T={temperature}, N={nb})")
    return res


def instanton_chain(pot, temperatures, n_beads=None, **kwargs):
    """Instantons at a descending temperature list, each seeded from the
    previous geometry."""
    temps = sorted(temperatures, reverse=True)
    strategy = kwargs.pop("init_strategy", "continuation")
    out = []
    geom = None
    for t in temps:
        init = geom if geom is not None else strategy
        try:
            res = find_instanton(pot, t, n_beads=n_beads,
                                 init_strategy=init, **kwargs)
        except InstantonError:
            if geom is None:
                raise
            # warm start jumped basins (large temperature step); redo
            # this point from the homotopy ladder
            res = find_instanton(pot, t, n_beads=n_beads,
                                 init_strategy=strategy, **kwargs)
        geom = res.geometry
        out.append(res)
    return out


def hessian_index(result: InstantonResult, k=6):
    """(n_negative, zero_mode_residual, lowest k eigenvalues)."""
    return (result.n_negative, result.zero_mode_residual,
            result.hessian_spectrum[:k].copy())


def orthogonal_mode_sum(pot, result: InstantonResult):
    """Curvature of U_N along the two first-Matsubara x-directions,
    summed: 2 m w_1^2 - 2 m eta^2 analytically, must be >= 0 for any
    index-1 saddle (the route to the temperature bound on eta)."""
    nb = result.n_beads
    h = rp.rp_hessian(pot, result.geometry, result.temperature)
    i = np.arange(nb)
    vc = np.zeros(2 * nb)
    vs = np.zeros(2 * nb)
    vc[0::2] = math.sqrt(2.0 / nb) * np.cos(2.0 * np.pi * i / nb)
    vs[0::2] = math.sqrt(2.0 / nb) * np.sin(2.0 * np.pi * i / nb)
    return float(vc @ h @ vc + vs @ h @ vs)


def bound_check(result: InstantonResult, pot, tol=1e-9, mode_sum_tol=1e-8):
    """Bound report for one saddle: eta against both the finite-N first
    Matsubara frequency and the temperature bound 2 pi k_B T / hbar.

    A violation is a hard failure: a converged index-1 saddle with
    eta above the bound (or negative curvature sum along the first
    Matsubara pair) contradicts the ring-polymer stability argument,
    so it can only mean a broken Hessian or a false convergence.
    """
    bound = result.bound
    omega1 = result.meta["omega1_finite_n"]
    osum = orthogonal_mode_sum(pot, result)
    report = {
        "temperature": result.temperature,
        "eta": result.eta,
        "omega1_finite_n": omega1,
        "bound": bound,
        "eta_over_bound": result.eta / bound,
        "orthogonal_mode_sum": osum,
        "satisfied": bool(result.eta <= bound + tol),
        "satisfied_finite_n": bool(result.eta <= omega1 + tol),
    }
    if not result.collapsed:
        if osum < -mode_sum_tol:
            raise InstantonError(
                f"first-Matsubara curvature sum {osum:.3e} < 0 at "
                f"T={result.temperature}: saddle or Hessian is wrong")
        if not report["satisfied"]:
            raise InstantonError(
                f"eta={result.eta:.6f} exceeds 2 pi k_B T / hbar="
                f"{bound:.6f} at T={result.temperature}")
    return report
