"""Single-system reference integrator.

Fourth-order symplectic composition of velocity Verlet (Suzuki-Yoshida
triple jump), propagating phase point and tangent vector together.  The
ensemble kernels implement the same map; this version exists for unit
tests, convergence checks, and anything that wants one trajectory with
full history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kern_np import DRIFT_C, KICK_C


@dataclass
class PhasePoint:
    q: np.ndarray  # shape (2,)
    p: np.ndarray

    def copy(self) -> "PhasePoint":
        return PhasePoint(self.q.copy(), self.p.copy())


@dataclass
class TangentState:
    dq: np.ndarray
    dp: np.ndarray

    def copy(self) -> "TangentState":
        return TangentState(self.dq.copy(), self.dp.copy())


def step_symplectic4(pot, state: PhasePoint, tangent: TangentState | None,
                     dt: float) -> None:
    """Advance state (and tangent, if given) by one step, in place.

    Time-reversible: a step of -dt exactly undoes a step of +dt.
    """
    m = pot.mass
    q, p = state.q, state.p

    def kick(c):
        p[...] -= c * pot.grad(q)
        if tangent is not None:
            h = pot.hess(q)
            tangent.dp -= c * (h @ tangent.dq)

    kick(KICK_C[0] * dt)
    for i in range(3):
        q += (DRIFT_C[i] * dt / m) * p
        if tangent is not None:
            tangent.dq += (DRIFT_C[i] * dt / m) * tangent.dp
        kick(KICK_C[i + 1] * dt)


def run_trajectory(pot, q0, p0, dt: float, n_steps: int,
                   tangent0: tuple | None = None):
    """Integrate one trajectory, returning full (q, p) history and, when a
    tangent start (dq0, dp0) is given, the tangent history too."""
    state = PhasePoint(np.array(q0, dtype=float), np.array(p0, dtype=float))
    tangent = None
    if tangent0 is not None:
        tangent = TangentState(np.array(tangent0[0], dtype=float),
                               np.array(tangent0[1], dtype=float))
    qs = np.empty((n_steps + 1, 2))
    ps = np.empty((n_steps + 1, 2))
    qs[0], ps[0] = state.q, state.p
    dqs = dps = None
    if tangent is not None:
        dqs = np.empty((n_steps + 1, 2))
        dps = np.empty((n_steps + 1, 2))
        dqs[0], dps[0] = tangent.dq, tangent.dp
    for k in range(1, n_steps + 1):
        step_symplectic4(pot, state, tangent, dt)
        qs[k], ps[k] = state.q, state.p
        if tangent is not None:
            dqs[k], dps[k] = tangent.dq, tangent.dp
    if tangent is not None:
        return qs, ps, dqs, dps
    return qs, ps


def energy(pot, q, p) -> float:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return float((p * p).sum() / (2.0 * pot.mass) + pot.value(q))
