"""Potential energy surfaces.

The production surface is a 2D double well: a quartic double well in x
bonded to a Morse oscillator in y through an exponential coupling,

    V(x, y) = g (x^2 - a)^2 + D (1 - e^{-alpha y})^2
              - g x^2 (x^2 - 2a) (1 - e^{-alpha y}),    a = m w_b^2 / (4 g).

V(0, 0) = V_b = m^2 w_b^4 / 16 g is an index-1 saddle separating the two
wells.  The x-gradient vanishes on the whole lines x = 0 and x = +-sqrt(a);
the coupling tilts the wells so the true minima sit at
(+-sqrt(a), -ln(1 + V_b/2D)/alpha) with depth -V_b^2/4D, while
V(+-sqrt(a), 0) = 0 exactly.

Simple surfaces (harmonic/saddle, free) are registered under the same
value/grad/hess interface for tests and oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# kernel dispatch ids, shared with _core.pyx and _kern_np.py
KIND_DOUBLE_WELL = 0
KIND_QUADRATIC = 1
KIND_FREE = 2


@dataclass(frozen=True)
class PotentialParams:
    """Parameters of the double-well surface, natural units hbar = k_B = 1."""

    m: float = 0.5
    g: float = 0.08
    omega_b: float = 2.0
    alpha: float = 0.382
    d: float | None = None  # Morse depth; defaults to 3 V_b
    hbar: float = 1.0
    kb: float = 1.0

    @property
    def barrier_height(self) -> float:
        return self.m**2 * self.omega_b**4 / (16.0 * self.g)

    @property
    def morse_d(self) -> float:
        return 3.0 * self.barrier_height if self.d is None else self.d

    @property
    def a_well(self) -> float:
        """x^2 at which the bare quartic part has its minima."""
        return self.m * self.omega_b**2 / (4.0 * self.g)

    @property
    def t_crossover(self) -> float:
        """Parabolic crossover temperature hbar w_b / (2 pi k_B)."""
        return self.hbar * self.omega_b / (2.0 * math.pi * self.kb)


class DoubleWell2D:
    """The production surface.  Positions are arrays of shape (..., 2)."""

    kind = KIND_DOUBLE_WELL

    def __init__(self, params: PotentialParams | None = None):
        self.params = params or PotentialParams()

    @property
    def mass(self) -> float:
        return self.params.m

    def kernel_params(self) -> np.ndarray:
        p = self.params
        return np.array([p.m, p.g, p.a_well, p.morse_d, p.alpha, 0.0], dtype=float)

    def value(self, q):
        p = self.params
        q = np.asarray(q, dtype=float)
        x, y = q[..., 0], q[..., 1]
        u = np.exp(-p.alpha * y)
        w = 1.0 - u
        x2 = x * x
        return (
            p.g * (x2 - p.a_well) ** 2
            + p.morse_d * w * w
            - p.g * x2 * (x2 - 2.0 * p.a_well) * w
        )

    def grad(self, q):
        p = self.params
        q = np.asarray(q, dtype=float)
        x, y = q[..., 0], q[..., 1]
        u = np.exp(-p.alpha * y)
        w = 1.0 - u
        x2 = x * x
        out = np.empty_like(q)
        out[..., 0] = 4.0 * p.g * x * (x2 - p.a_well) * u
        out[..., 1] = p.alpha * u * (
            2.0 * p.morse_d * w - p.g * x2 * (x2 - 2.0 * p.a_well)
        )
        return out

    def hess(self, q):
        """Hessian, shape (..., 2, 2)."""
        p = self.params
        q = np.asarray(q, dtype=float)
        x, y = q[..., 0], q[..., 1]
        u = np.exp(-p.alpha * y)
        x2 = x * x
        out = np.empty(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = 4.0 * p.g * (3.0 * x2 - p.a_well) * u
        out[..., 0, 1] = -4.0 * p.alpha * p.g * x * (x2 - p.a_well) * u
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 1, 1] = p.alpha**2 * u * (
            2.0 * p.morse_d * (2.0 * u - 1.0) + p.g * x2 * (x2 - 2.0 * p.a_well)
        )
        return out

    def minimum(self) -> tuple[np.ndarray, float]:
        """Closed-form global minimum (the x>0 one) and its energy."""
        p = self.params
        vb, d = p.barrier_height, p.morse_d
        y_star = -math.log(1.0 + vb / (2.0 * d)) / p.alpha
        return np.array([math.sqrt(p.a_well), y_star]), -vb * vb / (4.0 * d)


class Quadratic2D:
    """V = kx x^2 / 2 + ky y^2 / 2.  Negative kx gives a saddle."""

    kind = KIND_QUADRATIC

    def __init__(self, m: float = 1.0, kx: float = 1.0, ky: float = 1.0,
                 hbar: float = 1.0, kb: float = 1.0):
        self.params = PotentialParams(m=m, hbar=hbar, kb=kb)
        self.kx = kx
        self.ky = ky

    @property
    def mass(self) -> float:
        return self.params.m

    def kernel_params(self) -> np.ndarray:
        return np.array([self.mass, self.kx, self.ky, 0.0, 0.0, 0.0])

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return 0.5 * self.kx * q[..., 0] ** 2 + 0.5 * self.ky * q[..., 1] ** 2

    def grad(self, q):
        q = np.asarray(q, dtype=float)
        out = np.empty_like(q)
        out[..., 0] = self.kx * q[..., 0]
        out[..., 1] = self.ky * q[..., 1]
        return out

    def hess(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = self.kx
        out[..., 1, 1] = self.ky
        return out

    def minimum(self) -> tuple[np.ndarray, float]:
        return np.zeros(2), 0.0


class Free2D:
    kind = KIND_FREE

    def __init__(self, m: float = 1.0, hbar: float = 1.0, kb: float = 1.0):
        self.params = PotentialParams(m=m, hbar=hbar, kb=kb)

    @property
    def mass(self) -> float:
        return self.params.m

    def kernel_params(self) -> np.ndarray:
        return np.array([self.mass, 0.0, 0.0, 0.0, 0.0, 0.0])

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape[:-1])

    def grad(self, q):
        return np.zeros_like(np.asarray(q, dtype=float))

    def hess(self, q):
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape[:-1] + (2, 2))

    def minimum(self) -> tuple[np.ndarray, float]:
        return np.zeros(2), 0.0


REGISTRY = {
    "double_well": DoubleWell2D,
    "quadratic": Quadratic2D,
    "free": Free2D,
}
