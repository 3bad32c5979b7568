import numpy as np
import pytest

from chaosbound.potential import DoubleWell2D


@pytest.fixture(scope="session")
def pot():
    return DoubleWell2D()


@pytest.fixture(scope="session")
def tc(pot):
    return pot.params.t_crossover


def fd_grad(f, q, h=1e-6):
    """Central-difference gradient of a scalar field at q (shape (2,))."""
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    for i in range(q.size):
        ql, qh = q.copy(), q.copy()
        ql[i] -= h
        qh[i] += h
        out[i] = (f(qh) - f(ql)) / (2.0 * h)
    return out


def fd_jac(f, q, h=1e-6):
    """Central-difference Jacobian of a vector field at q."""
    q = np.asarray(q, dtype=float)
    f0 = np.asarray(f(q), dtype=float)
    out = np.empty(f0.shape + (q.size,))
    for i in range(q.size):
        ql, qh = q.copy(), q.copy()
        ql[i] -= h
        qh[i] += h
        out[..., i] = (np.asarray(f(qh)) - np.asarray(f(ql))) / (2.0 * h)
    return out
