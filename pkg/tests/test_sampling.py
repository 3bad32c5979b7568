"""Samplers: stream reproducibility, target distributions, shell placement."""
import math

import numpy as np
import pytest

from chaosbound.potential import Free2D, Quadratic2D
from chaosbound.sampling import (SamplerError, gaussian_momenta,
                                 metropolis_positions, nm_frequencies,
                                 nm_matrix, pile_positions,
                                 rp_microcanonical, traj_rngs,
                                 uniform_shell_classical)


def test_traj_rngs_reproducible_and_independent():
    a = traj_rngs(42, 3)
    b = traj_rngs(42, 3)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.random(5), rb.random(5))
    c = traj_rngs(42, 3)
    draws = [r.random(4) for r in c]
    assert not np.allclose(draws[0], draws[1])
    # offset relabels the streams: stream i+off == stream (i, offset=off)
    d = traj_rngs(42, 2, offset=1)
    e = traj_rngs(42, 3)
    assert np.array_equal(d[0].random(6), e[1].random(6))


def test_metropolis_matches_boltzmann_average(pot, tc):
    """Sampled <V> against a dense quadrature of the 2D Boltzmann weight."""
    temp = 2.0 * tc
    beta = 1.0 / temp
    x = np.linspace(-7.0, 7.0, 561)
    y = np.linspace(-2.5, 10.0, 501)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    v = pot.value(np.stack([xx, yy], axis=-1))
    w = np.exp(-beta * v)
    v_exact = float((v * w).sum() / w.sum())

    n = 600
    q = metropolis_positions(pot, beta, traj_rngs(11, n))
    v_s = pot.value(q)
    se = v_s.std(ddof=1) / math.sqrt(n)
    assert abs(v_s.mean() - v_exact) < 4.0 * se + 1e-3


def test_metropolis_reproducible(pot, tc):
    q1 = metropolis_positions(pot, 1.0 / tc, traj_rngs(3, 40))
    q2 = metropolis_positions(pot, 1.0 / tc, traj_rngs(3, 40))
    assert np.array_equal(q1, q2)


def test_metropolis_rejects_flat_surface():
    """A free particle accepts every proposal; the tuner must notice."""
    with pytest.raises(SamplerError):
        metropolis_positions(Free2D(), 1.0, traj_rngs(0, 8), burn_in=2000,
                             gap=50)


def test_gaussian_momenta_moments():
    sigma = 1.7
    p = gaussian_momenta(traj_rngs(5, 500), 4, sigma)
    assert p.shape == (500, 4, 2)
    flat = p.ravel()
    se = sigma**2 * math.sqrt(2.0 / (flat.size - 1))
    assert abs(flat.var(ddof=1) - sigma**2) < 4.0 * se
    assert abs(flat.mean()) < 4.0 * sigma / math.sqrt(flat.size)


def test_uniform_shell_exactly_on_energy(pot):
    e = 1.5 * pot.params.barrier_height
    q, p = uniform_shell_classical(pot, e, traj_rngs(9, 200))
    v = pot.value(q[:, 0, :])
    h = (p[:, 0, :] ** 2).sum(axis=-1) / (2.0 * pot.mass) + v
    assert np.abs(h - e).max() < 1e-10
    assert v.max() <= e
    assert np.abs(q[:, 0, 0]).max() <= 6.0


def test_uniform_shell_unreachable_energy(pot):
    with pytest.raises(SamplerError):
        uniform_shell_classical(pot, -0.3, traj_rngs(0, 2), max_tries=200)


def test_nm_frequencies_closed_form():
    beta_n = 0.7
    n = 6
    w = nm_frequencies(n, beta_n)
    expect = (2.0 / beta_n) * np.sin(np.arange(n) * np.pi / n)
    assert np.abs(w - expect).max() < 1e-14
    assert w[0] == 0.0


@pytest.mark.parametrize("n", [2, 3, 4, 7, 8, 16])
def test_nm_matrix_orthonormal_and_diagonalizing(n):
    c = nm_matrix(n)
    assert np.abs(c @ c.T - np.eye(n)).max() < 1e-12
    assert np.abs(c[0] - 1.0 / math.sqrt(n)).max() < 1e-15
    # rows diagonalize the cyclic spring Laplacian with 4 sin^2(nu pi / N)
    lap = 2.0 * np.eye(n) - np.roll(np.eye(n), 1, 0) - np.roll(np.eye(n), -1, 0)
    d = c @ lap @ c.T
    nu = np.minimum(np.arange(n), n - np.arange(n))
    expect = 4.0 * np.sin(nu * np.pi / n) ** 2
    assert np.abs(d - np.diag(expect)).max() < 1e-12


def test_pile_positions_harmonic_marginals():
    """On a quadratic surface the polymer is Gaussian with bead variance
    (1/beta m) sum_k 1/(w_k^2 + w0^2) per Cartesian direction."""
    m, kx = 0.8, 1.9
    ho = Quadratic2D(m=m, kx=kx, ky=kx)
    beta, nb, n = 2.0, 8, 800
    q = pile_positions(ho, beta, nb, traj_rngs(21, n))
    assert q.shape == (n, nb, 2)
    from chaosbound.sampling import _nm_freq_by_row
    w = _nm_freq_by_row(nb, beta / nb)
    var_exact = (1.0 / (beta * m)) * np.sum(1.0 / (w**2 + kx / m))
    var_s = q[:, 0, 0].var(ddof=1)
    # ~800 independent chains: 4 sigma on a variance estimate is ~20%
    assert abs(var_s / var_exact - 1.0) < 0.2
    assert abs(q[:, 0, 0].mean()) < 4.0 * math.sqrt(var_exact / n)


def test_pile_positions_reproducible(pot, tc):
    beta = 1.0 / tc
    a = pile_positions(pot, beta, 8, traj_rngs(2, 24), t_burn=4.0)
    b = pile_positions(pot, beta, 8, traj_rngs(2, 24), t_burn=4.0)
    assert np.array_equal(a, b)


def test_rp_microcanonical_on_shell(pot, tc):
    from chaosbound.ring_polymer import spring_constant
    from chaosbound.sampling import rp_potential_energy
    nb = 16
    e_tot = nb * pot.params.barrier_height
    q, p = rp_microcanonical(pot, nb, e_tot, traj_rngs(4, 100))
    k = spring_constant(pot, tc, nb)
    # beads start collapsed, so the spring term is zero regardless of k
    u = rp_potential_energy(pot, q, k)
    ke = (p * p).sum(axis=(1, 2)) / (2.0 * pot.mass)
    assert np.abs((u + ke) - e_tot).max() / e_tot < 1e-12
    assert np.abs(q - q[:, :1, :]).max() == 0.0  # collapsed
    assert pot.value(q[:, 0, :]).max() <= e_tot / nb


def test_rp_microcanonical_headroom_failure(pot):
    with pytest.raises(SamplerError):
        rp_microcanonical(pot, 4, 4 * (-0.3), traj_rngs(0, 2),
                          max_retries=500)
