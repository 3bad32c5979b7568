"""Ring-polymer saddle search: collapsed branch exactness, index-1
instantons below the crossover, and the stability chain behind the
temperature bound on the instability frequency."""
import math

import numpy as np
import pytest

from chaosbound import ring_polymer as rp
from chaosbound.instanton import (InstantonError, bound_check,
                                  collapsed_saddle, default_instanton_beads,
                                  find_instanton, hessian_index,
                                  instanton_chain, mode1_amplitude,
                                  orthogonal_mode_sum)

# frozen reference values for the production surface (independent runs)
ETA_REF = {0.95: 1.748278, 0.90: 1.483191, 0.80: 0.789963}
SATURATION_099 = 0.982173


@pytest.fixture(scope="module")
def saddle_095(pot, tc):
    return find_instanton(pot, 0.95 * tc)


def test_collapsed_branch_is_exact(pot, tc):
    res = find_instanton(pot, 1.05 * tc, n_beads=32)
    assert res.collapsed
    assert np.all(res.geometry == 0.0)
    assert res.action_value == 32 * pot.params.barrier_height  # == 100.0
    assert res.eta == 2.0  # sqrt(-Vxx(0,0)/m) = omega_b, exact in floats
    assert res.eta_projected == pytest.approx(2.0, abs=1e-12)
    assert res.n_negative == 1  # only the centroid barrier mode
    assert res.bound == pytest.approx(2.1, abs=1e-12)
    rep = bound_check(res, pot)
    assert rep["satisfied"] and rep["satisfied_finite_n"]


def test_collapsed_saddle_shape():
    q = collapsed_saddle(None, 1.0, 6)
    assert q.shape == (6, 2) and np.all(q == 0.0)


def test_instanton_below_crossover(pot, tc, saddle_095):
    res = saddle_095
    assert not res.collapsed
    assert res.n_beads == 32
    assert res.grad_norm < 1e-9
    assert res.n_negative == 1
    # translation zero mode: inside the relative band, aligned with the
    # discrete imaginary-time translation direction
    assert res.zero_mode_residual <= res.meta["zero_band"]
    assert res.zero_overlap > 0.9
    # instability frequency two ways (explicit Vxx sum vs centroid row of
    # the full Hessian; springs cancel along the centroid)
    assert abs(res.eta - res.eta_projected) < 1e-10
    assert res.eta == pytest.approx(ETA_REF[0.95], abs=1e-4)
    assert res.bound == pytest.approx(1.9, abs=1e-12)
    assert res.eta <= res.bound
    # spread path, symmetric in x, cheaper than the collapsed stack
    assert abs(res.geometry[:, 0].mean()) < 1e-8
    assert 0.2 < np.abs(res.geometry[:, 0]).max() < 2.5
    assert res.action_value < res.n_beads * pot.params.barrier_height


def test_instanton_bound_report(pot, saddle_095):
    rep = bound_check(saddle_095, pot)
    assert rep["satisfied"] and rep["satisfied_finite_n"]
    assert rep["eta_over_bound"] < 1.0
    assert rep["orthogonal_mode_sum"] >= -1e-8
    assert orthogonal_mode_sum(pot, saddle_095) == pytest.approx(
        rep["orthogonal_mode_sum"])


def test_bound_check_rejects_doctored_result(pot, saddle_095):
    import copy
    fake = copy.deepcopy(saddle_095)
    fake.eta = fake.bound + 0.1
    with pytest.raises(InstantonError, match="exceeds"):
        bound_check(fake, pot)


def test_chain_descending_and_frozen_values(pot, tc):
    # deliberately unsorted input; chain must solve hottest-first
    chain = instanton_chain(pot, [0.80 * tc, 0.95 * tc, 0.90 * tc])
    temps = [r.temperature for r in chain]
    assert temps == sorted(temps, reverse=True)
    etas = [r.eta for r in chain]
    for res, frac in zip(chain, (0.95, 0.90, 0.80)):
        assert res.n_negative == 1
        assert res.grad_norm < 1e-9
        assert res.eta == pytest.approx(ETA_REF[frac], abs=1e-4)
        assert bound_check(res, pot)["satisfied"]
    # instability softens as the path spreads at lower temperature
    assert etas[0] > etas[1] > etas[2]


def test_saturation_near_crossover(pot, tc):
    res = find_instanton(pot, 0.99 * tc)
    assert res.eta / res.bound == pytest.approx(SATURATION_099, abs=1e-3)


def test_wrong_basin_raises_index_error(pot, tc):
    q_min, _ = pot.minimum()
    init = np.tile(q_min, (32, 1))
    with pytest.raises(InstantonError, match="index"):
        find_instanton(pot, 0.9 * tc, n_beads=32, init_strategy=init)


def test_mode1_amplitude_formula(pot, tc):
    assert mode1_amplitude(pot, tc) == 0.0
    assert mode1_amplitude(pot, 1.3 * tc) == 0.0
    # at 0.8 T_c: Omega = 1.6, A^2 = (m/3g)(w_b^2 - Omega^2) = 3
    assert mode1_amplitude(pot, 0.8 * tc) == pytest.approx(
        math.sqrt(3.0), abs=1e-12)


def test_bead_count_validation(pot, tc):
    with pytest.raises(ValueError, match="even"):
        find_instanton(pot, 0.9 * tc, n_beads=33)
    with pytest.raises(ValueError, match="even"):
        find_instanton(pot, 0.9 * tc, n_beads=2)
    with pytest.raises(ValueError, match="init strategy"):
        find_instanton(pot, 0.9 * tc, n_beads=32, init_strategy="sideways")


def test_default_instanton_beads(pot, tc):
    n_hot = default_instanton_beads(pot, 0.95 * tc)
    assert n_hot == 32  # floor kicks in near the crossover
    t_cold = 0.2 * tc
    n_cold = default_instanton_beads(pot, t_cold)
    assert n_cold % 2 == 0
    assert n_cold >= rp.default_n_beads(pot, t_cold) >= 32


def test_hessian_index_helper(saddle_095):
    n_neg, resid, lowest = hessian_index(saddle_095, k=4)
    assert n_neg == 1
    assert resid == saddle_095.zero_mode_residual
    assert lowest.shape == (4,)
    assert np.all(lowest == saddle_095.hessian_spectrum[:4])
    assert lowest[0] < 0 < lowest[2]
