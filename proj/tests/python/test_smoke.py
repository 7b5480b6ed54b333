import math

import pytest

import martquant as mq


def test_uniform_primal_grid():
    r = mq.optimal_primal_1d(mq.fixtures.uniform01(), 5)
    assert r.quantizer.points == pytest.approx([0.1, 0.3, 0.5, 0.7, 0.9], abs=1e-12)
    assert r.distortion_p == pytest.approx(1 / (12 * 25), rel=1e-12)


def test_tri2x_dual_grid_and_distortion():
    r = mq.optimal_dual_1d_quadratic(mq.fixtures.tri2x(), 3)
    assert r.grid.points == pytest.approx([0.0, 1 / math.sqrt(3), 1.0], abs=1e-9)
    assert r.distortion_p == pytest.approx(1 / 6 - 2 / 3**2.5, abs=1e-10)


def test_lloyd_is_stationary_and_dominated():
    mu = mq.DiscreteMeasure([0.0, 0.2, 0.5, 0.9, 1.0], [0.1, 0.3, 0.2, 0.2, 0.2])
    r = mq.lloyd(mu, 2)
    assert mq.convex_order_leq_1d(r.pushforward, mu)
    assert sum(r.cell_weights) == pytest.approx(1.0)


def test_martingale_transport_and_moment_identity():
    mu = mq.DiscreteMeasure([0.2, 0.5, 0.7], [0.3, 0.3, 0.4])
    nu = mq.DiscreteMeasure([0.0, 0.4, 1.0], [0.15, 0.6, 0.25])
    value, coupling = mq.m_p(mu, nu, 2.0)
    assert value == pytest.approx(nu.second_moment() - mu.second_moment(), abs=1e-10)
    assert coupling.martingale_residual() <= 1e-9
    point = mq.DiscreteMeasure.dirac([0.0])
    pm = mq.DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])
    assert mq.mot_value(point, pm, mq.CostSpec.abs_power(1))[0] == pytest.approx(1.0)


def test_infeasible_pair_raises():
    with pytest.raises(mq.InfeasibleError, match="Strassen"):
        mq.mot_value(mq.fixtures.mu6(), mq.fixtures.mu6_check(), mq.CostSpec.abs_power(1))
    assert not mq.convex_order_feasible(mq.fixtures.mu6(), mq.fixtures.mu6_check())


def test_invalid_input_is_value_error():
    with pytest.raises(ValueError):
        mq.DiscreteMeasure([0.0, 1.0], [0.5, 0.6])


def test_projected_coupling_round_trip():
    mu = mq.DiscreteMeasure.dirac([0.5])
    nu = mq.DiscreteMeasure([0.25, 0.75], [0.5, 0.5])
    _, pi = mq.m_p(mu, nu, 1.0)
    q = mq.dual_quantize_1d(nu, mq.Quantizer([0.0, 1.0])).kernel
    b = mq.build_pi_bar(pi, mq.Quantizer([0.5]), q)
    assert b["dual_cost_p"] == pytest.approx(3 / 16)
    assert b["pi_bar"].martingale_residual() <= 1e-12
    assert mq.aw_p(b["pi_bar"], b["pi_bar"], 1.0) == pytest.approx(0.0, abs=1e-12)


def test_two_dimensional_points():
    mu = mq.DiscreteMeasure([[0.25, 0.25], [-0.25, -0.25]], [0.5, 0.5])
    grid = mq.Quantizer([[-1, -1], [-1, 1], [1, -1], [1, 1]])
    value, kernel = mq.dual_distortion_lp(mu, grid, 2.0)
    assert value == pytest.approx(2 - 2 * 0.25**2, abs=1e-10)
    assert mu.points == [[-0.25, -0.25], [0.25, 0.25]]
