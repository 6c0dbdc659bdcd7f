import math

import numpy as np
import pytest

from banditlab.core import RngStream
from banditlab.errors import DomainError
from banditlab.lipschitz import (POWER, SCALED, Interval1DMetric, bump_env, bump_mean, coverage_gap, default_mesh_eps,
                                 fixed_discretization, mesh_distance, run_continuum, target_env, uniform_mesh,
                                 zooming)
from banditlab.stochastic import UCB1


def test_uniform_mesh_examples():
    assert uniform_mesh(0.5) == [0.0, 0.5, 1.0]
    assert uniform_mesh(1.0) == [0.0, 1.0]
    assert uniform_mesh(0.3)[-1] == 1.0
    with pytest.raises(DomainError):
        uniform_mesh(0.0)


@pytest.mark.parametrize("eps", [0.07, 0.1, 0.3, 1 / 3, 0.45])
def test_mesh_property_on_grid(eps):
    mesh = np.asarray(uniform_mesh(eps))
    grid = np.linspace(0, 1, 10**4)
    dist = np.abs(grid[:, None] - mesh[None, :]).min(axis=1)
    assert dist.max() <= eps + 1e-12


def test_fixed_discretization():
    agent = fixed_discretization(lambda K: UCB1(K, 50), [0.4])
    run = run_continuum(bump_env(0.3, 0.2, 1.0), agent, 50, RngStream(0))
    assert set(run.arms) == {0.4}
    for x_star in (0.0, 0.13, 0.5, 0.77):
        env = bump_env(x_star, 0.25, 2.0)
        mesh = uniform_mesh(0.1)
        de = env.best_mean - max(env.mean(x) for x in mesh)
        assert de == pytest.approx(2.0 * mesh_distance(x_star, mesh), abs=1e-12)
        assert de <= 2.0 * 0.1 + 1e-12
    assert default_mesh_eps(5000) == pytest.approx((5000 / math.log(5000)) ** (-1 / 3))
    assert default_mesh_eps(3, 0.01) == 1.0
    with pytest.raises(DomainError):
        fixed_discretization(lambda K: UCB1(K, 10), [])


def test_bump_env():
    env = bump_env(0.3, 0.2, 2.0)
    assert env.mean(0.3) == pytest.approx(0.7)
    for x in (0.0, 0.2, 0.4, 1.0):
        assert env.mean(x) == 0.5
    g = np.random.default_rng(0)
    for _ in range(1000):
        x, y = g.random(2)
        assert abs(env.mean(x) - env.mean(y)) <= 2.0 * abs(x - y) + 1e-12
    for bad in ((1.2, 0.1, 1), (0.5, 0.6, 1), (0.5, 0.1, 0)):
        with pytest.raises(DomainError):
            bump_env(*bad)
    assert bump_mean(0.5, 0.5, 0.1, 1.0) == 0.6
    with pytest.raises(DomainError):
        env.mean(1.5)


def test_target_env():
    env = target_env(0.37)
    assert env.best_mean == 0.9
    assert env.mean(0.0) == pytest.approx(0.53)
    assert target_env(0.5, 0.2).mean(0.0) == 0.0


def test_metrics():
    m = Interval1DMetric(SCALED, 2.0)
    assert m(0.1, 0.4) == pytest.approx(0.6)
    assert m.half_width(0.6) == pytest.approx(0.3)
    p = Interval1DMetric(POWER, 2.0)
    assert p(0.0, 0.25) == pytest.approx(0.5)
    assert p.half_width(0.5) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        Interval1DMetric(POWER, 0.5)
    with pytest.raises(DomainError):
        Interval1DMetric("chebyshev", 1.0)


def test_coverage_gap():
    assert coverage_gap([], []) == 0.0
    assert coverage_gap([0.0], [1.0]) is None
    assert coverage_gap([0.0, 0.5], [0.2, 0.2]) == pytest.approx(0.2)
    assert coverage_gap([0.2], [0.1]) == 0.0
    assert coverage_gap([0.0, 0.4], [0.2, 0.2]) == pytest.approx(0.6)
    assert coverage_gap([0.0, 0.4, 0.8], [0.2, 0.2, 0.2]) is None
    assert coverage_gap([0.0, 0.4], [0.2, 0.1]) == pytest.approx(0.2)


def test_zooming_first_round_and_index():
    z = zooming(100)
    x = z.act()
    assert x == 0.0 and z.xs == [0.0]
    assert z.radii()[0] == pytest.approx(math.sqrt(2 * math.log(100))) and z.radii()[0] > 1
    assert z.indices()[0] == pytest.approx(2 * math.sqrt(2 * math.log(100)))
    assert z.uncovered() is None
    with pytest.raises(DomainError):
        zooming(1)


@pytest.mark.parametrize("seed", range(5))
def test_zooming_invariants(seed):
    T = 300
    z = zooming(T, Interval1DMetric(SCALED, 3.0))
    env = bump_env(0.6, 0.3, 3.0)
    rng = RngStream(seed)
    grid = np.linspace(0, 1, 10**4 + 1)
    prev = []
    for _ in range(T):
        x = z.act(rng)
        assert z.uncovered() is None
        hw = z.metric.half_width(z.radii())
        xs = np.asarray(z.xs)
        covered = (np.abs(grid[:, None] - xs[None, :]) <= hw[None, :] + 1e-12).any(axis=1)
        assert covered.all()
        assert z.xs[:len(prev)] == prev
        prev = list(z.xs)
        z.observe(x, env.step(x, rng))
        assert np.allclose(z.radii(), np.sqrt(2 * math.log(T) / (np.asarray(z.n) + 1.0)), rtol=0, atol=0)


def test_zooming_tie_goes_to_smallest_x():
    z = zooming(10)
    z.act()
    z.n[0] = 5
    z._activate()
    assert len(z.xs) >= 2
    for i in range(len(z.xs)):
        z.n[i], z.sums[i] = 0, 0.0
    assert z.act() == min(z.xs)


def test_zooming_replay_deterministic():
    runs = [run_continuum(target_env(0.37), zooming(500), 500, RngStream(4)) for _ in range(2)]
    assert runs[0].arms == runs[1].arms
