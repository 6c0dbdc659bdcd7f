import math

import pytest
from hypothesis import given, settings, strategies as st

from banditlab.core import (FULL, Agent, BanditReward, DoublingAgent, History, RngStream, best_fixed_hindsight,
                            doubling_phase, doubling_wrap, pseudo_regret, regret_report, run_episode)
from banditlab.errors import ConfigurationError, DomainError
from banditlab.adversarial import CostTableEnv, Hedge
from banditlab.stochastic import BernoulliEnv, DeterministicEnv, UCB1


class Fixed(Agent):
    def __init__(self, K, arm):
        self.n_arms = K
        self.arm = arm

    def act(self, rng, context=None):
        return self.arm

    def observe(self, arm, feedback):
        pass


class Uniform(Fixed):
    def act(self, rng, context=None):
        return rng.integers(self.n_arms)


def test_single_arm_episode():
    h, rep = run_episode(DeterministicEnv([1.0]), Fixed(1, 0), 10, RngStream(0))
    assert len(h) == 10
    assert rep.total_reward == 10
    assert rep.regret == 0


def test_always_wrong_arm_pseudo_regret_is_T():
    _, rep = run_episode(DeterministicEnv([1.0, 0.0]), Fixed(2, 1), 37, RngStream(0))
    assert rep.pseudo_regret == 37
    assert rep.gaps == (0.0, 1.0)


def test_equal_means_zero_pseudo_regret():
    _, rep = run_episode(BernoulliEnv([0.5, 0.5]), Uniform(2, 0), 100, RngStream(3))
    assert rep.pseudo_regret == 0.0


def test_dimension_and_kind_mismatch():
    with pytest.raises(ConfigurationError):
        run_episode(DeterministicEnv([1.0, 0.0]), Fixed(3, 0), 5, RngStream(0))
    with pytest.raises(ConfigurationError):
        run_episode(DeterministicEnv([1.0, 0.0]), Hedge(2, 0.1), 5, RngStream(0))
    with pytest.raises(DomainError):
        run_episode(DeterministicEnv([1.0]), Fixed(1, 0), 0, RngStream(0))


def test_best_fixed_hindsight_examples():
    assert best_fixed_hindsight([[1, 0], [1, 0]]) == (0, 2)
    assert best_fixed_hindsight([[0.5, 0.5]]) == (0, 0.5)
    assert best_fixed_hindsight([[0.2, 0.1], [0.3, 0.1]], "cost") == (1, pytest.approx(0.2))
    with pytest.raises(DomainError):
        best_fixed_hindsight([])


def test_best_fixed_hindsight_matches_column_scan():
    tab = RngStream(11).generator.random((100, 5))
    k, v = best_fixed_hindsight(tab)
    sums = [sum(tab[t, j] for t in range(100)) for j in range(5)]
    assert k == sums.index(max(sums))
    assert v == pytest.approx(max(sums), abs=1e-12)


def test_pseudo_regret_examples():
    assert pseudo_regret([0.9, 0.6], [1, 1]) == pytest.approx(0.6)
    assert pseudo_regret([0.9, 0.6], [0, 0, 0]) == 0.0
    with pytest.raises(DomainError):
        pseudo_regret([0.9, 0.6], [2])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.data())
def test_pseudo_regret_nonnegative_and_gap_sum(means, data):
    arms = data.draw(st.lists(st.integers(0, len(means) - 1), max_size=50))
    pr = pseudo_regret(means, arms)
    assert pr >= 0
    assert pr == pytest.approx(sum(max(means) - means[a] for a in arms), abs=1e-12)


def test_regret_report_cost_sign():
    table = [[1.0, 0.0], [1.0, 0.0]]
    rep = regret_report([1.0, 1.0], table, None, [0, 0], "cost")
    assert rep.total_reward == -2.0
    assert rep.best_fixed_hindsight == 0.0
    assert rep.regret == 2.0
    assert rep.regret_curve == [1.0, 2.0]


def test_cost_env_report_recomputed_from_history():
    tab = RngStream(5).generator.random((50, 3))
    env = CostTableEnv(tab)
    h, rep = run_episode(env, Hedge.for_horizon(3, 50), 50, RngStream(1))
    paid = sum(tab[r.t - 1, r.arm] for r in h)
    assert rep.regret == pytest.approx(paid - tab.sum(axis=0).min(), abs=1e-12)
    assert h[0].feedback.kind == FULL


def test_determinism_byte_identical():
    runs = [run_episode(BernoulliEnv([0.3, 0.6, 0.5]), UCB1(3, 500), 500, RngStream(42)) for _ in range(2)]
    assert runs[0][0] == runs[1][0]
    assert repr(runs[0][1]) == repr(runs[1][1])


def test_rng_substreams_independent_of_consumption():
    a = RngStream(9).child("x")
    b = RngStream(9).child("y")
    b.generator.random(1000)
    assert RngStream(9).child("x").generator.random() == a.generator.random()
    assert RngStream(9).child("x").generator.random() != RngStream(9).child("y").generator.random()
    with pytest.raises(DomainError):
        RngStream(-1)


def test_sample_index_skips_zero_mass():
    r = RngStream(0)
    assert all(r.sample_index([0.0, 1.0, 0.0]) == 1 for _ in range(200))


def test_history_rounds_increase():
    h = History()
    for a in (2, 0, 1):
        h.append(a, BanditReward(1.0))
    assert [r.t for r in h] == [1, 2, 3]
    assert h.arms() == [2, 0, 1]


def test_doubling_phases():
    assert doubling_phase(1) == (1, 1, 1)
    assert [doubling_phase(t)[0] for t in (2, 3)] == [2, 2]
    assert [doubling_phase(t)[0] for t in range(4, 8)] == [3] * 4
    assert doubling_phase(4)[2] == 4
    with pytest.raises(DomainError):
        doubling_phase(0)


def test_doubling_restart_matches_fresh_agent():
    class Rand(Uniform):
        def __init__(self, K, T):
            super().__init__(K, 0)
            self.T = T

    w = doubling_wrap(lambda T: Rand(5, T))
    rng = RngStream(4)
    arms = []
    for t in range(1, 17):
        a = w.act(rng)
        w.observe(a, BanditReward(0.0))
        arms.append(a)
    assert w.horizons == [1, 2, 4, 8, 16]
    for k in range(1, 6):
        fresh = Rand(5, 1 << (k - 1)).act(rng.child(f"phase-{k}"))
        assert arms[(1 << (k - 1)) - 1] == fresh
    assert isinstance(w, DoublingAgent)


@settings(max_examples=25)
@given(st.integers(0, 2**32))
def test_report_regret_identity(seed):
    env = BernoulliEnv([0.2, 0.7])
    h, rep = run_episode(env, UCB1(2, 60), 60, RngStream(seed))
    assert rep.regret == pytest.approx(rep.best_fixed_hindsight - rep.total_reward, abs=1e-12)
    assert math.isclose(rep.regret_curve[-1], rep.regret, abs_tol=1e-12)
