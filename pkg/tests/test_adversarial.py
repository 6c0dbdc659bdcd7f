import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditlab.adversarial import (EXP3, EXP4, CostTableEnv, Hedge, MajorityVote, WeightState, WeightedMajority,
                                   bernoulli_cost_table, exp4_fake_costs, hedge_eps, make_exp4, run_prediction,
                                   selection_probs, wma_mistake_bound)
from banditlab.core import BANDIT_COST, BanditCost, RngStream, run_episode
from banditlab.errors import DomainError, PropertyViolation


def test_majority_vote_log2_bound_exhaustive():
    experts = list(itertools.product((0, 1), repeat=2))  # expert e predicts experts[e][t]
    worst = 0
    for truth in experts:
        mv = MajorityVote(4)
        run_prediction(mv, [[e[t] for e in experts] for t in range(2)], truth)
        worst = max(worst, mv.mistakes)
        assert mv.mistakes <= 2
    assert worst == 2


def test_majority_vote_single_perfect_and_breach():
    mv = MajorityVote(1)
    run_prediction(mv, [[1], [0], [1]], [1, 0, 1])
    assert mv.mistakes == 0
    mv = MajorityVote(1)
    run_prediction(mv, [[1]], [0])
    with pytest.raises(PropertyViolation):
        mv.predict([1])


def test_wma_hand_trace():
    wma = WeightedMajority(2, 0.5)
    preds = run_prediction(wma, [[1, 0]] * 5, [1] * 5)
    assert preds == [0, 1, 1, 1, 1]
    assert wma.mistakes == 1
    assert wma.w == [1.0, 0.5 ** 5]


def test_wma_bound_random():
    g = np.random.default_rng(0)
    for _ in range(50):
        K, T, eps = int(g.integers(2, 8)), 60, float(g.uniform(0.05, 0.9))
        adv = g.integers(2, size=(T, K)).tolist()
        y = g.integers(2, size=T).tolist()
        wma = WeightedMajority(K, eps)
        run_prediction(wma, adv, y)
        assert wma.mistakes <= wma_mistake_bound(min(wma.expert_mistakes), K, eps)
    wma = WeightedMajority(4, 0.5)
    adv = g.integers(2, size=(40, 4))
    adv[:, 2] = y = g.integers(2, size=40)
    run_prediction(wma, adv.tolist(), y.tolist())
    assert wma.mistakes <= 4 * math.log(4)


def test_hedge_examples():
    h = Hedge(2, 0.5)
    assert h.distribution().tolist() == [0.5, 0.5]
    h.update([1, 0])
    assert h.distribution() == pytest.approx([1 / 3, 2 / 3])
    assert hedge_eps(4, 100) == pytest.approx(0.0832554611, abs=1e-10)
    assert Hedge.for_horizon(4, 100).eps == pytest.approx(math.sqrt(math.log(4) / 200))
    with pytest.raises(DomainError):
        h.update([-1, 0])
    with pytest.raises(DomainError):
        WeightState(3, 0.6)


def test_hedge_probability_one_bound_and_weights():
    for s in range(5):
        T, K = 400, 6
        C = RngStream(s).generator.random((T, K))
        h = Hedge.for_horizon(K, T)
        prev = h.state.weights()
        for row in C:
            h.update(row)
            w = h.state.weights()
            assert (w > 0).all() and (w <= prev).all()
            assert abs(h.distribution().sum() - 1) < 1e-12
            prev = w
        assert h.expected_cost - C.sum(axis=0).min() < 2 * math.sqrt(2 * T * math.log(K))


def test_hedge_unbounded_parameterization():
    h = Hedge.for_unbounded(5, 100, 4.0)
    assert h.eps == pytest.approx(math.sqrt(math.log(5) / (3 * 4 * 100)))


def test_exp3_fake_cost_is_ips():
    agent = EXP3(3, 0.3, 0.1)
    rng = RngStream(0)
    a = agent.act(rng)
    q = agent.arm_distribution().copy()
    agent.observe(a, BanditCost(0.6))
    expect = np.zeros(3)
    expect[a] = 0.6 / q[a]
    assert agent.last_fake == pytest.approx(expect)
    assert (q >= 0.3 / 3 - 1e-15).all()


def test_exp4_single_arm_fake_cost_exact():
    agent = EXP4(1, np.zeros((5, 3), dtype=int), 0.2, 0.1)
    a = agent.act(RngStream(0))
    agent.observe(a, BanditCost(0.7))
    assert agent.last_fake.tolist() == [0.7, 0.7, 0.7]


@settings(max_examples=50)
@given(st.integers(1, 5), st.integers(1, 6), st.floats(0.0, 0.49), st.data())
def test_exp4_unbiased_by_enumeration(K, N, gamma, data):
    recs = data.draw(st.lists(st.integers(0, K - 1), min_size=N, max_size=N))
    w = data.draw(st.lists(st.floats(0.01, 1.0), min_size=N, max_size=N))
    p = np.asarray(w) / sum(w)
    costs = data.draw(st.lists(st.floats(0, 1), min_size=K, max_size=K))
    q = selection_probs(recs, p, K, gamma)
    assert q.sum() == pytest.approx(1.0)
    expected = np.zeros(N)
    for a in range(K):
        if q[a] > 0:
            expected += q[a] * exp4_fake_costs(recs, q, a, costs[a])
    assert expected == pytest.approx([costs[r] for r in recs], abs=1e-9)
    if gamma > 0:
        for a in range(K):
            assert exp4_fake_costs(recs, q, a, 1.0).max() <= K / gamma + 1e-9


def test_exp4_live_experts_and_table_validation():
    agent = make_exp4(3, lambda t, ctx: (t % 3, 0), 50)
    assert agent.n_experts == 2
    env = CostTableEnv(bernoulli_cost_table([0.2, 0.5, 0.8], 50, RngStream(1)), BANDIT_COST)
    run_episode(env, agent, 50, RngStream(2))
    assert agent.max_fake <= 3 / agent.gamma + 1e-9
    with pytest.raises(DomainError):
        EXP4(2, [[0, 2]], 0.1, 0.1)
    with pytest.raises(DomainError):
        EXP4(2, [[0, 1]], 0.5, 0.1)


def test_exp3_for_horizon_gamma():
    agent = EXP3.for_horizon(5, 10**4)
    assert agent.gamma == pytest.approx((10**4) ** (-1 / 3) * (5 * math.log(5)) ** (1 / 3))


@pytest.mark.slow
def test_exp3_regret_band():
    T, K = 10**4, 5
    means = [0.4, 0.5, 0.5, 0.6, 0.6]
    regs = []
    for s in range(50):
        rng = RngStream(s)
        env = CostTableEnv(bernoulli_cost_table(means, T, rng.child("table")), BANDIT_COST, means=means)
        _, rep = run_episode(env, EXP3.for_horizon(K, T), T, rng.child("run"))
        regs.append(rep.regret)
    assert np.mean(regs) <= 10 * math.sqrt(T * K * math.log(K))


def test_cost_env_validation():
    with pytest.raises(DomainError):
        CostTableEnv([[1.5, 0.0]])
    with pytest.raises(DomainError):
        CostTableEnv([[0.5, 0.0]], "semi-bandit")
