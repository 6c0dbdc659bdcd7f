"""Named quick-check suites, one per topic; each check returns pass/fail with detail."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import adversarial, bayes, bwk, concentration, contextual, games, incentives, linear, lipschitz, stochastic
from ..core import RngStream, run_episode
from .experiments import best_arm_id_experiment, coin_decision_experiment


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _stochastic() -> list[Check]:
    out = []
    env = stochastic.BernoulliEnv([0.8, 0.3])
    for name, make in (("ucb1", lambda: stochastic.UCB1(2, 2000)),
                       ("successive_elimination", lambda: stochastic.SuccessiveElimination(2, 2000)),
                       ("explore_first", lambda: stochastic.ExploreFirst(2, 2000))):
        regs = [run_episode(env, make(), 2000, RngStream(s))[1].pseudo_regret for s in range(10)]
        m = float(np.mean(regs))
        out.append(Check(f"{name} sublinear regret", m < 0.1 * 2000, f"mean pseudo-regret {m:.1f}"))
    return out


def _bayes() -> list[Check]:
    prior = incentives.example_prior()
    hist = [(0, 0.0), (1, 1.0), (0, 1.0)]
    post = bayes.FinitePosterior(prior)
    for a, r in hist:
        post.update(a, r)
    batch = bayes.posterior_update_finite(prior, hist)
    diff = max(abs(x - y) for x, y in zip(post.probs(), batch))
    return [Check("sequential equals batch posterior", diff <= 1e-12, f"max diff {diff:.2e}")]


def _adversarial() -> list[Check]:
    T, K = 1000, 10
    ok = True
    worst = -math.inf
    for s in range(5):
        C = RngStream(s).generator.random((T, K))
        h = adversarial.Hedge(K, adversarial.hedge_eps(K, T))
        for row in C:
            h.update(row)
        gap = h.expected_cost - C.sum(axis=0).min()
        worst = max(worst, gap)
        ok &= gap < 2 * math.sqrt(2 * T * math.log(K))
    return [Check("Hedge probability-one bound", ok, f"worst regret {worst:.2f}")]


def _linear() -> list[Check]:
    fam = linear.ActionFamily.explicit([(0,), (1,)])
    T = 100
    V = [[1 / 3, 2 / 3]] + [[1, 0] if t % 2 else [0, 1] for t in range(1, T)]
    run = linear.run_combinatorial(linear.LinearCostEnv(fam, V), linear.follow_the_leader(fam), T, RngStream(0))
    return [Check("FTL pays every round after the first", abs(run.total_cost - (T - 2 / 3)) < 1e-9,
                  f"FTL {run.total_cost:.4f}, best fixed {run.best_fixed_cost:.4f}")]


def _lipschitz() -> list[Check]:
    z = lipschitz.zooming(200)
    env = lipschitz.bump_env(0.3, 0.25, 1.0)
    rng = RngStream(0)
    ok = True
    for _ in range(200):
        x = z.act(rng)
        ok &= z.uncovered() is None
        z.observe(x, env.step(x, rng))
    return [Check("zooming covering invariant", ok, f"{len(z.xs)} active arms")]


def _contextual() -> list[Check]:
    means = [[0.8, 0.2], [0.3, 0.6]]
    env = contextual.FiniteContextEnv(means)
    pi = contextual.Policy({0: 0, 1: 1})
    est = [contextual.ips_estimate(pi, contextual.log_uniform(env, 200, RngStream(s))) for s in range(300)]
    m, se = float(np.mean(est)), float(np.std(est, ddof=1) / math.sqrt(len(est)))
    truth = contextual.policy_value(pi, means, env.context_probs)
    return [Check("IPS unbiased", abs(m - truth) <= 3 * se, f"IPS {m:.4f} vs {truth:.4f} (se {se:.4f})")]


def _games() -> list[Check]:
    rep = games.minimax_selfplay([[0, 1], [1, 0]], 0.01)
    return [Check("matching pennies value", abs(rep.value_estimate - 0.5) <= 0.01,
                  f"value {rep.value_estimate:.4f}, gap {rep.duality_gap:.4f}")]


def _bwk() -> list[Check]:
    inst = bwk.rescale_budgets(bwk.two_resource_instance(50))
    sol = bwk.solve_bwk_lp(inst.expected(), inst.B, inst.T)
    return [Check("two-resource LP value", abs(sol.value - 1.0) < 1e-12, f"D={sol.D}")]


def _incentives() -> list[Check]:
    prior = incentives.example_prior()
    eps = incentives.bic_epsilon_bound(prior, 1)
    ok = incentives.bic_verify(lambda: incentives.RepeatedHiddenExploration(
        prior, incentives.BicParams(1, eps), incentives.AlwaysArm(incentives.ARM2)), prior, 4)
    bad = incentives.bic_verify(lambda: incentives.AlwaysArm(incentives.ARM2), prior, 2)
    return [Check("hidden exploration is BIC", ok.passed, f"worst margin {ok.worst_margin:.4f}"),
            Check("always arm 2 is not BIC", not bad.passed, f"worst margin {bad.worst_margin:.4f}")]


def _lower_bounds() -> list[Check]:
    kl = concentration.coin_kl(0.2)
    coin = coin_decision_experiment(400, 0.4, range(300))
    bai = best_arm_id_experiment(lambda K, T: stochastic.UCB1(K, T), 2, 0.3, 222, range(100))
    return [Check("coin KL at most 2 eps^2", kl <= 2 * 0.04, f"KL {kl:.5f}"),
            Check("coin rule accurate at T=400", max(coin.high_given_fair, coin.low_given_biased) < 0.01,
                  f"{coin.high_given_fair:.3f}/{coin.low_given_biased:.3f}"),
            Check("best arm found at T=10K/eps^2", bai.error_rate < 0.05, f"error {bai.error_rate:.3f}")]


SUITES: dict[str, Callable[[], list[Check]]] = {
    "stochastic": _stochastic,
    "bayes": _bayes,
    "adversarial": _adversarial,
    "linear": _linear,
    "lipschitz": _lipschitz,
    "contextual": _contextual,
    "games": _games,
    "bwk": _bwk,
    "incentives": _incentives,
    "lower-bounds": _lower_bounds,
}
