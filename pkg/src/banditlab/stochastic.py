"""IID-reward environments and the classic stochastic bandit agents."""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .concentration import hoeffding_radius
from .core import BANDIT, Agent, BanditReward, Environment, Step, argmax_lowest
from .errors import ConfigurationError, DomainError


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


class BernoulliEnv(Environment):
    """Arm ``a`` pays Bernoulli(``means[a]``).

    The whole reward vector is drawn every round so hindsight regret is
    well defined; only the chosen entry is revealed.
    """

    feedback_kind = BANDIT

    def __init__(self, means: Sequence[float]):
        means = [float(m) for m in means]
        if not means or any(not 0.0 <= m <= 1.0 for m in means):
            raise DomainError("Bernoulli means must lie in [0, 1]")
        self.means = means
        self.n_arms = len(means)

    def step(self, t, arm, rng):
        u = rng.generator.random(self.n_arms)
        row = [1.0 if u[k] < self.means[k] else 0.0 for k in range(self.n_arms)]
        return Step(BanditReward(row[arm]), row[arm], row)

    def expected_values(self, context=None):
        return self.means


class FiniteSupportEnv(Environment):
    """Arm ``a`` pays ``values[a][j]`` with probability ``probs[a][j]``."""

    feedback_kind = BANDIT

    def __init__(self, values: Sequence[Sequence[float]], probs: Sequence[Sequence[float]]):
        if len(values) != len(probs) or not values:
            raise DomainError("values and probs must describe the same arms")
        self.values = [list(map(float, v)) for v in values]
        self.probs = [list(map(float, p)) for p in probs]
        for v, p in zip(self.values, self.probs):
            if len(v) != len(p) or abs(math.fsum(p) - 1.0) > 1e-9 or min(p) < 0:
                raise DomainError("each arm needs a probability vector over its values")
            if any(not 0.0 <= x <= 1.0 for x in v):
                raise DomainError("rewards must lie in [0, 1]")
        self.n_arms = len(values)
        self.means = [math.fsum(x * q for x, q in zip(v, p))
                      for v, p in zip(self.values, self.probs)]

    def step(self, t, arm, rng):
        row = [self.values[k][rng.sample_index(self.probs[k])] for k in range(self.n_arms)]
        return Step(BanditReward(row[arm]), row[arm], row)

    def expected_values(self, context=None):
        return self.means


class DeterministicEnv(Environment):
    """Arm ``a`` always pays ``rewards[a]``."""

    feedback_kind = BANDIT

    def __init__(self, rewards: Sequence[float]):
        self.rewards = [float(r) for r in rewards]
        if any(not 0.0 <= r <= 1.0 for r in self.rewards):
            raise DomainError("rewards must lie in [0, 1]")
        self.n_arms = len(self.rewards)
        self.means = self.rewards

    def step(self, t, arm, rng):
        return Step(BanditReward(self.rewards[arm]), self.rewards[arm], self.rewards)

    def expected_values(self, context=None):
        return self.rewards


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


class ArmStats:
    """Pull counts and reward sums per arm."""

    __slots__ = ("n", "sum")

    def __init__(self, K: int):
        self.n = [0] * K
        self.sum = [0.0] * K

    def update(self, arm: int, r: float) -> None:
        self.n[arm] += 1
        self.sum[arm] += r

    def mean(self, arm: int) -> float:
        n = self.n[arm]
        return self.sum[arm] / n if n else 0.0

    def means(self) -> list[float]:
        return [self.mean(a) for a in range(len(self.n))]

    def most_pulled(self) -> int:
        return argmax_lowest(self.n)


class StatsAgent(Agent):
    """Shared plumbing for agents that only need per-arm averages."""

    accepts = frozenset({BANDIT})

    def __init__(self, K: int):
        if K < 1:
            raise DomainError("need at least one arm")
        self.n_arms = K
        self.stats = ArmStats(K)
        self.t = 0

    def observe(self, arm, feedback):
        self.stats.update(arm, feedback.r)

    def predict(self) -> int:
        """Best-arm guess after the run: the most pulled arm."""
        return self.stats.most_pulled()


def default_explore_first_n(K: int, T: int) -> int:
    """``(T/K)^{2/3} (ln T)^{1/3}`` rounded up, capped so that ``N*K <= T``."""
    n = math.ceil((T / K) ** (2.0 / 3.0) * math.log(T) ** (1.0 / 3.0))
    return max(1, min(n, T // K))


class ExploreFirst(StatsAgent):
    """Round-robin for ``N*K`` rounds, then commit to the empirical best."""

    def __init__(self, K: int, T: int, N: Optional[int] = None):
        super().__init__(K)
        if N is None:
            N = default_explore_first_n(K, T)
        if N < 1:
            raise ConfigurationError("exploration budget N must be at least 1")
        if N * K > T:
            raise ConfigurationError(f"N*K = {N * K} exceeds horizon T = {T}")
        self.N = N
        self.T = T
        self.choice: Optional[int] = None

    def act(self, rng, context=None):
        self.t += 1
        if self.t <= self.N * self.n_arms:
            return (self.t - 1) % self.n_arms
        if self.choice is None:
            self.choice = argmax_lowest(self.stats.means())
        return self.choice

    def observe(self, arm, feedback):
        if self.choice is None:
            self.stats.update(arm, feedback.r)


def epsilon_schedule(t: int, K: int) -> float:
    if t <= 1:
        return 1.0
    return min(1.0, t ** (-1.0 / 3.0) * (K * math.log(t)) ** (1.0 / 3.0))


class EpsilonGreedy(StatsAgent):
    def act(self, rng, context=None):
        self.t += 1
        if rng.random() < epsilon_schedule(self.t, self.n_arms):
            return rng.integers(self.n_arms)
        return argmax_lowest(self.stats.means())


class SuccessiveElimination(StatsAgent):
    """Cycle through active arms; prune after each complete pass."""

    def __init__(self, K: int, T: int):
        super().__init__(K)
        if T < 2:
            raise DomainError("horizon must be at least 2")
        self.T = T
        self.active = list(range(K))
        self._pos = 0
        self.deactivated_at: dict[int, int] = {}

    def act(self, rng, context=None):
        self.t += 1
        return self.active[self._pos]

    def observe(self, arm, feedback):
        self.stats.update(arm, feedback.r)
        self._pos += 1
        if self._pos == len(self.active):
            self._pos = 0
            self._prune()

    def _prune(self) -> None:
        if len(self.active) < 2:
            return
        ucb = {}
        lcb = {}
        for a in self.active:
            r = hoeffding_radius(self.stats.n[a], self.T)
            m = self.stats.mean(a)
            ucb[a] = m + r
            lcb[a] = m - r
        best_lcb = max(lcb.values())
        keep = [a for a in self.active if not ucb[a] < best_lcb]
        for a in self.active:
            if a not in keep:
                self.deactivated_at[a] = self.stats.n[a]
        self.active = keep


class UCB1(StatsAgent):
    """Try each arm once, then play the highest upper confidence bound."""

    def __init__(self, K: int, T: int):
        super().__init__(K)
        if K > T:
            raise ConfigurationError("UCB1 needs T >= K")
        self.T = max(T, 2)
        self._log_t2 = 2.0 * math.log(self.T)

    def index(self, arm: int) -> float:
        n = self.stats.n[arm]
        return self.stats.sum[arm] / n + math.sqrt(self._log_t2 / n)

    def act(self, rng, context=None):
        self.t += 1
        if self.t <= self.n_arms:
            return self.t - 1
        n, s, c = self.stats.n, self.stats.sum, self._log_t2
        best, bv = 0, -math.inf
        for a in range(self.n_arms):
            v = s[a] / n[a] + math.sqrt(c / n[a])
            if v > bv:
                best, bv = a, v
        return best


def ucb_index(mean: float, n: int, T: int) -> float:
    return mean + hoeffding_radius(n, T)
