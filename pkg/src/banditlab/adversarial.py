"""Full-feedback experts algorithms and their bandit-feedback reductions."""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (BANDIT, BANDIT_COST, FULL, Agent, BanditCost, Environment, FullCosts,
                   Step)
from .errors import DomainError, PropertyViolation


def hedge_eps(K: int, U: float) -> float:
    """``sqrt(ln K / (2U))`` where ``U`` bounds the best expert's total cost."""
    return _clamp_eps(math.sqrt(math.log(K) / (2.0 * U)))


def hedge_eps_second_moment(K: int, U: float, T: int) -> float:
    """``sqrt(ln K / (3 U T))`` where ``U`` bounds per-round costs (or their
    expected second moment under the played distribution)."""
    return _clamp_eps(math.sqrt(math.log(K) / (3.0 * U * T)))


def _clamp_eps(eps: float) -> float:
    # a single expert gives eps = 0; any tiny positive value behaves the same
    return min(max(eps, 1e-12), 0.49)


class WeightState:
    """Positive weights kept as logs; probabilities are normalized on demand."""

    __slots__ = ("logw", "log_keep")

    def __init__(self, N: int, eps: float):
        if not 0.0 < eps <= 0.5:
            raise DomainError("eps must lie in (0, 0.5]")
        self.logw = np.zeros(N)
        self.log_keep = math.log1p(-eps)

    def probs(self) -> np.ndarray:
        w = np.exp(self.logw - self.logw.max())
        return w / w.sum()

    def weights(self) -> np.ndarray:
        return np.exp(self.logw)

    def discount(self, costs) -> None:
        """``w <- w * (1 - eps) ** cost`` coordinate-wise."""
        self.logw = self.logw + self.log_keep * np.asarray(costs, dtype=float)


class Hedge(Agent):
    """Multiplicative weights over ``N`` actions with full cost feedback."""

    accepts = frozenset({FULL})

    def __init__(self, N: int, eps: float):
        self.n_arms = N
        self.eps = eps
        self.state = WeightState(N, eps)
        self.p = self.state.probs()
        self.expected_cost = 0.0  # sum_t p_t . c_t
        self.history_p: list[np.ndarray] = []

    @classmethod
    def for_horizon(cls, N: int, T: int, U: float = 1.0) -> "Hedge":
        """Tuned for per-round costs in ``[0, U]`` over ``T`` rounds."""
        return cls(N, hedge_eps(N, U * T))

    @classmethod
    def for_unbounded(cls, N: int, T: int, U: float) -> "Hedge":
        return cls(N, hedge_eps_second_moment(N, U, T))

    def distribution(self) -> np.ndarray:
        return self.p

    def act(self, rng, context=None):
        return rng.sample_index(self.p)

    def update(self, costs) -> None:
        c = np.asarray(costs, dtype=float)
        if c.shape != (self.n_arms,):
            raise DomainError(f"expected {self.n_arms} costs, got shape {c.shape}")
        if (c < 0).any():
            raise DomainError("Hedge needs nonnegative costs")
        self.expected_cost += float(self.p @ c)
        self.state.discount(c)
        self.p = self.state.probs()

    def observe(self, arm, feedback):
        self.update(feedback.c)


# ---------------------------------------------------------------------------
# Binary prediction with expert advice
# ---------------------------------------------------------------------------


class MajorityVote:
    """Follow the majority of experts that have never erred (ties predict 0)."""

    def __init__(self, K: int):
        self.alive = set(range(K))
        self.mistakes = 0

    def predict(self, advice: Sequence[int]) -> int:
        if not self.alive:
            raise PropertyViolation("no expert is consistent with the data: none is perfect")
        ones = sum(1 for e in self.alive if advice[e] == 1)
        return 1 if ones > len(self.alive) - ones else 0

    def update(self, advice: Sequence[int], outcome: int) -> None:
        if self.predict(advice) != outcome:
            self.mistakes += 1
        self.alive = {e for e in self.alive if advice[e] == outcome}


class WeightedMajority:
    """Weighted vote; every mistaken expert's weight is multiplied by ``1 - eps``."""

    def __init__(self, K: int, eps: float):
        if not 0.0 < eps < 1.0:
            raise DomainError("eps must lie in (0, 1)")
        self.w = [1.0] * K
        self.eps = eps
        self.mistakes = 0
        self.expert_mistakes = [0] * K

    def predict(self, advice: Sequence[int]) -> int:
        one = math.fsum(w for w, a in zip(self.w, advice) if a == 1)
        zero = math.fsum(w for w, a in zip(self.w, advice) if a != 1)
        return 1 if one > zero else 0

    def update(self, advice: Sequence[int], outcome: int) -> None:
        if self.predict(advice) != outcome:
            self.mistakes += 1
        for e, a in enumerate(advice):
            if a != outcome:
                self.w[e] *= 1.0 - self.eps
                self.expert_mistakes[e] += 1


def run_prediction(alg, advice: Sequence[Sequence[int]], outcomes: Sequence[int]) -> list[int]:
    """Feed a prediction algorithm round by round; returns its predictions."""
    preds = []
    for adv, y in zip(advice, outcomes):
        preds.append(alg.predict(adv))
        alg.update(adv, y)
    return preds


def wma_mistake_bound(best_cost: float, K: int, eps: float) -> float:
    return 2.0 / (1.0 - eps) * best_cost + 2.0 / eps * math.log(K)


# ---------------------------------------------------------------------------
# Cost environments
# ---------------------------------------------------------------------------


class CostTableEnv(Environment):
    """Oblivious adversary replaying a fixed ``T x K`` cost table."""

    objective = "cost"

    def __init__(self, table, feedback: str = FULL, upper: float = 1.0,
                 means: Optional[Sequence[float]] = None):
        self.table = np.asarray(table, dtype=float)
        if self.table.ndim != 2 or not np.isfinite(self.table).all():
            raise DomainError("cost table must be a finite T x K matrix")
        if (self.table < 0).any() or (self.table > upper).any():
            raise DomainError(f"costs must lie in [0, {upper}]")
        if feedback not in (FULL, BANDIT_COST):
            raise DomainError(f"unsupported feedback {feedback!r}")
        self.feedback_kind = feedback
        self.upper = upper
        self.n_arms = self.table.shape[1]
        self.means = list(means) if means is not None else None

    def step(self, t, arm, rng):
        row = self.table[t - 1]
        fb = FullCosts(tuple(row.tolist())) if self.feedback_kind == FULL else BanditCost(float(row[arm]))
        return Step(fb, float(row[arm]), row.tolist())

    def expected_values(self, context=None):
        return self.means


def bernoulli_cost_table(means: Sequence[float], T: int, rng) -> np.ndarray:
    u = rng.generator.random((T, len(means)))
    return (u < np.asarray(means)).astype(float)


# ---------------------------------------------------------------------------
# EXP4 / EXP3
# ---------------------------------------------------------------------------


def selection_probs(recs: Sequence[int], p: Sequence[float], K: int, gamma: float) -> np.ndarray:
    """``q(a) = (1 - gamma) * P[chosen expert recommends a] + gamma / K``."""
    q = np.full(K, gamma / K)
    for e, a in enumerate(recs):
        q[a] += (1.0 - gamma) * p[e]
    return q


def exp4_fake_costs(recs: Sequence[int], q: Sequence[float], arm: int, cost: float) -> np.ndarray:
    """Inverse-propensity fake cost for every expert."""
    recs = np.asarray(recs)
    out = np.zeros(len(recs))
    out[recs == arm] = cost / q[arm]
    return out


class EXP4(Agent):
    """Hedge over experts, fed inverse-propensity fake costs from bandit feedback.

    ``experts`` is either a ``T x N`` table of recommended arms or a callable
    ``(t, context) -> sequence of N arms``. Live experts must depend only on
    the round and the revealed context.
    """

    accepts = frozenset({BANDIT, BANDIT_COST})

    def __init__(self, K: int, experts, gamma: float, eps: float, n_experts: Optional[int] = None):
        if not 0.0 <= gamma < 0.5:
            raise DomainError("gamma must lie in [0, 0.5)")
        self.n_arms = K
        self.gamma = gamma
        if callable(experts):
            self._advice: Callable = experts
            if n_experts is None:
                n_experts = len(experts(1, None))
        else:
            table = np.asarray(experts, dtype=int)
            if table.size and (table.min() < 0 or table.max() >= K):
                raise DomainError("expert recommendations must be arms in [0, K)")
            self._advice = lambda t, ctx: table[t - 1]
            n_experts = table.shape[1]
        self.n_experts = n_experts
        self.hedge = Hedge(n_experts, eps)
        self.t = 0
        self._recs = None
        self._q = None
        self.last_fake = None
        self.max_fake = 0.0

    def act(self, rng, context=None):
        self.t += 1
        recs = self._advice(self.t, context)
        p = self.hedge.distribution()
        self._recs = recs
        self._q = selection_probs(recs, p, self.n_arms, self.gamma)
        e = rng.sample_index(p)
        if self.gamma > 0.0 and rng.random() < self.gamma:
            return rng.integers(self.n_arms)
        return int(recs[e])

    def update_cost(self, arm: int, cost: float) -> None:
        fake = exp4_fake_costs(self._recs, self._q, arm, cost)
        self.last_fake = fake
        self.max_fake = max(self.max_fake, float(fake.max()))
        self.hedge.update(fake)

    def observe(self, arm, feedback):
        cost = feedback.c if isinstance(feedback, BanditCost) else 1.0 - feedback.r
        self.update_cost(arm, cost)

    def arm_distribution(self) -> np.ndarray:
        """Selection probabilities ``q_t`` used in the most recent round."""
        return self._q


def exp4_gamma(T: int, K: int, N: int) -> float:
    return min(0.49, T ** (-1.0 / 3.0) * (K * math.log(max(N, 2))) ** (1.0 / 3.0))


def make_exp4(K: int, experts, T: int, gamma: Optional[float] = None,
              eps: Optional[float] = None, n_experts: Optional[int] = None) -> EXP4:
    """EXP4 with the crude tuning: ``gamma = T^{-1/3} (K ln N)^{1/3}``, U = K/gamma."""
    if n_experts is None:
        n_experts = len(experts(1, None)) if callable(experts) else np.asarray(experts).shape[1]
    if gamma is None:
        gamma = exp4_gamma(T, K, n_experts)
    if eps is None:
        U = K / gamma if gamma > 0 else K
        eps = hedge_eps_second_moment(n_experts, U, T)
    return EXP4(K, experts, gamma, eps, n_experts)


class EXP3(EXP4):
    """EXP4 whose experts are the arms themselves."""

    def __init__(self, K: int, gamma: float, eps: float):
        ident = tuple(range(K))
        super().__init__(K, lambda t, ctx: ident, gamma, eps, n_experts=K)

    @classmethod
    def for_horizon(cls, K: int, T: int, gamma: Optional[float] = None) -> "EXP3":
        if gamma is None:
            gamma = exp4_gamma(T, K, K)
        U = K / gamma if gamma > 0 else K
        return cls(K, gamma, hedge_eps_second_moment(K, U, T))

    def arm_probs(self) -> np.ndarray:
        return selection_probs(range(self.n_arms), self.hedge.distribution(), self.n_arms, self.gamma)
