"""Exact Bayesian updates for finite priors, conjugate pairs, Thompson Sampling.

Finite-prior posteriors are kept as log-weights and normalized on read, so
long histories do not underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import BANDIT, Agent, RngStream, argmax_lowest
from .errors import DomainError


@dataclass(frozen=True)
class FinitePrior:
    """Explicit prior over mean-reward vectors with Bernoulli rewards."""

    support: tuple
    probs: tuple

    def __init__(self, support: Sequence[Sequence[float]], probs: Sequence[float]):
        sup = tuple(tuple(float(x) for x in mu) for mu in support)
        ps = tuple(float(p) for p in probs)
        if not sup or len(sup) != len(ps):
            raise DomainError("support and probabilities must have equal, nonzero length")
        K = len(sup[0])
        if any(len(mu) != K for mu in sup):
            raise DomainError("all support points need the same number of arms")
        if any(not 0.0 <= x <= 1.0 for mu in sup for x in mu):
            raise DomainError("support entries must lie in [0, 1]")
        if min(ps) < 0 or abs(math.fsum(ps) - 1.0) > 1e-12:
            raise DomainError("prior probabilities must form a distribution")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "probs", ps)

    @property
    def n_arms(self) -> int:
        return len(self.support[0])

    def prior_means(self) -> list[float]:
        return [math.fsum(p * mu[a] for mu, p in zip(self.support, self.probs))
                for a in range(self.n_arms)]

    @classmethod
    def product(cls, marginals: Sequence[tuple[Sequence[float], Sequence[float]]]) -> "FinitePrior":
        """Independent prior from per-arm ``(values, probs)`` marginals."""
        support = [()]
        probs = [1.0]
        for vals, ps in marginals:
            support = [s + (v,) for s in support for v in vals]
            probs = [p * q for p in probs for q in ps]
        return cls(support, probs)

    def sample(self, rng: RngStream) -> tuple:
        return self.support[rng.sample_index(self.probs)]


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def _loglik(mu: float, r: float) -> float:
    if r == 1.0:
        return _log(mu)
    if r == 0.0:
        return _log(1.0 - mu)
    raise DomainError(f"finite-prior updates need binary rewards, got {r}")


def _normalize(logw: Sequence[float]) -> list[float]:
    top = max(logw)
    if top == -math.inf:
        raise DomainError("history has zero probability under every support point")
    w = [math.exp(x - top) if x > -math.inf else 0.0 for x in logw]
    s = math.fsum(w)
    return [x / s for x in w]


def _pairs(history) -> Iterable[tuple[int, float]]:
    for rec in history:
        if isinstance(rec, tuple):
            yield rec
        else:
            yield rec.arm, rec.feedback.r


class FinitePosterior:
    """Sequentially updated posterior over a :class:`FinitePrior` support."""

    def __init__(self, prior: FinitePrior):
        self.prior = prior
        self.logw = [_log(p) for p in prior.probs]

    def update(self, arm: int, r: float) -> None:
        sup = self.prior.support
        self.logw = [lw + _loglik(mu[arm], r) if lw > -math.inf else lw
                     for lw, mu in zip(self.logw, sup)]
        # renormalize in log space so the sequential posterior literally is
        # the normalized posterior of the prefix
        probs = _normalize(self.logw)
        self.logw = [_log(p) for p in probs]

    def probs(self) -> list[float]:
        return _normalize(self.logw)

    def means(self) -> list[float]:
        ps = self.probs()
        return [math.fsum(p * mu[a] for mu, p in zip(self.prior.support, ps))
                for a in range(self.prior.n_arms)]


def posterior_update_finite(prior: FinitePrior, history) -> list[float]:
    """Batch posterior: prior times the product of Bernoulli likelihoods.

    ``history`` is a :class:`History` of bandit-reward rounds or a sequence of
    ``(arm, reward)`` pairs.
    """
    logw = [_log(p) for p in prior.probs]
    for arm, r in _pairs(history):
        for i, mu in enumerate(prior.support):
            if logw[i] > -math.inf:
                logw[i] += _loglik(mu[arm], float(r))
    return _normalize(logw)


# ---------------------------------------------------------------------------
# Conjugate pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise DomainError("Beta parameters must be positive")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class GaussianParams:
    mean: float
    std: float

    def __post_init__(self):
        if self.std <= 0:
            raise DomainError("std must be positive")


def beta_bernoulli_update(p: BetaParams, successes: int, failures: int) -> BetaParams:
    """Standard conjugate update: successes to alpha, failures to beta."""
    if successes < 0 or failures < 0:
        raise DomainError("counts must be nonnegative")
    return BetaParams(p.alpha + successes, p.beta + failures)


def gaussian_update(prior: GaussianParams, obs_std: float, total: float, n: int) -> GaussianParams:
    """Normal-normal update from the sum of ``n`` observations."""
    if obs_std <= 0:
        raise DomainError("observation std must be positive")
    if n < 0:
        raise DomainError("n must be nonnegative")
    if n == 0:
        return prior
    prec0 = 1.0 / prior.std ** 2
    prec_obs = n / obs_std ** 2
    prec = prec0 + prec_obs
    mean = (prec0 * prior.mean + total / obs_std ** 2) / prec
    return GaussianParams(mean, 1.0 / math.sqrt(prec))


# ---------------------------------------------------------------------------
# Thompson Sampling
# ---------------------------------------------------------------------------


class ThompsonFinite(Agent):
    """Sample a mean vector from the exact posterior and play its argmax."""

    accepts = frozenset({BANDIT})

    def __init__(self, prior: FinitePrior):
        self.prior = prior
        self.n_arms = prior.n_arms
        self.posterior = FinitePosterior(prior)
        self._best = [argmax_lowest(mu) for mu in prior.support]

    def action_distribution(self) -> list[float]:
        """Exact probability of each arm this round: P[argmax mu = a | history]."""
        dist = [0.0] * self.n_arms
        for b, p in zip(self._best, self.posterior.probs()):
            dist[b] += p
        return dist

    def act(self, rng, context=None):
        i = rng.sample_index(self.posterior.probs())
        return self._best[i]

    def observe(self, arm, feedback):
        self.posterior.update(arm, feedback.r)

    def predict(self) -> int:
        return argmax_lowest(self.posterior.means())


BETA_BERNOULLI = "beta-bernoulli"
GAUSSIAN = "gaussian"


class ThompsonPriorFree(Agent):
    """Thompson Sampling with independent Beta(1,1) or N(0,1) per-arm priors.

    Beta mode binarizes a non-binary reward with a coin of that expectation.
    """

    accepts = frozenset({BANDIT})

    def __init__(self, K: int, mode: str = BETA_BERNOULLI):
        if mode not in (BETA_BERNOULLI, GAUSSIAN):
            raise DomainError(f"unknown Thompson mode {mode!r}")
        self.n_arms = K
        self.mode = mode
        self.successes = [0] * K
        self.failures = [0] * K
        self.sums = [0.0] * K
        self.counts = [0] * K
        self._rng: RngStream | None = None

    def params(self, arm: int):
        if self.mode == BETA_BERNOULLI:
            return beta_bernoulli_update(BetaParams(1.0, 1.0), self.successes[arm], self.failures[arm])
        return gaussian_update(GaussianParams(0.0, 1.0), 1.0, self.sums[arm], self.counts[arm])

    def act(self, rng, context=None):
        self._rng = rng
        g = rng.generator
        if self.mode == BETA_BERNOULLI:
            draws = g.beta(np.add(self.successes, 1.0), np.add(self.failures, 1.0))
        else:
            n = np.asarray(self.counts, dtype=float)
            draws = g.normal(np.asarray(self.sums) / (n + 1.0), 1.0 / np.sqrt(n + 1.0))
        return argmax_lowest(draws.tolist())

    def observe(self, arm, feedback):
        r = feedback.r
        if self.mode == BETA_BERNOULLI:
            if r not in (0.0, 1.0):
                r = float(self._rng.bernoulli(r))
            if r == 1.0:
                self.successes[arm] += 1
            else:
                self.failures[arm] += 1
        else:
            self.sums[arm] += r
            self.counts[arm] += 1

    def predict(self) -> int:
        n = [self.successes[a] + self.failures[a] + self.counts[a] for a in range(self.n_arms)]
        return argmax_lowest(n)


def bayesian_regret(agent_factory, prior: FinitePrior, T: int, seeds: Sequence[int]) -> tuple[float, float]:
    """Monte-Carlo Bayesian regret: mean and standard error over prior draws."""
    from .core import run_episode
    from .stochastic import BernoulliEnv

    vals = []
    for s in seeds:
        rng = RngStream(s)
        mu = prior.sample(rng.child("prior"))
        _, rep = run_episode(BernoulliEnv(mu), agent_factory(), T, rng.child("run"))
        vals.append(rep.pseudo_regret)
    arr = np.asarray(vals)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return float(arr.mean()), se
