"""Incentivized exploration with two arms: posterior gaps, hidden exploration,
and exact Bayesian incentive-compatibility checks.

Arms are 0 ("arm 1", weakly preferred a priori) and 1 ("arm 2"). Agents
implement a branching protocol: :meth:`BranchingAgent.branches` lists every
possible recommendation with its probability and an opaque token, and
:meth:`BranchingAgent.commit` advances the state along one branch. Sampling
(``act``/``observe``) and exact enumeration share that single description.
"""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .bayes import FinitePrior, posterior_update_finite
from .core import BANDIT, Agent, RngStream
from .errors import DataError, DomainError, ResourceLimitError

ARM1, ARM2 = 0, 1


# ---------------------------------------------------------------------------
# Priors
# ---------------------------------------------------------------------------


class TwoArmPrior(FinitePrior):
    """Finite prior over ``(mu1, mu2)``; arms are swapped if needed so that
    ``E[mu1] >= E[mu2]``. ``swapped`` records whether that happened."""

    def __init__(self, support, probs):
        sup = [tuple(mu) for mu in support]
        if any(len(mu) != 2 for mu in sup):
            raise DomainError("two-arm prior needs (mu1, mu2) support points")
        means = [math.fsum(p * mu[a] for mu, p in zip(sup, probs)) for a in (0, 1)]
        swapped = means[0] < means[1]
        if swapped:
            sup = [(b, a) for a, b in sup]
        super().__init__(sup, probs)
        object.__setattr__(self, "swapped", swapped)


def example_prior() -> TwoArmPrior:
    """``mu1`` in {0.3, 0.9} with equal odds, ``mu2 = 0.5``."""
    return TwoArmPrior([(0.3, 0.5), (0.9, 0.5)], [0.5, 0.5])


def parse_prior(text: str) -> TwoArmPrior:
    support, probs = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        f = line.split()
        try:
            if f[0] != "point" or len(f) != 4:
                raise ValueError
            support.append((float(f[1]), float(f[2])))
            probs.append(float(f[3]))
        except ValueError:
            raise DataError(f"line {lineno}: expected 'point <mu1> <mu2> <prob>', got {raw!r}") from None
    if not support:
        raise DataError("prior file has no points")
    return TwoArmPrior(support, probs)


def load_prior(path) -> TwoArmPrior:
    return parse_prior(Path(path).read_text())


# ---------------------------------------------------------------------------
# Posterior gap
# ---------------------------------------------------------------------------


def _posterior_means(prior: FinitePrior, history: Sequence[tuple[int, float]]) -> list[float]:
    post = posterior_update_finite(prior, history)
    return [math.fsum(p * mu[a] for mu, p in zip(prior.support, post)) for a in (0, 1)]


def posterior_gap(prior: FinitePrior, arm1_samples: Sequence[int]) -> float:
    """``E[mu2 - mu1 | samples of arm 1]`` by exact enumeration."""
    m = _posterior_means(prior, [(ARM1, float(r)) for r in arm1_samples])
    return m[1] - m[0]


def sample_prob(prior: FinitePrior, history: Sequence[tuple[int, float]]) -> float:
    """Prior-predictive probability of a reward sequence on the given arms."""
    total = []
    for mu, p in zip(prior.support, prior.probs):
        lik = p
        for a, r in history:
            lik *= mu[a] if r == 1 else 1.0 - mu[a]
        total.append(lik)
    return math.fsum(total)


def bic_epsilon_bound(prior: FinitePrior, N0: int) -> float:
    """``(1/3) E[G * 1{G > 0}]`` over ``N0`` samples of arm 1."""
    if N0 < 0:
        raise DomainError("N0 must be nonnegative")
    terms = []
    for s in itertools.product((0, 1), repeat=N0):
        h = [(ARM1, float(r)) for r in s]
        pr = sample_prob(prior, h)
        if pr > 0:
            terms.append(pr * max(posterior_gap(prior, s), 0.0))
    return math.fsum(terms) / 3.0


@dataclass(frozen=True)
class BicParams:
    N0: int
    eps: float

    @classmethod
    def checked(cls, prior: FinitePrior, N0: int, eps: Optional[float] = None) -> "BicParams":
        """Parameters certified by the epsilon bound; fails if the prior gives
        arm 2 no fighting chance after ``N0`` samples."""
        bound = bic_epsilon_bound(prior, N0)
        if bound <= 0.0:
            raise DomainError(f"posterior gap is never positive after {N0} samples: no fighting chance for arm 2")
        if eps is None:
            eps = bound
        if not 0.0 <= eps <= bound:
            raise DomainError(f"eps {eps} exceeds the certified bound {bound}")
        return cls(N0, eps)


# ---------------------------------------------------------------------------
# Branching agents
# ---------------------------------------------------------------------------


class BranchingAgent(Agent):
    """Two-arm recommender described by its per-round branches."""

    accepts = frozenset({BANDIT})
    n_arms = 2

    def branches(self) -> list[tuple[float, int, object]]:
        raise NotImplementedError

    def commit(self, token, arm: int, reward: float) -> None:
        raise NotImplementedError

    def act(self, rng, context=None):
        br = self.branches()
        k = rng.sample_index([p for p, _, _ in br]) if len(br) > 1 else 0
        self._token = br[k][2]
        return br[k][1]

    def observe(self, arm, feedback):
        self.commit(self._token, arm, feedback.r)


class AlwaysArm(BranchingAgent):
    def __init__(self, arm: int):
        self.arm = arm

    def branches(self):
        return [(1.0, self.arm, None)]

    def commit(self, token, arm, reward):
        pass


def exploit_arm(prior: FinitePrior, signal: Sequence[tuple[int, float]]) -> int:
    """Lowest-index arm with the highest posterior mean given the signal."""
    m = _posterior_means(prior, signal)
    return ARM1 if m[0] >= m[1] else ARM2


class BayesianGreedy(BranchingAgent):
    """Recommend the arm with the highest posterior mean given everything seen."""

    def __init__(self, prior: FinitePrior):
        self.prior = prior
        self.history: list[tuple[int, float]] = []

    def branches(self):
        return [(1.0, exploit_arm(self.prior, self.history), None)]

    def commit(self, token, arm, reward):
        self.history.append((arm, float(reward)))


def hidden_exploration(signal, eps: float, explore_fn: Callable, prior: FinitePrior, rng: RngStream) -> int:
    """With probability ``eps`` follow ``explore_fn(signal)``; otherwise exploit."""
    if rng.random() < eps:
        return explore_fn(signal)
    return exploit_arm(prior, signal)


EXPLORE = "explore"
EXPLOIT = "exploit"
WARMUP = "warmup"


class RepeatedHiddenExploration(BranchingAgent):
    """``N0`` forced arm-1 rounds, then hidden exploration every round.

    The signal is the history of exploration rounds only (warm-up rounds
    included); only the exploration branch advances the inner agent.
    """

    def __init__(self, prior: FinitePrior, params: BicParams, inner: BranchingAgent):
        self.prior = prior
        self.params = params
        self.inner = inner
        self.t = 0
        self.signal: list[tuple[int, float]] = []
        self.log: list[tuple[int, str, int]] = []  # (round, branch, arm)

    def branches(self):
        if self.t < self.params.N0:
            return [(1.0, ARM1, (WARMUP, None))]
        out = []
        eps = self.params.eps
        if eps > 0:
            for p, arm, tok in self.inner.branches():
                out.append((eps * p, arm, (EXPLORE, tok)))
        if eps < 1:
            out.append((1.0 - eps, exploit_arm(self.prior, self.signal), (EXPLOIT, None)))
        return out

    def commit(self, token, arm, reward):
        self.t += 1
        kind, inner_tok = token
        self.log.append((self.t, kind, arm))
        if kind == WARMUP:
            self.signal.append((arm, float(reward)))
        elif kind == EXPLORE:
            self.signal.append((arm, float(reward)))
            self.inner.commit(inner_tok, arm, reward)


def repeated_hidden_exploration(prior, params: BicParams, inner: BranchingAgent) -> RepeatedHiddenExploration:
    return RepeatedHiddenExploration(prior, params, inner)


# ---------------------------------------------------------------------------
# Exact BIC verification
# ---------------------------------------------------------------------------


@dataclass
class BicReport:
    passed: bool
    worst_margin: float
    worst: Optional[tuple[int, int]]  # (round, arm)
    margins: dict = field(default_factory=dict)  # (round, arm) -> E[mu_a - mu_other | rec = a]
    rec_probs: dict = field(default_factory=dict)  # (round, arm) -> P[rec_t = a]
    symmetry_ok: bool = True
    paths: int = 0


def bic_verify(agent_factory: Callable[[], BranchingAgent], prior: FinitePrior, T: int,
               cap: int = 2_000_000, tol: float = 1e-12) -> BicReport:
    """Enumerate every prior point, reward realization and recommendation
    branch; check ``E[mu_a - mu_other | rec_t = a] >= 0`` for every round and
    every arm recommended with positive probability."""
    num: dict = {}
    den: dict = {}
    count = [0]

    def walk(agent, mu, prob, t):
        if t > T or prob == 0.0:
            return
        for q, arm, tok in agent.branches():
            if q <= 0.0:
                continue
            w = prob * q
            key = (t, arm)
            num.setdefault(key, []).append(w * (mu[arm] - mu[1 - arm]))
            den.setdefault(key, []).append(w)
            if t == T:
                continue
            for r in (0.0, 1.0):
                pr = mu[arm] if r == 1.0 else 1.0 - mu[arm]
                if pr <= 0.0:
                    continue
                count[0] += 1
                if count[0] > cap:
                    raise ResourceLimitError(f"BIC enumeration exceeded {cap} paths")
                child = copy.deepcopy(agent)
                child.commit(tok, arm, r)
                walk(child, mu, w * pr, t + 1)

    for mu, p in zip(prior.support, prior.probs):
        if p > 0:
            walk(agent_factory(), mu, p, 1)

    margins, rec_probs = {}, {}
    for key in sorted(den):
        d = math.fsum(den[key])
        if d <= 0.0:
            continue
        rec_probs[key] = d
        margins[key] = math.fsum(num[key]) / d
    worst = min(margins, key=lambda k: (margins[k], k)) if margins else None
    worst_margin = margins[worst] if worst is not None else 0.0
    symmetry_ok = True
    for t in range(1, T + 1):
        both = (t, ARM1) in margins and (t, ARM2) in margins
        if both and margins[(t, ARM2)] >= -tol and margins[(t, ARM1)] < -tol:
            symmetry_ok = False
    return BicReport(worst_margin >= -tol, worst_margin, worst, margins, rec_probs, symmetry_ok, count[0])


def never_plays_arm2_rate(prior: FinitePrior, T: int, seeds: Sequence[int]) -> tuple[float, float]:
    """Fraction of Bayesian-greedy runs that never recommend arm 2, with its
    standard error."""
    hits = []
    for s in seeds:
        rng = RngStream(s)
        mu = prior.sample(rng.child("prior"))
        env_rng = rng.child("env")
        agent = BayesianGreedy(prior)
        never = 1
        for _ in range(T):
            a = exploit_arm(prior, agent.history)
            if a == ARM2:
                never = 0
                break
            agent.commit(None, a, float(env_rng.random() < mu[a]))
        hits.append(never)
    n = len(hits)
    rate = sum(hits) / n
    se = math.sqrt(rate * (1.0 - rate) / n) if n > 1 else 0.0
    return rate, se
