"""Contextual bandits: per-context copies, LinUCB, policy classes, IPS, log joins."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np

from .adversarial import EXP4, hedge_eps_second_moment
from .core import BANDIT, Agent, BanditReward, Environment, Step, argmax_lowest
from .errors import DataError, DomainError
from .lipschitz import uniform_mesh


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


class FiniteContextEnv(Environment):
    """Context ``x`` drawn from ``context_probs``; arm ``a`` pays Bernoulli(``means[x][a]``)."""

    feedback_kind = BANDIT

    def __init__(self, means: Sequence[Sequence[float]], context_probs: Optional[Sequence[float]] = None,
                 schedule: Optional[Sequence[int]] = None):
        self.means = [list(map(float, row)) for row in means]
        self.n_arms = len(self.means[0])
        if any(len(row) != self.n_arms for row in self.means):
            raise DomainError("every context needs one mean per arm")
        n = len(self.means)
        self.context_probs = list(context_probs) if context_probs is not None else [1.0 / n] * n
        self.schedule = list(schedule) if schedule is not None else None

    def context(self, t, rng):
        if self.schedule is not None:
            self._ctx = self.schedule[(t - 1) % len(self.schedule)]
        else:
            self._ctx = rng.sample_index(self.context_probs)
        return self._ctx

    def step(self, t, arm, rng):
        u = rng.generator.random(self.n_arms)
        r = 1.0 if u[arm] < self.means[self._ctx][arm] else 0.0
        return Step(BanditReward(r), r, None)

    def expected_values(self, context=None):
        return self.means[context]


class LipschitzContextEnv(Environment):
    """Context uniform on [0, 1]; arm ``a`` pays Bernoulli(``mean_fn(x, a)``)."""

    feedback_kind = BANDIT

    def __init__(self, mean_fn: Callable[[float, int], float], K: int):
        self.mean_fn = mean_fn
        self.n_arms = K
        self._ctx = 0.0

    def context(self, t, rng):
        self._ctx = rng.random()
        return self._ctx

    def step(self, t, arm, rng):
        r = float(rng.random() < self.mean_fn(self._ctx, arm))
        return Step(BanditReward(r), r, None)

    def expected_values(self, context=None):
        return [self.mean_fn(context, a) for a in range(self.n_arms)]


class LinearContextEnv(Environment):
    """Per-arm feature vectors uniform on [0,1]^d; noiseless reward ``x_a . theta_a``."""

    feedback_kind = BANDIT

    def __init__(self, thetas: Sequence[Sequence[float]]):
        self.thetas = np.asarray(thetas, dtype=float)
        if (self.thetas < 0).any() or (self.thetas.sum(axis=1) > 1.0 + 1e-12).any():
            raise DomainError("each theta must be nonnegative with l1 norm at most 1")
        self.n_arms, self.d = self.thetas.shape
        self._ctx = None

    def context(self, t, rng):
        self._ctx = rng.generator.random((self.n_arms, self.d))
        return self._ctx

    def step(self, t, arm, rng):
        r = float(self._ctx[arm] @ self.thetas[arm])
        return Step(BanditReward(r), r, None)

    def expected_values(self, context=None):
        return [float(context[a] @ self.thetas[a]) for a in range(self.n_arms)]


# ---------------------------------------------------------------------------
# Per-context and discretized agents
# ---------------------------------------------------------------------------


class PerContextAgent(Agent):
    """One lazily created inner agent per observed context."""

    accepts = frozenset({BANDIT})

    def __init__(self, inner_factory: Callable[[], Agent], key: Callable = lambda x: x):
        self.inner_factory = inner_factory
        self.key = key
        self.copies: dict = {}
        self.rounds: dict = {}
        self._last = None
        probe = inner_factory()
        self.n_arms = probe.n_arms

    def act(self, rng, context=None):
        k = self.key(context)
        if k not in self.copies:
            self.copies[k] = self.inner_factory()
            self.rounds[k] = 0
        self._last = k
        self.rounds[k] += 1
        return self.copies[k].act(rng)

    def observe(self, arm, feedback):
        self.copies[self._last].observe(arm, feedback)


def per_context_agent(inner_factory) -> PerContextAgent:
    return PerContextAgent(inner_factory)


def nearest_mesh_point(x: float, mesh: Sequence[float]) -> float:
    """Closest mesh point; ties go to the smaller point."""
    return min(mesh, key=lambda m: (abs(x - m), m))


def lipschitz_context_agent(L: float, eps: Optional[float], inner_factory, T: Optional[int] = None) -> PerContextAgent:
    """Round contexts to an ``eps``-mesh of [0, 1] and run a copy per mesh point.

    Default ``eps = (T L^2 / ln T)^(-1/3)`` needs ``T``.
    """
    if L <= 0:
        raise DomainError("Lipschitz constant must be positive")
    if eps is None:
        if T is None:
            raise DomainError("need eps or T")
        eps = min(1.0, (T * L * L / math.log(T)) ** (-1.0 / 3.0))
    mesh = uniform_mesh(eps)
    agent = PerContextAgent(inner_factory, key=lambda x: nearest_mesh_point(x, mesh))
    agent.mesh = mesh
    return agent


@dataclass(frozen=True)
class Decomposition:
    regret: float
    regret_to_mesh: float
    discretization_error: float


def discretization_decomposition(mean_fn, K: int, contexts: Sequence[float], arms: Sequence[int],
                                 mesh: Sequence[float]) -> Decomposition:
    """Expected-reward accounting ``R = R_S + DE`` against all policies vs
    policies constant on each mesh cell."""
    rew = math.fsum(mean_fn(x, a) for x, a in zip(contexts, arms))
    best_all = math.fsum(max(mean_fn(x, a) for a in range(K)) for x in contexts)
    cells: dict = {}
    for x in contexts:
        cells.setdefault(nearest_mesh_point(x, mesh), []).append(x)
    best_mesh = math.fsum(max(math.fsum(mean_fn(x, a) for x in xs) for a in range(K))
                          for xs in cells.values())
    return Decomposition(best_all - rew, best_mesh - rew, best_all - best_mesh)


# ---------------------------------------------------------------------------
# LinUCB
# ---------------------------------------------------------------------------


class LinUCB(Agent):
    """Per-arm ridge regression with ellipsoidal confidence bonus ``beta * ||x||_{A^-1}``."""

    accepts = frozenset({BANDIT})

    def __init__(self, K: int, d: int, beta: Optional[float] = None, T: Optional[int] = None):
        if beta is None:
            if T is None:
                raise DomainError("need beta or T")
            beta = math.sqrt(d * math.log(max(T, 2)))
        self.n_arms = K
        self.d = d
        self.beta = beta
        self.A = [np.eye(d) for _ in range(K)]
        self.b = [np.zeros(d) for _ in range(K)]
        self._x = None

    def theta(self, a: int) -> np.ndarray:
        return np.linalg.solve(self.A[a], self.b[a])

    def ucb(self, a: int, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DomainError(f"context vector must have length {self.d}")
        width = math.sqrt(float(x @ np.linalg.solve(self.A[a], x)))
        return float(x @ self.theta(a)) + self.beta * width

    def act(self, rng, context=None):
        X = np.asarray(context, dtype=float)
        if X.shape != (self.n_arms, self.d):
            raise DomainError(f"expected a {self.n_arms} x {self.d} context matrix")
        self._x = X
        return argmax_lowest([self.ucb(a, X[a]) for a in range(self.n_arms)])

    def observe(self, arm, feedback):
        x = self._x[arm]
        self.A[arm] += np.outer(x, x)
        self.b[arm] += feedback.r * x


def linucb(K: int, d: int, beta: Optional[float] = None, T: Optional[int] = None) -> LinUCB:
    return LinUCB(K, d, beta, T)


# ---------------------------------------------------------------------------
# Policy classes
# ---------------------------------------------------------------------------


class Policy:
    """Explicit context-to-arm table."""

    __slots__ = ("table", "name")

    def __init__(self, table: dict, name: str = ""):
        self.table = dict(table)
        self.name = name

    def __call__(self, x) -> int:
        try:
            return self.table[x]
        except KeyError:
            raise DomainError(f"policy {self.name!r} is undefined on context {x!r}") from None

    def __repr__(self) -> str:
        return f"Policy({self.name or self.table})"


def all_policies(contexts: Sequence, K: int) -> list[Policy]:
    """Every map from ``contexts`` to arms (``K ** len(contexts)`` policies)."""
    out = []
    for code in range(K ** len(contexts)):
        table = {}
        c = code
        for x in contexts:
            table[x] = c % K
            c //= K
        out.append(Policy(table, f"p{code}"))
    return out


def exp4_policies(policies: Sequence[Policy], K: int, gamma: float, eps: float) -> EXP4:
    pols = list(policies)
    return EXP4(K, lambda t, ctx: [p(ctx) for p in pols], gamma, eps, n_experts=len(pols))


def exp4_policies_for_horizon(policies: Sequence[Policy], K: int, T: int) -> EXP4:
    from .adversarial import exp4_gamma

    gamma = exp4_gamma(T, K, len(policies))
    return exp4_policies(policies, K, gamma, hedge_eps_second_moment(max(len(policies), 2), K / gamma, T))


def exact_classification_oracle(points: Sequence[tuple[Hashable, Sequence[float]]],
                                policies: Sequence[Policy]) -> Policy:
    """``argmax_pi sum_t r_t(pi(x_t))``; ties go to the earliest policy."""
    if not points or not policies:
        raise DomainError("oracle needs data points and at least one policy")
    best, bv = None, -math.inf
    for pi in policies:
        v = math.fsum(r[pi(x)] for x, r in points)
        if v > bv:
            best, bv = pi, v
    return best


def ips_fake_rewards(K: int, arm: int, r: float, p: float) -> list[float]:
    """``r / p`` on the chosen arm, 0 elsewhere."""
    if p <= 0:
        raise DomainError("propensity must be positive")
    out = [0.0] * K
    out[arm] = r / p
    return out


def default_ete_n(T: int, K: int, n_policies: int) -> int:
    return max(1, int(T ** (2.0 / 3.0) * (K * math.log(n_policies * T)) ** (1.0 / 3.0)))


class ExploreThenExploit(Agent):
    """Uniform arms for ``N`` rounds, then the oracle's best policy on IPS rewards."""

    accepts = frozenset({BANDIT})

    def __init__(self, K: int, N: int, policies: Sequence[Policy]):
        if N < 1:
            raise DomainError("N must be at least 1")
        self.n_arms = K
        self.N = N
        self.policies = list(policies)
        self.points: list = []
        self.chosen: Optional[Policy] = None
        self.t = 0
        self._x = None

    @classmethod
    def for_horizon(cls, K: int, T: int, policies: Sequence[Policy]) -> "ExploreThenExploit":
        N = default_ete_n(T, K, len(policies))
        if N > T:
            raise DomainError(f"exploration length {N} exceeds horizon {T}")
        return cls(K, N, policies)

    def act(self, rng, context=None):
        self.t += 1
        self._x = context
        if self.t <= self.N:
            return rng.integers(self.n_arms)
        if self.chosen is None:
            self.chosen = exact_classification_oracle(self.points, self.policies)
        return self.chosen(context)

    def observe(self, arm, feedback):
        if self.t <= self.N:
            self.points.append((self._x, ips_fake_rewards(self.n_arms, arm, feedback.r, 1.0 / self.n_arms)))


# ---------------------------------------------------------------------------
# Off-policy evaluation and logs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoggedPoint:
    x: Hashable
    p: float  # propensity of the logged arm
    a: int
    r: float
    missing: bool = False


def ips_estimate(policy: Callable, data: Sequence[LoggedPoint]) -> float:
    """Averaged inverse-propensity estimate of the policy's mean reward."""
    if not data:
        raise DomainError("no logged data")
    terms = []
    for pt in data:
        if pt.p <= 0:
            raise DomainError("zero propensity in logged data")
        if policy(pt.x) == pt.a:
            terms.append(pt.r / pt.p)
    return math.fsum(terms) / len(data)


def policy_value(policy: Callable, means: Sequence[Sequence[float]], context_probs: Sequence[float]) -> float:
    return math.fsum(q * means[x][policy(x)] for x, q in enumerate(context_probs))


def log_uniform(env: FiniteContextEnv, N: int, rng) -> list[LoggedPoint]:
    """Collect ``N`` points with a uniformly random logging policy."""
    out = []
    K = env.n_arms
    for t in range(1, N + 1):
        x = env.context(t, rng)
        a = rng.integers(K)
        r = env.step(t, a, rng).value
        out.append(LoggedPoint(x, 1.0 / K, a, r))
    return out


@dataclass(frozen=True)
class DecisionTuple:
    tuple_id: str
    x: str
    a: int
    p: float


@dataclass(frozen=True)
class OutcomeTuple:
    tuple_id: str
    r: float


def join_logs(decisions: Iterable[DecisionTuple], outcomes: Iterable[OutcomeTuple]) -> list[LoggedPoint]:
    """Attach each decision's outcome; decisions with no outcome get reward 0
    and ``missing=True``."""
    rewards: dict = {}
    for o in outcomes:
        if o.tuple_id in rewards:
            raise DataError(f"duplicate outcome for tuple {o.tuple_id!r}")
        rewards[o.tuple_id] = o.r
    out = []
    seen = set()
    for d in decisions:
        if d.tuple_id in seen:
            raise DataError(f"duplicate decision tuple {d.tuple_id!r}")
        seen.add(d.tuple_id)
        if d.tuple_id in rewards:
            out.append(LoggedPoint(d.x, d.p, d.a, rewards[d.tuple_id]))
        else:
            out.append(LoggedPoint(d.x, d.p, d.a, 0.0, missing=True))
    return out


def parse_logs(text: str) -> tuple[list[DecisionTuple], list[OutcomeTuple]]:
    """Tab-separated ``D id ctx arm prop`` and ``O id reward`` lines."""
    decisions, outcomes = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        f = raw.rstrip("\n").split("\t")
        try:
            if f[0] == "D" and len(f) == 5:
                p = float(f[4])
                if not 0.0 < p <= 1.0:
                    raise DataError(f"line {lineno}: propensity {p} outside (0, 1]")
                decisions.append(DecisionTuple(f[1], f[2], int(f[3]), p))
            elif f[0] == "O" and len(f) == 3:
                outcomes.append(OutcomeTuple(f[1], float(f[2])))
            else:
                raise ValueError
        except ValueError:
            raise DataError(f"line {lineno}: malformed log record {raw!r}") from None
    return decisions, outcomes


def format_joined(points: Sequence[LoggedPoint]) -> str:
    return "".join(f"J\t{p.x}\t{p.a}\t{p.p!r}\t{p.r!r}\n" for p in points)


def join_log_file(path) -> list[LoggedPoint]:
    d, o = parse_logs(Path(path).read_text())
    return join_logs(d, o)
