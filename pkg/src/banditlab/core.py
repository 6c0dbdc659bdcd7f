"""Environment/agent contracts, the episode driver and regret accounting.

Every environment speaks one feedback *kind* and every agent declares the
kinds it accepts; :func:`run_episode` refuses to pair mismatched ones.
Rewards are the canonical objective. Environments whose objective is a cost
report costs unchanged and the sign flip happens only in :class:`RegretReport`.
"""

from __future__ import annotations

import bisect
import hashlib
import math
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

BANDIT = "bandit"
BANDIT_COST = "bandit-cost"
FULL = "full"
SEMI = "semi-bandit"
OUTCOME = "outcome"


# ---------------------------------------------------------------------------
# Feedback variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class BanditReward:
    r: float
    kind = BANDIT


@dataclass(frozen=True, slots=True)
class BanditCost:
    c: float
    kind = BANDIT_COST


@dataclass(frozen=True, slots=True)
class FullCosts:
    c: tuple
    kind = FULL


@dataclass(frozen=True, slots=True)
class SemiBandit:
    atoms: tuple  # ((atom_id, cost), ...)
    kind = SEMI


@dataclass(frozen=True, slots=True)
class OutcomeRow:
    reward: float
    consumption: tuple
    kind = OUTCOME


Feedback = BanditReward | BanditCost | FullCosts | SemiBandit | OutcomeRow


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


class RngStream:
    """Seeded Philox stream addressed by a label path.

    ``RngStream(7).child("env").child("arm-3")`` always yields the same
    draws regardless of what other streams were consumed, so runs do not
    depend on scheduling or on the order in which components draw.
    """

    __slots__ = ("seed", "labels", "_gen")

    def __init__(self, seed: int, labels: tuple[str, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise DomainError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self.labels = tuple(labels)
        self._gen: Optional[np.random.Generator] = None

    def child(self, label: str) -> "RngStream":
        return RngStream(self.seed, self.labels + (str(label),))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            h = hashlib.sha256()
            h.update(self.seed.to_bytes(8, "little"))
            for lab in self.labels:
                h.update(b"\x00")
                h.update(lab.encode("utf-8"))
            digest = h.digest()
            key = [int.from_bytes(digest[i:i + 8], "little") for i in (0, 8)]
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def random(self) -> float:
        return float(self.generator.random())

    def integers(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        return int(self.generator.integers(n))

    def bernoulli(self, p: float) -> int:
        return 1 if self.generator.random() < p else 0

    def uniform(self, lo: float, hi: float, size=None):
        return self.generator.uniform(lo, hi, size)

    def normal(self, mean: float = 0.0, std: float = 1.0):
        return float(self.generator.normal(mean, std))

    def sample_index(self, probs: Sequence[float]) -> int:
        """Inverse-CDF draw from a finite distribution using one uniform."""
        cdf = list(accumulate(probs))
        u = self.generator.random() * cdf[-1]
        i = bisect.bisect_right(cdf, u)
        # guard against u landing on the float tail, and skip zero-mass cells
        i = min(i, len(cdf) - 1)
        while probs[i] <= 0.0 and i > 0:
            i -= 1
        return i


# ---------------------------------------------------------------------------
# History
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Round:
    t: int
    arm: int
    feedback: Any
    context: Any = None


class History:
    """Append-only round log; round numbers start at 1 and increase by 1."""

    def __init__(self, records: Sequence[Round] = ()):
        self._records: list[Round] = []
        for rec in records:
            self.append(rec.arm, rec.feedback, rec.context)

    def append(self, arm: int, feedback, context=None) -> Round:
        rec = Round(len(self._records) + 1, int(arm), feedback, context)
        self._records.append(rec)
        return rec

    @property
    def records(self) -> tuple[Round, ...]:
        return tuple(self._records)

    def arms(self) -> list[int]:
        return [r.arm for r in self._records]

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __getitem__(self, i):
        return self._records[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, History) and self._records == other._records

    def __repr__(self) -> str:
        return f"History({len(self)} rounds)"


def reward_history(pairs: Sequence[tuple[int, float]]) -> History:
    """History of bandit-reward rounds from ``(arm, reward)`` pairs."""
    h = History()
    for a, r in pairs:
        h.append(a, BanditReward(float(r)))
    return h


# ---------------------------------------------------------------------------
# Contracts
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class Step:
    """What an environment returns for one round.

    ``value`` is the accounting quantity in the environment's own objective
    (reward or cost). ``row`` holds the realized value of every arm when the
    environment can reveal it for hindsight accounting.
    """

    feedback: Any
    value: float
    row: Optional[Sequence[float]] = None
    stop: bool = False


class Environment:
    n_arms: int
    feedback_kind: str = BANDIT
    objective: str = "reward"

    def reset(self, rng: RngStream) -> None:
        pass

    def context(self, t: int, rng: RngStream):
        return None

    def step(self, t: int, arm: int, rng: RngStream) -> Step:
        raise NotImplementedError

    def expected_values(self, context=None) -> Optional[Sequence[float]]:
        """Per-arm expected value (same objective as ``Step.value``), if known."""
        return None


class Agent:
    n_arms: int
    accepts: frozenset = frozenset({BANDIT})

    def act(self, rng: RngStream, context=None) -> int:
        raise NotImplementedError

    def observe(self, arm: int, feedback) -> None:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Regret accounting
# ---------------------------------------------------------------------------


def best_fixed_hindsight(table, objective: str = "reward") -> tuple[int, float]:
    """Best fixed arm for a T x K table of realized rewards (or costs).

    Ties go to the lowest index.
    """
    arr = np.asarray(table, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DomainError("table must be a non-empty T x K matrix")
    cols = [math.fsum(arr[:, k]) for k in range(arr.shape[1])]
    pick = max if objective == "reward" else min
    best = pick(cols)
    k = cols.index(best)
    return k, best


def pseudo_regret(means: Sequence[float], arms: Sequence[int]) -> float:
    """``mu* T - sum_t mu(a_t)``, summed gap by gap."""
    means = [float(m) for m in means]
    if any(not 0.0 <= m <= 1.0 for m in means):
        raise DomainError("means must lie in [0, 1]")
    K = len(means)
    top = max(means)
    total = []
    for a in arms:
        if not 0 <= a < K:
            raise DomainError(f"arm {a} out of range for K={K}")
        total.append(top - means[a])
    return math.fsum(total)


@dataclass
class RegretReport:
    total_reward: float
    best_fixed_hindsight: Optional[float]
    regret: Optional[float]
    best_foresight: Optional[float] = None
    pseudo_regret: Optional[float] = None
    gaps: Optional[tuple[float, ...]] = None
    rounds: int = 0
    regret_curve: list = field(default_factory=list, repr=False)


def regret_report(values: Sequence[float], rows: Optional[Sequence[Sequence[float]]],
                  expected: Optional[Sequence[Sequence[float]]], arms: Sequence[int],
                  objective: str = "reward") -> RegretReport:
    """Assemble a report from a raw trace.

    ``expected`` holds, per round, the expected value of every arm (None when
    unknown). Costs are negated here and nowhere else.
    """
    sign = 1.0 if objective == "reward" else -1.0
    total = sign * math.fsum(values)
    hind = None
    regret = None
    curve: list[Optional[float]] = []
    if rows is not None and len(rows) > 0:
        _, best = best_fixed_hindsight(rows, objective)
        hind = sign * best
        regret = hind - total
        # per-round hindsight regret, the anytime report
        cum = np.cumsum(np.asarray(rows, dtype=float), axis=0)
        run_val = np.cumsum(np.asarray(values, dtype=float))
        bench = cum.max(axis=1) if objective == "reward" else cum.min(axis=1)
        curve = list(sign * (bench - run_val))
    foresight = None
    pseudo = None
    gaps = None
    if expected is not None and len(expected) > 0 and all(e is not None for e in expected):
        per_round = []
        best_sum = []
        for e, a in zip(expected, arms):
            e = [sign * x for x in e]
            top = max(e)
            best_sum.append(top)
            per_round.append(top - e[a])
        pseudo = math.fsum(per_round)
        foresight = math.fsum(best_sum)
        first = [sign * x for x in expected[0]]
        if all(list(e) == list(expected[0]) for e in expected):
            top = max(first)
            gaps = tuple(top - x for x in first)
    return RegretReport(total_reward=total, best_fixed_hindsight=hind, regret=regret,
                        best_foresight=foresight, pseudo_regret=pseudo, gaps=gaps,
                        rounds=len(values), regret_curve=curve)


# ---------------------------------------------------------------------------
# Episode driver
# ---------------------------------------------------------------------------


@dataclass
class Trace:
    """Raw per-round data kept alongside the history."""

    values: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    expected: list = field(default_factory=list)


def check_pairing(env: Environment, agent: Agent) -> None:
    if getattr(agent, "n_arms", env.n_arms) != env.n_arms:
        raise ConfigurationError(
            f"agent has {agent.n_arms} arms but environment has {env.n_arms}")
    if env.feedback_kind not in agent.accepts:
        raise ConfigurationError(
            f"environment emits {env.feedback_kind!r} feedback; agent accepts "
            f"{sorted(agent.accepts)}")


def run_episode(env: Environment, agent: Agent, T: int, rng: RngStream,
                trace: Optional[Trace] = None) -> tuple[History, RegretReport]:
    """Play ``T`` rounds (fewer if the environment signals a stop)."""
    if T < 1:
        raise DomainError("T must be at least 1")
    check_pairing(env, agent)
    env_rng = rng.child("env")
    agent_rng = rng.child("agent")
    env.reset(env_rng)
    history = History()
    trace = trace if trace is not None else Trace()
    K = env.n_arms
    for t in range(1, T + 1):
        ctx = env.context(t, env_rng)
        arm = agent.act(agent_rng, ctx)
        if not 0 <= arm < K:
            raise ConfigurationError(f"agent chose arm {arm} outside [0, {K})")
        step = env.step(t, arm, env_rng)
        history.append(arm, step.feedback, ctx)
        agent.observe(arm, step.feedback)
        trace.values.append(step.value)
        trace.rows.append(step.row)
        trace.expected.append(env.expected_values(ctx))
        if step.stop:
            break
    rows = trace.rows if all(r is not None for r in trace.rows) else None
    report = regret_report(trace.values, rows, trace.expected, history.arms(), env.objective)
    return history, report


# ---------------------------------------------------------------------------
# Doubling trick
# ---------------------------------------------------------------------------


def doubling_phase(t: int) -> tuple[int, int, int]:
    """``(phase, first_round, horizon)`` for round ``t``.

    Phase ``k`` covers rounds ``2**(k-1) .. 2**k - 1`` and hands its inner
    agent the horizon ``2**(k-1)``.
    """
    if t < 1:
        raise DomainError("rounds start at 1")
    k = t.bit_length()
    start = 1 << (k - 1)
    return k, start, start


class DoublingAgent(Agent):
    """Anytime wrapper: restart a fresh inner agent at every phase boundary.

    Each phase draws from its own substream ``phase-<k>`` so a phase replays
    exactly what a fresh inner agent would do on that stream.
    """

    def __init__(self, factory: Callable[[int], Agent]):
        self.factory = factory
        probe = factory(1)
        self.n_arms = probe.n_arms
        self.accepts = probe.accepts
        self.t = 0
        self.phase = 0
        self.inner: Optional[Agent] = None
        self._phase_rng: Optional[RngStream] = None
        self.horizons: list[int] = []

    def act(self, rng: RngStream, context=None) -> int:
        self.t += 1
        k, _, horizon = doubling_phase(self.t)
        if k != self.phase:
            self.phase = k
            self.inner = self.factory(horizon)
            self.horizons.append(horizon)
            self._phase_rng = rng.child(f"phase-{k}")
        return self.inner.act(self._phase_rng, context)

    def observe(self, arm: int, feedback) -> None:
        self.inner.observe(arm, feedback)


def doubling_wrap(factory: Callable[[int], Agent]) -> DoublingAgent:
    return DoublingAgent(factory)


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the maximum, ties to the lowest index."""
    best = 0
    bv = values[0]
    for i in range(1, len(values)):
        v = values[i]
        if v > bv:
            best, bv = i, v
    return best
