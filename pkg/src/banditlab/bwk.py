"""Bandits with Knapsacks: LP relaxation, LagrangeBwK, UCB-BwK, example instances.

An outcome row is ``(reward, c_1, ..., c_d)``. After :func:`rescale_budgets`
every resource has the same budget ``B`` and the last column is time, which
every arm consumes at rate ``B/T``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .adversarial import EXP3, Hedge, hedge_eps
from .concentration import hoeffding_radius
from .core import OUTCOME, Agent, Environment, OutcomeRow, Step
from .errors import BanditLabError, DataError, DomainError

LP_TOL = 1e-9


@dataclass(frozen=True)
class BwKInstance:
    """Finite-support outcome distribution per arm, budgets and horizon.

    ``arms[a]`` is a list of ``(prob, row)`` pairs.
    """

    arms: tuple
    budgets: tuple
    T: int
    null_arm: int
    names: tuple = ()
    has_time: bool = False

    def __post_init__(self):
        d = len(self.budgets)
        if not self.arms:
            raise DomainError("instance needs arms")
        for dist in self.arms:
            if abs(math.fsum(p for p, _ in dist) - 1.0) > 1e-9 or min(p for p, _ in dist) < 0:
                raise DomainError("each arm's outcome probabilities must sum to 1")
            for _, row in dist:
                if len(row) != d + 1:
                    raise DomainError(f"outcome rows need 1 + {d} entries")
                if any(not 0.0 <= x <= 1.0 for x in row):
                    raise DomainError("outcome entries must lie in [0, 1]")
        if any(not 0 < b <= self.T for b in self.budgets):
            raise DomainError("budgets must lie in (0, T]")
        if not 0 <= self.null_arm < len(self.arms):
            raise DomainError("instance needs a null arm")
        null = self.expected()[self.null_arm]
        cons = null[1:-1] if self.has_time else null[1:]
        if null[0] != 0.0 or any(c != 0.0 for c in cons):
            raise DomainError("null arm must have zero reward and zero resource consumption")

    @property
    def K(self) -> int:
        return len(self.arms)

    @property
    def d(self) -> int:
        return len(self.budgets)

    @property
    def B(self) -> float:
        return min(self.budgets)

    def expected(self) -> np.ndarray:
        """Expected outcome matrix, ``K x (d + 1)``."""
        return np.array([np.sum([p * np.asarray(row, dtype=float) for p, row in dist], axis=0)
                         for dist in self.arms])


def deterministic_instance(rows: Sequence[Sequence[float]], budgets: Sequence[float], T: int,
                           null_arm: Optional[int] = None) -> BwKInstance:
    rows = [tuple(map(float, r)) for r in rows]
    if null_arm is None:
        rows.append((0.0,) * (len(budgets) + 1))
        null_arm = len(rows) - 1
    return BwKInstance(tuple(((1.0, r),) for r in rows), tuple(map(float, budgets)), T, null_arm)


def rescale_budgets(inst: BwKInstance) -> BwKInstance:
    """Common budget ``B = min B_i`` plus a time resource consuming ``B/T`` per round."""
    if inst.has_time:
        return inst
    B = inst.B
    scale = [B / b for b in inst.budgets]
    tau = B / inst.T
    arms = tuple(tuple((p, (row[0],) + tuple(c * s for c, s in zip(row[1:], scale)) + (tau,))
                       for p, row in dist) for dist in inst.arms)
    return BwKInstance(arms, (B,) * (inst.d + 1), inst.T, inst.null_arm, inst.names, True)


# ---------------------------------------------------------------------------
# LP relaxation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpSolution:
    D: tuple
    value: float
    binding: frozenset
    support: tuple


def solve_bwk_lp(matrix, B: float, T: int, budgets: Optional[Sequence[float]] = None) -> LpSolution:
    """Maximize ``r(D)`` over distributions ``D`` with ``T c_i(D) <= B_i``.

    Exact at desk scale: enumerates every support of size at most ``d + 1``
    with every choice of tight resources, solves the square system and keeps
    the best feasible point (ties to the lexicographically smallest support).
    """
    M = np.asarray(matrix, dtype=float)
    K, cols = M.shape
    d = cols - 1
    if K > 12 or d > 5:
        raise DomainError("exact LP supports K <= 12 arms and d <= 5 resources")
    r = M[:, 0]
    C = M[:, 1:]
    caps = np.full(d, B / T) if budgets is None else np.asarray(budgets, dtype=float) / T
    best = None
    for s in range(1, min(K, d + 1) + 1):
        for S in itertools.combinations(range(K), s):
            for tight in itertools.combinations(range(d), s - 1):
                A = np.ones((s, s))
                rhs = np.ones(s)
                for k, i in enumerate(tight):
                    A[k + 1] = C[list(S), i]
                    rhs[k + 1] = caps[i]
                try:
                    x = np.linalg.solve(A, rhs)
                except np.linalg.LinAlgError:
                    continue
                if not np.allclose(A @ x, rhs, atol=1e-10) or (x < -1e-12).any():
                    continue
                x = np.clip(x, 0.0, None)
                x = x / x.sum()
                D = np.zeros(K)
                D[list(S)] = x
                if (C.T @ D > caps + LP_TOL).any():
                    continue
                val = float(r @ D)
                if best is None or val > best[0] + 1e-12:
                    best = (val, D, S)
    if best is None:
        raise BanditLabError("LP infeasible: the instance lacks a usable null arm")
    val, D, S = best
    load = C.T @ D
    binding = frozenset(i for i in range(d) if load[i] >= caps[i] - LP_TOL)
    return LpSolution(tuple(D.tolist()), val, binding, S)


def lagrange_payoff(matrix, a: int, i: int, T: float, B: float) -> float:
    """``r(a) + 1 - (T/B) c_i(a)``; ``i`` counts resources from 0."""
    M = np.asarray(matrix, dtype=float)
    return float(M[a, 0] + 1.0 - (T / B) * M[a, 1 + i])


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------


class BwKEnv(Environment):
    """Draws outcome rows; stops the first round any resource's total exceeds its budget.

    The stopping round's reward is not counted (its step value is 0), so the
    episode total is the adjusted total reward.
    """

    feedback_kind = OUTCOME

    def __init__(self, inst: BwKInstance):
        self.inst = inst
        self.n_arms = inst.K
        self._exp = inst.expected()
        self.reset(None)

    def reset(self, rng) -> None:
        self.used = np.zeros(self.inst.d)
        self.stopped_at: Optional[int] = None
        self.raw_reward = 0.0

    def step(self, t, arm, rng):
        dist = self.inst.arms[arm]
        row = dist[rng.sample_index([p for p, _ in dist])][1] if len(dist) > 1 else dist[0][1]
        self.used = self.used + np.asarray(row[1:])
        budgets = np.asarray(self.inst.budgets)
        stop = bool((self.used > budgets * (1.0 + 1e-12)).any())
        self.raw_reward += row[0]
        if stop:
            self.stopped_at = t
        value = 0.0 if stop else float(row[0])
        return Step(OutcomeRow(float(row[0]), tuple(float(c) for c in row[1:])), value, None, stop)

    def expected_values(self, context=None):
        return self._exp[:, 0].tolist()


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


def primal_gamma(K: int, T: int) -> float:
    return min(0.5, math.sqrt(K * math.log(K) / T)) if K > 1 else 0.0


class LagrangeBwK(Agent):
    """Repeated Lagrange game: EXP3 picks arms, Hedge picks resources.

    Payoffs ``L(a, i) = r + 1 - (T/B) c_i`` lie in ``[1 - T/B, 2]`` and are
    mapped affinely to [0, 1] before reaching either player.
    """

    accepts = frozenset({OUTCOME})

    def __init__(self, inst: BwKInstance, gamma: Optional[float] = None):
        inst = rescale_budgets(inst)
        self.inst = inst
        self.n_arms = inst.K
        self.ratio = inst.T / inst.B
        self.lo = 1.0 - self.ratio
        self.span = 2.0 - self.lo
        K, T = inst.K, inst.T
        g = primal_gamma(K, T) if gamma is None else gamma
        g = min(g, 0.49)
        # classic EXP3 coupling of learning rate to exploration: eps = gamma / K
        self.primal = EXP3(K, g, min(0.49, g / K) if g > 0 else hedge_eps(K, T))
        self.dual = Hedge(inst.d, hedge_eps(inst.d, T))
        self.last_dual_costs: Optional[np.ndarray] = None
        self._i: Optional[int] = None

    def scale(self, L):
        return (np.asarray(L, dtype=float) - self.lo) / self.span

    def act(self, rng, context=None):
        self._i = self.dual.act(rng)
        return self.primal.act(rng)

    def payoffs(self, row: OutcomeRow) -> np.ndarray:
        """``L_t(a_t, i)`` for every resource ``i``."""
        return row.reward + 1.0 - self.ratio * np.asarray(row.consumption)

    def observe(self, arm, feedback: OutcomeRow):
        L = self.payoffs(feedback)
        scaled = self.scale(L)
        self.primal.update_cost(arm, 1.0 - float(scaled[self._i]))
        self.last_dual_costs = scaled
        self.dual.update(scaled)


def lagrange_bwk(inst: BwKInstance, gamma: Optional[float] = None) -> LagrangeBwK:
    return LagrangeBwK(inst, gamma)


def ucb_bwk_eps(K: int, B: float) -> float:
    return min(max(math.sqrt(K / B), 0.0), 0.5)


class UCBBwK(Agent):
    """Optimistic LP each round: UCB rewards, LCB consumptions, shrunk budget.

    The time resource is left out of the optimistic LP: with budget
    ``B(1 - eps)`` its exact consumption would make every distribution infeasible.
    """

    accepts = frozenset({OUTCOME})

    def __init__(self, inst: BwKInstance):
        inst = rescale_budgets(inst)
        self.inst = inst
        self.n_arms = K = inst.K
        self.T = inst.T
        self.eps = ucb_bwk_eps(K, inst.B)
        self.B_shrunk = inst.B * (1.0 - self.eps)
        self.n = np.zeros(K)
        self.sums = np.zeros((K, inst.d + 1))
        self.t = 0
        self.last_D: Optional[tuple] = None

    def bounds(self) -> np.ndarray:
        """Optimistic matrix without the time column."""
        K = self.n_arms
        means = self.sums / self.n[:, None]
        rad = np.array([hoeffding_radius(int(self.n[a]), max(self.T, 2)) for a in range(K)])
        out = np.empty((K, self.inst.d))
        out[:, 0] = np.minimum(1.0, means[:, 0] + rad)
        out[:, 1:] = np.maximum(0.0, means[:, 1:-1] - rad[:, None])
        return out

    def act(self, rng, context=None):
        self.t += 1
        if self.t <= self.n_arms:
            return self.t - 1
        sol = solve_bwk_lp(self.bounds(), self.B_shrunk, self.T)
        self.last_D = sol.D
        return rng.sample_index(sol.D)

    def observe(self, arm, feedback: OutcomeRow):
        self.n[arm] += 1
        self.sums[arm] += (feedback.reward,) + tuple(feedback.consumption)


def ucb_bwk(inst: BwKInstance) -> UCBBwK:
    return UCBBwK(inst)


# ---------------------------------------------------------------------------
# Example instances
# ---------------------------------------------------------------------------


def _with_null(arms: list, names: list, d: int) -> tuple[list, list, int]:
    zero = (0.0,) * (d + 1)
    for a, dist in enumerate(arms):
        if all(tuple(row) == zero for p, row in dist if p > 0):
            return arms, names, a
    return arms + [((1.0, zero),)], names + ["null"], len(arms)


def _finite(values, probs):
    values = [float(v) for v in values]
    probs = [float(p) for p in probs]
    if len(values) != len(probs) or abs(math.fsum(probs) - 1.0) > 1e-9:
        raise DomainError("value distribution must be a probability vector over values")
    return values, probs


def sale_prob(p: float, values, probs) -> float:
    return math.fsum(q for v, q in zip(values, probs) if v >= p)


def pricing_env(prices: Sequence[float], values, probs, B: float, T: int) -> BwKInstance:
    """Posted prices to buyers with private values; one item sold per acceptance."""
    values, probs = _finite(values, probs)
    arms, names = [], []
    for p in prices:
        s = sale_prob(p, values, probs)
        dist = tuple((q, row) for q, row in ((s, (float(p), 1.0)), (1.0 - s, (0.0, 0.0))) if q > 0)
        arms.append(dist)
        names.append(f"price={p}")
    arms, names, null = _with_null(arms, names, 1)
    return BwKInstance(tuple(arms), (float(B),), T, null, tuple(names))


def procurement_env(prices: Sequence[float], values, probs, B: float, T: int) -> BwKInstance:
    """Posted prices to sellers with private costs; the budget is money."""
    values, probs = _finite(values, probs)
    arms, names = [], []
    for p in prices:
        s = math.fsum(q for v, q in zip(values, probs) if p >= v)
        dist = tuple((q, row) for q, row in ((s, (1.0, float(p))), (1.0 - s, (0.0, 0.0))) if q > 0)
        arms.append(dist)
        names.append(f"price={p}")
    arms, names, null = _with_null(arms, names, 1)
    return BwKInstance(tuple(arms), (float(B),), T, null, tuple(names))


def ppc_env(click_probs: Sequence[float], rewards: Sequence[float], budgets: Sequence[float],
            T: int) -> BwKInstance:
    """Pay-per-click ads: ad ``a`` earns and spends ``rewards[a]`` of advertiser ``a``'s budget per click."""
    K = len(click_probs)
    if len(rewards) != K or len(budgets) != K:
        raise DomainError("need one reward and one budget per ad")
    arms, names = [], []
    for a, (c, r) in enumerate(zip(click_probs, rewards)):
        hit = (float(r),) + tuple(float(r) if k == a else 0.0 for k in range(K))
        miss = (0.0,) * (K + 1)
        arms.append(tuple((q, row) for q, row in ((c, hit), (1.0 - c, miss)) if q > 0))
        names.append(f"ad{a}")
    arms, names, null = _with_null(arms, names, K)
    return BwKInstance(tuple(arms), tuple(map(float, budgets)), T, null, tuple(names))


def two_resource_instance(B: int) -> BwKInstance:
    """Both arms pay 1; arm ``i`` uses one unit of resource ``i``; ``T = 2B``."""
    return deterministic_instance([(1.0, 1.0, 0.0), (1.0, 0.0, 1.0)], (B, B), 2 * B)


def lp_benchmark(inst: BwKInstance) -> float:
    """``T * OPT_LP`` on the rescaled instance."""
    r = rescale_budgets(inst)
    return r.T * solve_bwk_lp(r.expected(), r.B, r.T).value


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------


def parse_instance(text: str) -> BwKInstance:
    """Line format::

        horizon <T>
        budgets <B_1> ... <B_d>
        arm <name>
        outcome <prob> <reward> <c_1> ... <c_d>

    Outcome lines attach to the latest ``arm``. An arm named ``null`` (or the
    first all-zero arm) is the null arm; one is added if absent.
    """
    T = None
    budgets = None
    arms: list = []
    names: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        f = line.split()
        try:
            if f[0] == "horizon" and len(f) == 2:
                T = int(f[1])
            elif f[0] == "budgets" and len(f) >= 2:
                budgets = tuple(float(x) for x in f[1:])
            elif f[0] == "arm" and len(f) == 2:
                names.append(f[1])
                arms.append([])
            elif f[0] == "outcome" and arms:
                vals = [float(x) for x in f[1:]]
                arms[-1].append((vals[0], tuple(vals[1:])))
            else:
                raise ValueError
        except ValueError:
            raise DataError(f"line {lineno}: cannot parse {raw!r}") from None
    if T is None or budgets is None or not arms:
        raise DataError("instance needs horizon, budgets and at least one arm")
    arms = [tuple(a) for a in arms]
    if "null" in names:
        null = names.index("null")
    else:
        arms, names, null = _with_null(arms, names, len(budgets))
    return BwKInstance(tuple(arms), budgets, T, null, tuple(names))


def load_instance(path) -> BwKInstance:
    return parse_instance(Path(path).read_text())


def format_instance(inst: BwKInstance) -> str:
    lines = [f"horizon {inst.T}", "budgets " + " ".join(repr(b) for b in inst.budgets)]
    names = inst.names or tuple(f"a{k}" for k in range(inst.K))
    for k, (name, dist) in enumerate(zip(names, inst.arms)):
        lines.append(f"arm {'null' if k == inst.null_arm else name}")
        for p, row in dist:
            lines.append("outcome " + " ".join(repr(float(x)) for x in (p,) + tuple(row)))
    return "\n".join(lines) + "\n"
