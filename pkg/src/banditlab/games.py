"""Repeated zero-sum games between regret minimizers; equilibrium checks.

``M[i, j]`` is the row player's cost and the column player's reward.
Agents see costs rescaled to [0, 1]; every reported quantity is on the
original scale of ``M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .adversarial import Hedge
from .core import BANDIT_COST, FULL, BanditCost, FullCosts, RngStream
from .errors import ConfigurationError, DataError, DomainError

REALIZED = "full"
BANDIT = "bandit"
EXPECTED = "expected"


class GameMatrix:
    def __init__(self, M):
        self.M = np.asarray(M, dtype=float)
        if self.M.ndim != 2 or self.M.size == 0 or not np.isfinite(self.M).all():
            raise DomainError("game matrix must be a finite nonempty 2-D array")
        self.lo = float(self.M.min())
        self.hi = float(self.M.max())

    @property
    def shape(self) -> tuple[int, int]:
        return self.M.shape

    @property
    def span(self) -> float:
        return self.hi - self.lo if self.hi > self.lo else 1.0

    def row_costs(self, M=None):
        """Row player's costs rescaled to [0, 1]."""
        return ((self.M if M is None else M) - self.lo) / self.span

    def col_costs(self, M=None):
        """Column player's costs (negated rewards) rescaled to [0, 1]."""
        return (self.hi - (self.M if M is None else M)) / self.span


def _as_game(M) -> GameMatrix:
    return M if isinstance(M, GameMatrix) else GameMatrix(M)


def f_value(M, p) -> float:
    """``max_j M(p, j)``: the row strategy's worst case."""
    return float((np.asarray(p) @ _as_game(M).M).max())


def h_value(M, q) -> float:
    """``min_i M(i, q)``: the column strategy's guarantee."""
    return float((_as_game(M).M @ np.asarray(q)).min())


@dataclass
class EquilibriumReport:
    p_bar: np.ndarray
    q_bar: np.ndarray
    value_estimate: float
    duality_gap: float
    certified_eps: float
    rounds: int = 0
    converged: bool = True


def equilibrium_report(M, p_bar, q_bar, rounds: int = 0) -> EquilibriumReport:
    f = f_value(M, p_bar)
    h = h_value(M, q_bar)
    gap = f - h
    return EquilibriumReport(np.asarray(p_bar), np.asarray(q_bar), 0.5 * (f + h), gap, max(gap, 0.0), rounds)


@dataclass
class GameTrace:
    rows: list = field(default_factory=list)
    cols: list = field(default_factory=list)
    costs: list = field(default_factory=list)  # realized M_t(i_t, j_t)
    p: list = field(default_factory=list)
    q: list = field(default_factory=list)
    matrices: list = field(default_factory=list)

    def average_cost(self) -> float:
        return math.fsum(self.costs) / len(self.costs)


def _distribution(agent) -> Optional[np.ndarray]:
    if hasattr(agent, "arm_probs"):
        return np.asarray(agent.arm_probs())
    if hasattr(agent, "distribution"):
        return np.asarray(agent.distribution())
    return None


class BestResponseAdversary:
    """Column player answering the row player's current mixed strategy."""

    wants_row_distribution = True
    accepts = frozenset({FULL, BANDIT_COST})

    def __init__(self, M):
        self.game = _as_game(M)
        self.n_arms = self.game.shape[1]
        self._p: Optional[np.ndarray] = None

    def set_row_distribution(self, p) -> None:
        self._p = np.asarray(p, dtype=float)

    def expected_rewards(self) -> np.ndarray:
        return self._p @ self.game.M

    def act(self, rng=None, context=None) -> int:
        if self._p is None:
            raise ConfigurationError("best-response adversary needs the row distribution each round")
        v = self.expected_rewards()
        j = int(np.flatnonzero(v == v.max())[0])
        self._p = None
        return j

    def observe(self, arm, feedback) -> None:
        pass


def best_response_adversary(M) -> BestResponseAdversary:
    return BestResponseAdversary(M)


def repeated_game(row_agent, col_agent, M, T: int, rng: RngStream, feedback: str = REALIZED,
                  matrices: Optional[Sequence] = None) -> tuple[GameTrace, EquilibriumReport]:
    """Simultaneous-move repeated game.

    ``feedback`` is ``"full"`` (each player sees its whole cost vector
    against the opponent's realized action), ``"bandit"`` (each sees only
    its own realized cost) or ``"expected"`` (full vectors against the
    opponent's mixed strategy; deterministic given the agents).

    If ``matrices`` is given, ``M_t`` is drawn uniformly from that list each
    round and the report is computed against ``M`` (their mean).
    """
    game = _as_game(M)
    m, n = game.shape
    if row_agent.n_arms != m or col_agent.n_arms != n:
        raise ConfigurationError(f"agents have {row_agent.n_arms} x {col_agent.n_arms} actions, matrix is {m} x {n}")
    if feedback not in (REALIZED, BANDIT, EXPECTED):
        raise DomainError(f"unknown feedback mode {feedback!r}")
    need = BANDIT_COST if feedback == BANDIT else FULL
    for a in (row_agent, col_agent):
        if need not in getattr(a, "accepts", frozenset({need})):
            raise ConfigurationError(f"agent does not accept {need!r} feedback")
    stoch = [np.asarray(x, dtype=float) for x in matrices] if matrices else None
    # rescale against the range of every matrix that can be drawn
    scale = GameMatrix(np.vstack(stoch + [game.M])) if stoch else game
    row_rng = rng.child("row")
    col_rng = rng.child("col")
    env_rng = rng.child("env")
    trace = GameTrace()
    for _ in range(T):
        p = _distribution(row_agent)
        q_pre = None
        if getattr(col_agent, "wants_row_distribution", False):
            if p is None:
                raise ConfigurationError("row agent exposes no distribution for the best-response adversary")
            col_agent.set_row_distribution(p)
        else:
            q_pre = _distribution(col_agent)
        i = row_agent.act(row_rng)
        j = col_agent.act(col_rng)
        q = q_pre if q_pre is not None else np.eye(n)[j]
        Mt = stoch[env_rng.integers(len(stoch))] if stoch else game.M
        trace.rows.append(i)
        trace.cols.append(j)
        trace.costs.append(float(Mt[i, j]))
        trace.p.append(p if p is not None else np.eye(m)[i])
        trace.q.append(q)
        trace.matrices.append(Mt if stoch else None)
        rc = scale.row_costs(Mt)
        cc = scale.col_costs(Mt)
        if feedback == REALIZED:
            row_agent.observe(i, FullCosts(tuple(rc[:, j].tolist())))
            col_agent.observe(j, FullCosts(tuple(cc[i, :].tolist())))
        elif feedback == BANDIT:
            row_agent.observe(i, BanditCost(float(rc[i, j])))
            col_agent.observe(j, BanditCost(float(cc[i, j])))
        else:
            if p is None or q_pre is None and not getattr(col_agent, "wants_row_distribution", False):
                raise ConfigurationError("expected feedback needs agents that expose distributions")
            row_agent.observe(i, FullCosts(tuple((rc @ q).tolist())))
            col_agent.observe(j, FullCosts(tuple((p @ cc).tolist())))
    if feedback == EXPECTED:
        p_bar = np.mean(trace.p, axis=0)
        q_bar = np.mean(trace.q, axis=0)
    else:
        p_bar = np.bincount(trace.rows, minlength=m) / T
        q_bar = np.bincount(trace.cols, minlength=n) / T
    return trace, equilibrium_report(game, p_bar, q_bar, T)


def realized_regrets(M, trace: GameTrace) -> tuple[float, float]:
    """``(R, R')``: row cost regret and column reward regret of the realized plays."""
    A = _as_game(M).M
    rows = np.asarray(trace.rows)
    cols = np.asarray(trace.cols)
    total = math.fsum(A[rows, cols])
    row_best = float(A[:, cols].sum(axis=1).min())
    col_best = float(A[rows, :].sum(axis=0).max())
    return total - row_best, col_best - total


def expected_regrets(M, trace: GameTrace) -> tuple[float, float]:
    """Regrets of the mixed strategies ``p_t, q_t`` against fixed deviations."""
    A = _as_game(M).M
    P = np.asarray(trace.p)
    Q = np.asarray(trace.q)
    per_round = np.einsum("ti,ij,tj->t", P, A, Q)
    total = math.fsum(per_round)
    row_best = float((A @ Q.sum(axis=0)).min())
    col_best = float((P.sum(axis=0) @ A).max())
    return total - row_best, col_best - total


def hedge_regret_bound(T: int, K: int, span: float = 1.0) -> float:
    """Probability-one Hedge bound ``2 sqrt(2 T ln K)`` on the original scale."""
    return span * 2.0 * math.sqrt(2.0 * T * math.log(K)) if K > 1 else 0.0


def hedge_pair(M, T: int) -> tuple[Hedge, Hedge]:
    m, n = _as_game(M).shape
    return Hedge.for_horizon(m, T), Hedge.for_horizon(n, T)


def minimax_selfplay(M, tol: float, T0: int = 64, max_T: int = 1 << 18, seed: int = 0) -> EquilibriumReport:
    """Hedge against Hedge on expected feedback, doubling ``T`` until the
    duality gap of the average strategies is at most ``tol``."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    game = _as_game(M)
    best: Optional[EquilibriumReport] = None
    T = T0
    while True:
        row, col = hedge_pair(game, T)
        _, rep = repeated_game(row, col, game, T, RngStream(seed, ("selfplay", str(T))), feedback=EXPECTED)
        if best is None or rep.duality_gap < best.duality_gap:
            best = rep
        if rep.duality_gap <= tol:
            best.converged = True
            return best
        if 2 * T > max_T:
            best.converged = False
            best.certified_eps = max(best.duality_gap, 0.0)
            return best
        T *= 2


def solve_2x2(M) -> tuple[float, np.ndarray, np.ndarray]:
    """Closed-form value and equilibrium of a 2x2 zero-sum game."""
    A = _as_game(M).M
    if A.shape != (2, 2):
        raise DomainError("need a 2x2 matrix")
    upper = A.max(axis=1).min()  # row guarantees
    lower = A.min(axis=0).max()  # column guarantees
    if upper == lower:
        i = int(np.argmin(A.max(axis=1)))
        j = int(np.argmax(A.min(axis=0)))
        return float(upper), np.eye(2)[i], np.eye(2)[j]
    (a, b), (c, d) = A
    den = a - b - c + d
    p = (d - c) / den
    q = (d - b) / den
    return float((a * d - b * c) / den), np.array([p, 1 - p]), np.array([q, 1 - q])


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    row_margin: float
    col_margin: float


def approx_nash_check(p, q, M, eps: float, value: float) -> CheckResult:
    """``max_j M(p, j) <= v + eps`` and ``min_i M(i, q) >= v - eps``.

    Margins are slack amounts; negative means violated.
    """
    row_margin = value + eps - f_value(M, p)
    col_margin = h_value(M, q) - (value - eps)
    tol = 1e-12
    return CheckResult(row_margin >= -tol and col_margin >= -tol, row_margin, col_margin)


def cce_check(sigma, row_cost, col_reward, eps: float) -> CheckResult:
    """Coarse correlated equilibrium test for a joint distribution ``sigma``.

    The row player minimizes ``row_cost``, the column player maximizes
    ``col_reward``; neither may gain more than ``eps`` by a fixed deviation.
    """
    S = np.asarray(sigma, dtype=float)
    A = np.asarray(row_cost, dtype=float)
    B = np.asarray(col_reward, dtype=float)
    if S.shape != A.shape or S.shape != B.shape:
        raise DomainError("sigma and payoff matrices need the same shape")
    if (S < -1e-15).any() or abs(S.sum() - 1.0) > 1e-9:
        raise DomainError("sigma must be a joint distribution")
    u_row = float((S * A).sum())
    u_col = float((S * B).sum())
    dev_row = A @ S.sum(axis=0)  # cost of deviating to a fixed row
    dev_col = S.sum(axis=1) @ B  # reward of deviating to a fixed column
    row_margin = float(dev_row.min()) + eps - u_row
    col_margin = u_col - (float(dev_col.max()) - eps)
    tol = 1e-12
    return CheckResult(row_margin >= -tol and col_margin >= -tol, row_margin, col_margin)


def average_joint(trace: GameTrace) -> np.ndarray:
    """``(1/T) sum_t p_t q_t^T``."""
    P = np.asarray(trace.p)
    Q = np.asarray(trace.q)
    return np.einsum("ti,tj->ij", P, Q) / len(P)


def parse_matrix(text: str) -> GameMatrix:
    tokens = text.split()
    try:
        m, n = int(tokens[0]), int(tokens[1])
        vals = [float(x) for x in tokens[2:]]
    except (IndexError, ValueError):
        raise DataError("matrix file must start with 'm n' followed by numbers") from None
    if m < 1 or n < 1 or len(vals) != m * n:
        raise DataError(f"expected {m} x {n} = {m * n} entries, got {len(vals)}")
    return GameMatrix(np.array(vals).reshape(m, n))


def load_matrix(path) -> GameMatrix:
    return parse_matrix(Path(path).read_text())


def format_matrix(M) -> str:
    A = _as_game(M).M
    lines = [f"{A.shape[0]} {A.shape[1]}"] + [" ".join(repr(float(x)) for x in row) for row in A]
    return "\n".join(lines) + "\n"
