"""Lipschitz bandits on [0, 1]: meshes, fixed discretization, zooming, bump instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Agent, RngStream
from .errors import DomainError, PropertyViolation

SCALED = "scaled"
POWER = "power"


@dataclass(frozen=True)
class Interval1DMetric:
    """``L * |x - y|`` (scaled) or ``|x - y| ** (1/d)`` (power) on [0, 1]."""

    kind: str = SCALED
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in (SCALED, POWER):
            raise DomainError(f"unknown metric kind {self.kind!r}")
        if self.param <= 0 or (self.kind == POWER and self.param < 1):
            raise DomainError("metric parameter must be positive (d >= 1 for power)")

    def __call__(self, x: float, y: float) -> float:
        gap = abs(x - y)
        return self.param * gap if self.kind == SCALED else gap ** (1.0 / self.param)

    def half_width(self, r):
        """Largest ``|x - y|`` with ``D(x, y) <= r``."""
        r = np.asarray(r, dtype=float)
        return r / self.param if self.kind == SCALED else r ** self.param


# ---------------------------------------------------------------------------
# Continuum environments
# ---------------------------------------------------------------------------


class ContinuumEnv:
    """Bernoulli rewards with mean ``mean_fn(x)`` for ``x`` in [0, 1]."""

    def __init__(self, mean_fn: Callable[[float], float], best_x: float):
        self.mean_fn = mean_fn
        self.best_x = best_x
        self.best_mean = mean_fn(best_x)

    def mean(self, x: float) -> float:
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"arm {x} outside [0, 1]")
        return self.mean_fn(x)

    def step(self, x: float, rng: RngStream) -> float:
        return float(rng.random() < self.mean(x))


def bump_mean(x: float, x_star: float, eps: float, L: float) -> float:
    return 0.5 + max(0.0, eps - L * abs(x - x_star))


def bump_env(x_star: float, eps: float, L: float) -> ContinuumEnv:
    """Flat 1/2 everywhere except a bump of height ``eps`` and slope ``L`` at ``x*``."""
    if not 0.0 <= x_star <= 1.0:
        raise DomainError("x* must lie in [0, 1]")
    if not 0.0 < eps <= 0.5 or L <= 0:
        raise DomainError("need 0 < eps <= 1/2 and L > 0")
    return ContinuumEnv(lambda x: bump_mean(x, x_star, eps, L), x_star)


def target_env(x_star: float, mu_star: float = 0.9, L: float = 1.0) -> ContinuumEnv:
    """``mu(x) = mu* - L |x - x*|`` clipped at 0: a single target point."""
    if not 0.0 <= x_star <= 1.0 or not 0.0 < mu_star <= 1.0:
        raise DomainError("x* must lie in [0, 1] and mu* in (0, 1]")
    return ContinuumEnv(lambda x: max(0.0, mu_star - L * abs(x - x_star)), x_star)


@dataclass
class ContinuumRun:
    arms: list
    rewards: list
    pseudo_regret: float
    total_reward: float


def run_continuum(env: ContinuumEnv, agent, T: int, rng: RngStream) -> ContinuumRun:
    env_rng = rng.child("env")
    agent_rng = rng.child("agent")
    arms, rewards, gaps = [], [], []
    for _ in range(T):
        x = agent.act(agent_rng)
        r = env.step(x, env_rng)
        agent.observe(x, r)
        arms.append(x)
        rewards.append(r)
        gaps.append(env.best_mean - env.mean(x))
    return ContinuumRun(arms, rewards, math.fsum(gaps), math.fsum(rewards))


# ---------------------------------------------------------------------------
# Fixed discretization
# ---------------------------------------------------------------------------


def uniform_mesh(eps: float) -> list[float]:
    """All multiples of ``eps`` in [0, 1], plus 1 itself."""
    if not 0.0 < eps <= 1.0:
        raise DomainError("mesh step must lie in (0, 1]")
    n = int(math.floor(1.0 / eps + 1e-12))
    pts = [k * eps for k in range(n + 1)]
    if 1.0 - pts[-1] > 1e-12:
        pts.append(1.0)
    else:
        pts[-1] = 1.0
    return pts


def default_mesh_eps(T: int, L: float = 1.0) -> float:
    return min(1.0, (T * L * L / math.log(T)) ** (-1.0 / 3.0))


def mesh_distance(x: float, mesh: Sequence[float]) -> float:
    return min(abs(x - m) for m in mesh)


class FixedDiscretization:
    """Run a finite-armed agent over mesh points; its arm ``i`` is ``mesh[i]``."""

    def __init__(self, inner_factory: Callable[[int], Agent], mesh: Sequence[float]):
        if not mesh:
            raise DomainError("mesh must be nonempty")
        self.mesh = list(mesh)
        self.inner = inner_factory(len(self.mesh))
        self._index = {}

    def act(self, rng, context=None) -> float:
        i = self.inner.act(rng)
        x = self.mesh[i]
        self._index[x] = i
        return x

    def observe(self, x: float, r: float) -> None:
        from .core import BanditReward

        self.inner.observe(self._index[x], BanditReward(r))


def fixed_discretization(inner_factory, mesh) -> FixedDiscretization:
    return FixedDiscretization(inner_factory, mesh)


# ---------------------------------------------------------------------------
# Zooming
# ---------------------------------------------------------------------------


def coverage_gap(centers, half_widths) -> Optional[float]:
    """Infimum of the part of [0, 1] not covered by the closed intervals
    ``[c - w, c + w]``, or ``None`` when [0, 1] is covered."""
    if len(centers) == 0:
        return 0.0
    c = np.asarray(centers, dtype=float)
    w = np.asarray(half_widths, dtype=float)
    lo = c - w
    hi = c + w
    order = np.argsort(lo, kind="stable")
    reach = 0.0
    for i in order:
        if lo[i] > reach:
            return reach
        if hi[i] > reach:
            reach = hi[i]
            if reach >= 1.0:
                return None
    return reach if reach < 1.0 else None


class Zooming:
    """Adaptive discretization with confidence balls of radius
    ``sqrt(2 ln T / (n + 1))`` and index ``mean + 2 * radius``.

    Whenever part of [0, 1] is uncovered the leftmost boundary point of the
    uncovered region is activated; this repeats until [0, 1] is covered.
    """

    def __init__(self, T: int, metric: Interval1DMetric = Interval1DMetric()):
        if T < 2:
            raise DomainError("horizon must be at least 2")
        self.T = T
        self.metric = metric
        self._c = 2.0 * math.log(T)
        self.xs: list[float] = []
        self.n: list[int] = []
        self.sums: list[float] = []
        self.activated_at: list[int] = []
        self.t = 0
        self._pos: dict[float, int] = {}

    def radii(self) -> np.ndarray:
        return np.sqrt(self._c / (np.asarray(self.n, dtype=float) + 1.0))

    def means(self) -> np.ndarray:
        n = np.asarray(self.n, dtype=float)
        s = np.asarray(self.sums, dtype=float)
        return np.divide(s, n, out=np.zeros_like(s), where=n > 0)

    def indices(self) -> np.ndarray:
        return self.means() + 2.0 * self.radii()

    def uncovered(self) -> Optional[float]:
        return coverage_gap(self.xs, self.metric.half_width(self.radii()))

    def _activate(self) -> None:
        while True:
            y = self.uncovered()
            if y is None:
                return
            if y in self._pos:  # pragma: no cover - fresh balls always extend coverage
                raise PropertyViolation("activation made no progress")
            self._pos[y] = len(self.xs)
            self.xs.append(y)
            self.n.append(0)
            self.sums.append(0.0)
            self.activated_at.append(self.t)

    def act(self, rng=None, context=None) -> float:
        self.t += 1
        self._activate()
        idx = self.indices()
        best = max(range(len(self.xs)), key=lambda i: (idx[i], -self.xs[i]))
        return self.xs[best]

    def observe(self, x: float, r: float) -> None:
        i = self._pos[x]
        self.n[i] += 1
        self.sums[i] += r


def zooming(T: int, metric: Interval1DMetric = Interval1DMetric()) -> Zooming:
    return Zooming(T, metric)
