"""Seeded experiment runner, CSV output, and the lower-bound fixtures."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .. import games, linear, lipschitz
from ..core import Agent, RngStream, Trace, run_episode
from ..errors import DomainError
from ..stochastic import BernoulliEnv
from .config import ExperimentConfig
from .registry import BANDIT_DRIVER, COMBINATORIAL, CONTINUUM, GAME, validate

HEADER = ("seed", "t", "arm", "reward", "cum_reward", "regret")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class SeedResult:
    seed: int
    rows: list  # (t, arm, reward, cum_reward, regret)
    final_regret: Optional[float]
    pseudo_regret: Optional[float]
    total_reward: float


def _bandit_seed(env_kind, agent_kind, cfg, seed) -> SeedResult:
    rng = RngStream(seed)
    env = env_kind.build(cfg.env_params, cfg.T, rng.child("setup"))
    agent = agent_kind.build(cfg.agent_params, env, cfg.T)
    trace = Trace()
    history, rep = run_episode(env, agent, cfg.T, rng.child("run"), trace)
    sign = 1.0 if env.objective == "reward" else -1.0
    rewards = [sign * v for v in trace.values]
    cum = np.cumsum(rewards).tolist()
    curve = rep.regret_curve
    if not curve and rep.pseudo_regret is not None:
        curve = _pseudo_curve(trace.expected, history.arms(), sign)
    rows = [(t + 1, a, rewards[t], cum[t], curve[t] if curve else None)
            for t, a in enumerate(history.arms())]
    final = curve[-1] if curve else None
    return SeedResult(seed, rows, final, rep.pseudo_regret, rep.total_reward)


def _pseudo_curve(expected, arms, sign) -> list:
    gaps = []
    for e, a in zip(expected, arms):
        e = [sign * x for x in e]
        gaps.append(max(e) - e[a])
    return np.cumsum(gaps).tolist()


def _continuum_seed(env_kind, agent_kind, cfg, seed) -> SeedResult:
    rng = RngStream(seed)
    env = env_kind.build(cfg.env_params, cfg.T, rng.child("setup"))
    agent = agent_kind.build(cfg.agent_params, env, cfg.T)
    run = lipschitz.run_continuum(env, agent, cfg.T, rng.child("run"))
    gaps = [env.best_mean - env.mean(x) for x in run.arms]
    cum = np.cumsum(run.rewards).tolist()
    curve = np.cumsum(gaps).tolist()
    rows = [(t + 1, x, run.rewards[t], cum[t], curve[t]) for t, x in enumerate(run.arms)]
    return SeedResult(seed, rows, curve[-1], run.pseudo_regret, run.total_reward)


def _combinatorial_seed(env_kind, agent_kind, cfg, seed) -> SeedResult:
    rng = RngStream(seed)
    env = env_kind.build(cfg.env_params, cfg.T, rng.child("setup"))
    agent = agent_kind.build(cfg.agent_params, env, cfg.T)
    run = linear.run_combinatorial(env, agent, cfg.T, rng.child("run"))
    rewards = [-c for c in run.costs]
    cum = np.cumsum(rewards).tolist()
    cumv = np.cumsum(env.vectors[:cfg.T], axis=0)
    curve = []
    for t in range(cfg.T):
        best = linear.opt_oracle(env.family, cumv[t])
        curve.append(-cum[t] - env.family.cost(best, cumv[t]))
    rows = [(t + 1, "-".join(map(str, a)), rewards[t], cum[t], curve[t]) for t, a in enumerate(run.actions)]
    return SeedResult(seed, rows, run.regret, None, -run.total_cost)


def _game_seed(env_kind, agent_kind, cfg, seed) -> SeedResult:
    rng = RngStream(seed)
    game = env_kind.build(cfg.env_params, cfg.T, rng.child("setup"))
    row, col = agent_kind.build(cfg.agent_params, game, cfg.T)
    feedback = str(cfg.agent_params.get("feedback", games.REALIZED))
    trace, _ = games.repeated_game(row, col, game, cfg.T, rng.child("run"), feedback)
    rewards = [-c for c in trace.costs]
    cum = np.cumsum(rewards).tolist()
    colsum = np.zeros(game.shape[0])
    curve = []
    for t, j in enumerate(trace.cols):
        colsum += game.M[:, j]
        curve.append(-cum[t] - float(colsum.min()))
    rows = [(t + 1, f"{i}:{j}", rewards[t], cum[t], curve[t])
            for t, (i, j) in enumerate(zip(trace.rows, trace.cols))]
    return SeedResult(seed, rows, curve[-1], None, cum[-1])


DRIVERS = {
    BANDIT_DRIVER: _bandit_seed,
    CONTINUUM: _continuum_seed,
    COMBINATORIAL: _combinatorial_seed,
    GAME: _game_seed,
}


def run_seed(cfg: ExperimentConfig, seed: int) -> SeedResult:
    ek, ak = validate(cfg)
    return DRIVERS[ek.driver](ek, ak, cfg, seed)


def seed_csv(res: SeedResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for t, arm, r, cr, reg in res.rows:
        w.writerow([res.seed, t, _fmt(arm), _fmt(float(r)), _fmt(float(cr)),
                    _fmt(None if reg is None else float(reg))])
    return buf.getvalue()


@dataclass
class Summary:
    per_seed: list  # (seed, final_regret, pseudo_regret, total_reward)
    mean_regret: Optional[float]
    se_regret: Optional[float]


def summarize(results: Sequence[SeedResult]) -> Summary:
    regs = [r.final_regret for r in results]
    mean = se = None
    if regs and all(x is not None for x in regs):
        mean = math.fsum(regs) / len(regs)
        se = float(np.std(regs, ddof=1) / math.sqrt(len(regs))) if len(regs) > 1 else 0.0
    per = [(r.seed, r.final_regret, r.pseudo_regret, r.total_reward) for r in results]
    return Summary(per, mean, se)


def summary_csv(s: Summary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("seed", "final_regret", "pseudo_regret", "total_reward"))
    for seed, reg, pr, tot in s.per_seed:
        w.writerow([seed, _fmt(reg), _fmt(pr), _fmt(float(tot))])
    w.writerow(["mean", _fmt(s.mean_regret), "", ""])
    w.writerow(["se", _fmt(s.se_regret), "", ""])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out: Optional[str] = None) -> tuple[Path, Summary]:
    """Validate, run every seed, write ``seed-<s>.csv`` files and ``summary.csv``."""
    validate(cfg)
    outdir = Path(out or cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    results = []
    for seed in cfg.seeds:
        res = run_seed(cfg, seed)
        (outdir / f"seed-{seed}.csv").write_text(seed_csv(res))
        results.append(res)
    summ = summarize(results)
    (outdir / "summary.csv").write_text(summary_csv(summ))
    return outdir, summ


def read_seed_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Lower-bound fixtures
# ---------------------------------------------------------------------------


def lb_instance(K: int, eps: float, j: int) -> BernoulliEnv:
    """Arm ``j`` has mean ``(1 + eps)/2``; every other arm has mean 1/2."""
    if K < 2:
        raise DomainError("need at least two arms")
    if not 0.0 <= eps < 1.0:
        raise DomainError("eps must lie in [0, 1)")
    if not 0 <= j < K:
        raise DomainError(f"planted arm {j} outside [0, {K})")
    means = [0.5] * K
    means[j] = (1.0 + eps) / 2.0
    return BernoulliEnv(means)


@dataclass
class BestArmReport:
    error_rate: float
    se: float
    planted: list
    predicted: list


def best_arm_id_experiment(agent_factory: Callable[[int, int], Agent], K: int, eps: float, T: int,
                           seeds: Sequence[int]) -> BestArmReport:
    """Plant the best arm uniformly at random per seed; count wrong predictions.

    The prediction is ``agent.predict()`` when available, else the most
    pulled arm with ties to the lowest index.
    """
    planted, predicted = [], []
    for s in seeds:
        rng = RngStream(s)
        j = rng.child("instance").integers(K)
        env = lb_instance(K, eps, j)
        agent = agent_factory(K, T)
        hist, _ = run_episode(env, agent, T, rng.child("run"))
        if hasattr(agent, "predict"):
            y = agent.predict()
        else:
            counts = np.bincount(hist.arms(), minlength=K)
            y = int(np.argmax(counts))
        planted.append(j)
        predicted.append(y)
    errs = [int(a != b) for a, b in zip(planted, predicted)]
    n = len(errs)
    rate = sum(errs) / n
    se = math.sqrt(rate * (1 - rate) / n) if n > 1 else 0.0
    return BestArmReport(rate, se, planted, predicted)


@dataclass
class CoinReport:
    high_given_fair: float
    low_given_biased: float
    threshold: float


def coin_decision_experiment(T: int, eps: float, seeds: Sequence[int]) -> CoinReport:
    """Say HIGH when the empirical mean of ``T`` flips exceeds ``(2 + eps)/4``."""
    if T < 1:
        raise DomainError("the decision rule needs at least one flip")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    thr = (2.0 + eps) / 4.0
    high_fair = low_biased = 0
    for s in seeds:
        g = RngStream(s, ("coin",)).generator
        fair = (g.random(T) < 0.5).mean()
        biased = (g.random(T) < (1.0 + eps) / 2.0).mean()
        high_fair += fair > thr
        low_biased += biased <= thr
    n = len(seeds)
    return CoinReport(high_fair / n, low_biased / n, thr)
