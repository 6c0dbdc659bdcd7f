"""Config kinds for environments and agents, with parameter schemas.

Each environment kind names the driver that runs it: ``bandit`` (the
standard episode loop), ``continuum`` (arms in [0, 1]), ``combinatorial``
(subset actions) or ``game`` (a repeated zero-sum game).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


from .. import adversarial, bayes, bwk, contextual, games, incentives, linear, lipschitz, stochastic
from ..core import FULL, RngStream, doubling_wrap
from ..errors import ConfigurationError

BANDIT_DRIVER = "bandit"
CONTINUUM = "continuum"
COMBINATORIAL = "combinatorial"
GAME = "game"


@dataclass(frozen=True)
class Kind:
    build: Callable
    required: tuple = ()
    optional: tuple = ()
    driver: str = BANDIT_DRIVER


def _check(section: str, kind: str, spec: Kind, params: dict) -> None:
    allowed = set(spec.required) | set(spec.optional)
    for k in params:
        if k not in allowed:
            raise ConfigurationError(f"{section}.{k}: unknown parameter for {section} kind {kind!r}")
    for k in spec.required:
        if k not in params:
            raise ConfigurationError(f"{section}.{k}: required by {section} kind {kind!r}")


def _list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _table(v) -> list:
    v = _list(v)
    return [_list(row) for row in v] if v and isinstance(v[0], (list, tuple)) else [v]


# ---------------------------------------------------------------------------
# Environments: build(params, T, rng) -> env
# ---------------------------------------------------------------------------


def _lb(p, T, rng):
    from .experiments import lb_instance

    j = p.get("j", "random")
    j = rng.child("instance").integers(int(p["K"])) if j == "random" else int(j)
    return lb_instance(int(p["K"]), float(p["eps"]), j)


def _cost_table(p, T, rng):
    means = [float(m) for m in _list(p["means"])]
    fb = str(p.get("feedback", FULL))
    table = adversarial.bernoulli_cost_table(means, T, rng.child("table"))
    return adversarial.CostTableEnv(table, fb, means=means)


def _prior_env(p, T, rng):
    prior = incentives.load_prior(p["prior"]) if "prior" in p else incentives.example_prior()
    return stochastic.BernoulliEnv(prior.sample(rng.child("prior")))


def _bwk_env(p, T, rng):
    if "path" in p:
        inst = bwk.load_instance(p["path"])
    elif "prices" in p:
        inst = bwk.pricing_env(_list(p["prices"]), _list(p["values"]), _list(p["probs"]), float(p["B"]), T)
    else:
        inst = bwk.two_resource_instance(int(p["B"]))
    if inst.T != T:
        raise ConfigurationError(f"experiment.T = {T} disagrees with the BwK horizon {inst.T}")
    return bwk.BwKEnv(bwk.rescale_budgets(inst))


def _lipschitz_context_env(p, T, rng):
    return contextual.LipschitzContextEnv(lambda x, a: x if a == 0 else 1.0 - x, 2)


def _dag_env(p, T, rng):
    dag = linear.load_graph(p["graph"]) if "graph" in p else linear.random_layered_dag(
        rng.child("graph"), int(p.get("layers", 3)), int(p.get("width", 2)))
    fam = linear.ActionFamily.from_dag(dag)
    fb = str(p.get("feedback", FULL))
    hi = 1.0 / fam.d if fb == FULL else 1.0
    V = rng.child("costs").generator.random((T, fam.d)) * hi
    return linear.LinearCostEnv(fam, V, fb)


def _matrix_env(p, T, rng):
    if "path" in p:
        return games.load_matrix(p["path"])
    return games.GameMatrix(_table(p["rows"]))


ENVIRONMENTS: dict[str, Kind] = {
    "bernoulli": Kind(lambda p, T, r: stochastic.BernoulliEnv(_list(p["means"])), ("means",)),
    "deterministic": Kind(lambda p, T, r: stochastic.DeterministicEnv(_list(p["rewards"])), ("rewards",)),
    "lb": Kind(_lb, ("K", "eps"), ("j",)),
    "cost_table": Kind(_cost_table, ("means",), ("feedback",)),
    "prior_bernoulli": Kind(_prior_env, (), ("prior",)),
    "context": Kind(lambda p, T, r: contextual.FiniteContextEnv(_table(p["means"]),
                                                                p.get("probs") and _list(p["probs"])),
                    ("means",), ("probs",)),
    "lipschitz_context": Kind(_lipschitz_context_env),
    "linear_context": Kind(lambda p, T, r: contextual.LinearContextEnv(_table(p["thetas"])), ("thetas",)),
    "bwk": Kind(_bwk_env, (), ("path", "B", "prices", "values", "probs")),
    "bump": Kind(lambda p, T, r: lipschitz.bump_env(float(p["x_star"]), float(p["eps"]), float(p.get("L", 1.0))),
                 ("x_star", "eps"), ("L",), CONTINUUM),
    "target": Kind(lambda p, T, r: lipschitz.target_env(float(p["x_star"]), float(p.get("mu_star", 0.9)),
                                                        float(p.get("L", 1.0))),
                   ("x_star",), ("mu_star", "L"), CONTINUUM),
    "dag": Kind(_dag_env, (), ("graph", "layers", "width", "feedback"), COMBINATORIAL),
    "matrix": Kind(_matrix_env, (), ("path", "rows"), GAME),
}


# ---------------------------------------------------------------------------
# Agents: build(params, env, T) -> agent
# ---------------------------------------------------------------------------


def _n_experts_table(p, env, T):
    N = int(p.get("n_experts", 4))
    g = RngStream(int(p.get("expert_seed", 0)), ("experts",)).generator
    return g.integers(env.n_arms, size=(T, N))


def _policies(env):
    return contextual.all_policies(list(range(len(env.means))), env.n_arms)


def _exp3(p, env, T):
    if "gamma" in p:
        g = float(p["gamma"])
        return adversarial.EXP3(env.n_arms, g, adversarial.hedge_eps_second_moment(env.n_arms, env.n_arms / g, T))
    return adversarial.EXP3.for_horizon(env.n_arms, T)


def _rhe(p, env, T):
    prior = incentives.load_prior(p["prior"]) if "prior" in p else incentives.example_prior()
    n0 = int(p.get("n0", 1))
    params = incentives.BicParams.checked(prior, n0, float(p["eps"]) if "eps" in p else None)
    return incentives.RepeatedHiddenExploration(prior, params, incentives.AlwaysArm(incentives.ARM2))


def _greedy(p, env, T):
    prior = incentives.load_prior(p["prior"]) if "prior" in p else incentives.example_prior()
    return incentives.BayesianGreedy(prior)


def _fixed_disc(p, env, T):
    eps = float(p["eps"]) if "eps" in p else lipschitz.default_mesh_eps(T, float(p.get("L", 1.0)))
    return lipschitz.fixed_discretization(lambda K: stochastic.UCB1(K, T), lipschitz.uniform_mesh(eps))


def _algsb(p, env, T):
    return linear.AlgSB(env.family, float(p.get("gamma", 0.1)), T, str(p.get("inner", linear.FPL_INNER)))


AGENTS: dict[str, Kind] = {
    "explore_first": Kind(lambda p, e, T: stochastic.ExploreFirst(e.n_arms, T, p.get("N")), (), ("N",)),
    "epsilon_greedy": Kind(lambda p, e, T: stochastic.EpsilonGreedy(e.n_arms)),
    "successive_elimination": Kind(lambda p, e, T: stochastic.SuccessiveElimination(e.n_arms, T)),
    "ucb1": Kind(lambda p, e, T: stochastic.UCB1(e.n_arms, T)),
    "ucb1_anytime": Kind(lambda p, e, T: doubling_wrap(lambda h: stochastic.UCB1(e.n_arms, max(h, e.n_arms, 2)))),
    "thompson": Kind(lambda p, e, T: bayes.ThompsonPriorFree(e.n_arms, str(p.get("mode", bayes.BETA_BERNOULLI))),
                     (), ("mode",)),
    "thompson_finite": Kind(lambda p, e, T: bayes.ThompsonFinite(
        incentives.load_prior(p["prior"]) if "prior" in p else incentives.example_prior()), (), ("prior",)),
    "hedge": Kind(lambda p, e, T: adversarial.Hedge.for_horizon(e.n_arms, T)),
    "exp3": Kind(_exp3, (), ("gamma",)),
    "exp4": Kind(lambda p, e, T: adversarial.make_exp4(e.n_arms, _n_experts_table(p, e, T), T),
                 (), ("n_experts", "expert_seed")),
    "per_context_ucb1": Kind(lambda p, e, T: contextual.per_context_agent(lambda: stochastic.UCB1(e.n_arms, T))),
    "lipschitz_context_ucb1": Kind(lambda p, e, T: contextual.lipschitz_context_agent(
        float(p.get("L", 1.0)), p.get("eps"), lambda: stochastic.UCB1(e.n_arms, T), T), (), ("L", "eps")),
    "linucb": Kind(lambda p, e, T: contextual.linucb(e.n_arms, e.d, p.get("beta"), T), (), ("beta",)),
    "exp4_policies": Kind(lambda p, e, T: contextual.exp4_policies_for_horizon(_policies(e), e.n_arms, T)),
    "explore_then_exploit": Kind(lambda p, e, T: (contextual.ExploreThenExploit(e.n_arms, int(p["N"]), _policies(e))
                                                  if "N" in p else
                                                  contextual.ExploreThenExploit.for_horizon(e.n_arms, T, _policies(e))),
                                 (), ("N",)),
    "lagrange_bwk": Kind(lambda p, e, T: bwk.lagrange_bwk(e.inst)),
    "ucb_bwk": Kind(lambda p, e, T: bwk.ucb_bwk(e.inst)),
    "bayesian_greedy": Kind(_greedy, (), ("prior",)),
    "hidden_exploration": Kind(_rhe, (), ("prior", "n0", "eps")),
    "zooming": Kind(lambda p, e, T: lipschitz.zooming(T, lipschitz.Interval1DMetric(lipschitz.SCALED,
                                                                                  float(p.get("L", 1.0)))),
                    (), ("L",), CONTINUUM),
    "uniform_ucb1": Kind(_fixed_disc, (), ("eps", "L"), CONTINUUM),
    "fpl": Kind(lambda p, e, T: linear.FPL(e.family, float(p.get("U", 1.0)), T), (), ("U",), COMBINATORIAL),
    "ftl": Kind(lambda p, e, T: linear.follow_the_leader(e.family), (), (), COMBINATORIAL),
    "algsb": Kind(_algsb, (), ("gamma", "inner"), COMBINATORIAL),
    "hedge_pair": Kind(lambda p, e, T: games.hedge_pair(e, T), (), ("feedback",), GAME),
    "hedge_vs_best_response": Kind(lambda p, e, T: (adversarial.Hedge.for_horizon(e.shape[0], T),
                                                    games.best_response_adversary(e)), (), (), GAME),
}


def validate(cfg) -> tuple[Kind, Kind]:
    """Check kinds and parameter names before anything runs."""
    if cfg.env_kind not in ENVIRONMENTS:
        raise ConfigurationError(f"env.kind: unknown environment {cfg.env_kind!r}")
    if cfg.agent_kind not in AGENTS:
        raise ConfigurationError(f"agent.kind: unknown agent {cfg.agent_kind!r}")
    ek = ENVIRONMENTS[cfg.env_kind]
    ak = AGENTS[cfg.agent_kind]
    _check("env", cfg.env_kind, ek, cfg.env_params)
    _check("agent", cfg.agent_kind, ak, cfg.agent_params)
    if ek.driver != ak.driver:
        raise ConfigurationError(f"agent.kind: {cfg.agent_kind!r} cannot run on a {ek.driver} environment "
                                 f"({cfg.env_kind!r})")
    return ek, ak
