"""Linear and combinatorial online learning: oracles, FPL, online routing, AlgSB.

Actions are subsets of atoms ``0..d-1`` stored as sorted tuples. Costs are
linear, ``cost(a) = sum of v[e] for e in a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .adversarial import Hedge, hedge_eps_second_moment
from .core import FULL, SEMI, FullCosts, RngStream, SemiBandit
from .errors import ConfigurationError, DataError, DomainError, PropertyViolation


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


class Dag:
    """Directed acyclic graph with numbered edges, a source and a sink.

    Edges that lie on no source-to-sink path are dropped and the survivors are
    renumbered ``0..d-1`` in order of their original ids
    (``original_ids[new] == old``).
    """

    def __init__(self, edges: Sequence[tuple[int, object, object]], source, sink):
        self.source = source
        self.sink = sink
        edges = sorted(edges, key=lambda e: e[0])
        ids = [e[0] for e in edges]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate edge ids")
        nodes = {source, sink}
        for _, u, v in edges:
            nodes.update((u, v))
        order = _topological_order(nodes, [(u, v) for _, u, v in edges])
        fwd = _reachable(source, [(u, v) for _, u, v in edges])
        bwd = _reachable(sink, [(v, u) for _, u, v in edges])
        if sink not in fwd:
            raise DataError("sink is not reachable from source")
        kept = [(i, u, v) for i, u, v in edges if u in fwd and v in bwd]
        self.original_ids = [i for i, _, _ in kept]
        self.edges = [(u, v) for _, u, v in kept]
        used = {source, sink} | {u for u, _ in self.edges} | {v for _, v in self.edges}
        self.order = [n for n in order if n in used]
        self.pos = {n: k for k, n in enumerate(self.order)}
        self.out_edges: dict = {n: [] for n in self.order}
        for e, (u, v) in enumerate(self.edges):
            self.out_edges[u].append(e)

    @property
    def d(self) -> int:
        return len(self.edges)

    def paths(self) -> list[tuple[int, ...]]:
        """All source-to-sink paths as sorted edge tuples (exponential)."""
        out = []

        def walk(node, acc):
            if node == self.sink:
                out.append(tuple(sorted(acc)))
                return
            for e in self.out_edges[node]:
                acc.append(e)
                walk(self.edges[e][1], acc)
                acc.pop()

        walk(self.source, [])
        return sorted(out)


def _topological_order(nodes, arcs) -> list:
    indeg = {n: 0 for n in nodes}
    succ: dict = {n: [] for n in nodes}
    for u, v in arcs:
        succ[u].append(v)
        indeg[v] += 1
    ready = sorted((n for n in nodes if indeg[n] == 0), key=str)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for v in succ[n]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(order) != len(nodes):
        raise DataError("graph has a directed cycle")
    return order


def _reachable(start, arcs) -> set:
    succ: dict = {}
    for u, v in arcs:
        succ.setdefault(u, []).append(v)
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for v in succ.get(n, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def parse_graph(text: str) -> Dag:
    """Parse ``edge <id> <from> <to>`` / ``source <n>`` / ``sink <n>`` lines."""
    edges = []
    source = sink = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "edge" and len(parts) == 4:
                edges.append((int(parts[1]), parts[2], parts[3]))
            elif parts[0] == "source" and len(parts) == 2:
                source = parts[1]
            elif parts[0] == "sink" and len(parts) == 2:
                sink = parts[1]
            else:
                raise ValueError
        except ValueError:
            raise DataError(f"line {lineno}: cannot parse {raw!r}") from None
    if source is None or sink is None:
        raise DataError("graph file needs both a source and a sink line")
    return Dag(edges, source, sink)


def load_graph(path) -> Dag:
    return parse_graph(Path(path).read_text())


def format_graph(dag: Dag) -> str:
    lines = [f"edge {e} {u} {v}" for e, (u, v) in enumerate(dag.edges)]
    lines += [f"source {dag.source}", f"sink {dag.sink}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Action families and the optimization oracle
# ---------------------------------------------------------------------------


class ActionFamily:
    """Feasible subsets of ``d`` atoms: an explicit list or a DAG's paths."""

    def __init__(self, d: int, actions: Optional[Iterable[Iterable[int]]] = None,
                 dag: Optional[Dag] = None):
        self.d = d
        self.dag = dag
        self._actions = None
        if dag is None:
            acts = sorted({tuple(sorted(set(a))) for a in actions or ()})
            if not acts:
                raise DomainError("action family is empty")
            if any(e < 0 or e >= d for a in acts for e in a):
                raise DomainError("atom ids must lie in [0, d)")
            self._actions = acts
        covered = set()
        for a in (self.actions() if dag is None else ((e,) for e in range(dag.d))):
            covered.update(a)
        missing = set(range(d)) - covered
        if missing:
            raise ConfigurationError(f"atoms {sorted(missing)} are not covered by any action")
        self._cover: Optional[dict] = None

    @classmethod
    def explicit(cls, actions: Iterable[Iterable[int]], d: Optional[int] = None) -> "ActionFamily":
        actions = [tuple(a) for a in actions]
        if d is None:
            d = 1 + max((e for a in actions for e in a), default=-1)
        return cls(d, actions)

    @classmethod
    def from_dag(cls, dag: Dag) -> "ActionFamily":
        if dag.d == 0:
            raise DomainError("graph has no usable edges")
        return cls(dag.d, dag=dag)

    def actions(self) -> list[tuple[int, ...]]:
        if self._actions is None:
            self._actions = self.dag.paths()
        return self._actions

    def cost(self, action: Sequence[int], v: Sequence[float]) -> float:
        return math.fsum(v[e] for e in action)

    def cover(self, atom: int) -> tuple[int, ...]:
        """Fewest-atom action containing ``atom`` (ties lexicographic)."""
        if self._cover is None:
            self._cover = self._build_cover()
        return self._cover[atom]

    def _build_cover(self) -> dict:
        if self.dag is not None:
            # fewest-edge path through each edge, via the oracle on unit weights
            out = {}
            for e in range(self.d):
                w = np.ones(self.d)
                w[e] = -float(self.d + 1)
                out[e] = opt_oracle(self, w)
            return out
        out = {}
        for a in self.actions():
            for e in a:
                cur = out.get(e)
                if cur is None or (len(a), a) < (len(cur), cur):
                    out[e] = a
        return out


def opt_oracle(family: ActionFamily, v: Sequence[float]) -> tuple[int, ...]:
    """Exact minimizer of ``a . v`` over the family; ties to the
    lexicographically smallest sorted atom tuple. ``v`` may be negative."""
    v = np.asarray(v, dtype=float)
    if v.shape != (family.d,) or not np.isfinite(v).all():
        raise DomainError(f"need a finite vector of length {family.d}")
    if family.dag is not None:
        return _dag_oracle(family.dag, v)
    best = None
    bkey = None
    for a in family.actions():
        key = (math.fsum(v[e] for e in a), a)
        if bkey is None or key < bkey:
            best, bkey = a, key
    return best


def _dag_oracle(dag: Dag, v: np.ndarray) -> tuple[int, ...]:
    # distance-to-sink over the topological order, then pick the
    # lexicographically smallest edge set among the tight paths
    INF = math.inf
    h = {n: INF for n in dag.order}
    h[dag.sink] = 0.0
    for n in reversed(dag.order):
        for e in dag.out_edges[n]:
            cand = v[e] + h[dag.edges[e][1]]
            if cand < h[n]:
                h[n] = cand
    tight = []
    for e, (x, y) in enumerate(dag.edges):
        lhs = v[e] + h[y]
        tol = 1e-12 * (1.0 + abs(h[x]) + abs(v[e]))
        if abs(lhs - h[x]) <= tol:
            tight.append(e)
    tight_set = set(tight)
    # reach[n] = nodes reachable from n through tight edges (n included)
    reach = {}
    for n in reversed(dag.order):
        r = {n}
        for e in dag.out_edges[n]:
            if e in tight_set:
                r |= reach[dag.edges[e][1]]
        reach[n] = r

    def feasible(chain: list[int]) -> bool:
        cur = dag.source
        for e in chain:
            x, y = dag.edges[e]
            if x not in reach[cur]:
                return False
            cur = y
        return dag.sink in reach[cur]

    def complete(chain: list[int]) -> bool:
        cur = dag.source
        for e in chain:
            if dag.edges[e][0] != cur:
                return False
            cur = dag.edges[e][1]
        return cur == dag.sink

    chosen: list[int] = []
    while not complete(chosen):
        for e in sorted(tight):
            if e in chosen:
                continue
            trial = sorted(chosen + [e], key=lambda k: dag.pos[dag.edges[k][0]])
            if feasible(trial):
                chosen = trial
                break
        else:  # pragma: no cover - tight subgraph always has a path
            raise PropertyViolation("oracle failed to assemble a tight path")
    return tuple(sorted(chosen))


# ---------------------------------------------------------------------------
# Environments over actions
# ---------------------------------------------------------------------------


class LinearCostEnv:
    """Oblivious adversary replaying hidden vectors ``v_t`` (rows of a table)."""

    objective = "cost"

    def __init__(self, family: ActionFamily, vectors, feedback: str = FULL):
        self.family = family
        self.vectors = np.asarray(vectors, dtype=float)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != family.d:
            raise DomainError("hidden vectors must form a T x d table")
        if feedback not in (FULL, SEMI):
            raise DomainError(f"unsupported feedback {feedback!r}")
        self.feedback_kind = feedback

    def step(self, t: int, action: Sequence[int]):
        v = self.vectors[t - 1]
        cost = self.family.cost(action, v)
        if self.feedback_kind == FULL:
            return FullCosts(tuple(v.tolist())), cost
        return SemiBandit(tuple((e, float(v[e])) for e in action)), cost


@dataclass
class CombinatorialRun:
    actions: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    total_cost: float = 0.0
    best_fixed_cost: float = 0.0
    best_action: tuple = ()

    @property
    def regret(self) -> float:
        return self.total_cost - self.best_fixed_cost


def run_combinatorial(env: LinearCostEnv, agent, T: int, rng: RngStream) -> CombinatorialRun:
    """Drive an action-valued agent; regret is against the best fixed action."""
    if env.feedback_kind not in agent.accepts:
        raise ConfigurationError(f"agent does not accept {env.feedback_kind!r} feedback")
    run = CombinatorialRun()
    agent_rng = rng.child("agent")
    for t in range(1, T + 1):
        a = agent.act(agent_rng)
        fb, cost = env.step(t, a)
        agent.observe(a, fb)
        run.actions.append(a)
        run.costs.append(cost)
    run.total_cost = math.fsum(run.costs)
    total_v = env.vectors[:T].sum(axis=0)
    run.best_action = opt_oracle(env.family, total_v)
    run.best_fixed_cost = env.family.cost(run.best_action, total_v)
    return run


# ---------------------------------------------------------------------------
# Follow the Perturbed Leader
# ---------------------------------------------------------------------------


def fpl_eps(d: int, U: float, T: int) -> float:
    return math.sqrt(d) / (U * math.sqrt(T))


class FPL:
    """Play the oracle's answer on the perturbed cumulative cost vector.

    The perturbation ``v0`` is drawn once, uniformly from
    ``[-1/eps, 1/eps]^d``. Passing ``v0`` explicitly (e.g. zeros for
    Follow-the-Leader) skips the draw.
    """

    accepts = frozenset({FULL})

    def __init__(self, family: ActionFamily, U: float, T: int, eps: Optional[float] = None,
                 v0: Optional[Sequence[float]] = None, check_range: bool = True):
        self.family = family
        self.d = family.d
        self.U = U
        self.eps = fpl_eps(self.d, U, T) if eps is None else eps
        if self.eps <= 0:
            raise DomainError("perturbation eps must be positive")
        self.v0 = None if v0 is None else np.asarray(v0, dtype=float)
        self.cum = np.zeros(self.d)
        self.check_range = check_range

    def act(self, rng, context=None):
        if self.v0 is None:
            self.v0 = rng.uniform(-1.0 / self.eps, 1.0 / self.eps, self.d)
        return opt_oracle(self.family, self.v0 + self.cum)

    def update(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if self.check_range and ((v < 0).any() or (v > self.U / self.d + 1e-12).any()):
            raise DomainError(f"hidden vector outside [0, U/d] = [0, {self.U / self.d}]")
        self.cum = self.cum + v

    def observe(self, action, feedback):
        self.update(feedback.c)


def follow_the_leader(family: ActionFamily) -> FPL:
    return FPL(family, U=1.0, T=1, eps=1.0, v0=np.zeros(family.d), check_range=False)


@dataclass
class BplTrace:
    actions: list
    cost: float
    opt: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.cost <= self.opt + self.bound + 1e-9


def bpl_diagnostic(family: ActionFamily, vectors, eps: float, v0: Sequence[float]) -> BplTrace:
    """Be-the-Perturbed-Leader on a known table: round ``t`` plays ``M(v_{0:t})``.

    Raises :class:`PropertyViolation` if ``cost(BPL) <= OPT + d/eps`` fails.
    """
    V = np.asarray(vectors, dtype=float)
    cum = np.asarray(v0, dtype=float).copy()
    actions = []
    costs = []
    for v in V:
        cum = cum + v
        a = opt_oracle(family, cum)
        actions.append(a)
        costs.append(family.cost(a, v))
    total = V.sum(axis=0)
    opt = family.cost(opt_oracle(family, total), total)
    tr = BplTrace(actions, math.fsum(costs), opt, family.d / eps)
    if not tr.holds:
        raise PropertyViolation(f"BPL cost {tr.cost} exceeds OPT {opt} + d/eps {tr.bound}")
    return tr


def telescoping_gap(family: ActionFamily, vectors, i: int, j: int) -> float:
    """``v_{i:j}.M(v_{i:j}) - sum_{t=i..j} v_t.M(v_{i:t})``; never negative."""
    V = np.asarray(vectors, dtype=float)
    cum = np.zeros(family.d)
    lhs = []
    for t in range(i, j + 1):
        cum = cum + V[t]
        lhs.append(family.cost(opt_oracle(family, cum), V[t]))
    return family.cost(opt_oracle(family, cum), cum) - math.fsum(lhs)


# ---------------------------------------------------------------------------
# Semi-bandits
# ---------------------------------------------------------------------------


class HedgeOverActions:
    """Hedge on an explicitly enumerated family, fed per-atom cost vectors."""

    accepts = frozenset({FULL})

    def __init__(self, family: ActionFamily, eps: float):
        self.family = family
        self.acts = family.actions()
        self.incidence = np.zeros((len(self.acts), family.d))
        for k, a in enumerate(self.acts):
            self.incidence[k, list(a)] = 1.0
        self.hedge = Hedge(len(self.acts), eps)

    def act(self, rng, context=None):
        return self.acts[self.hedge.act(rng)]

    def update(self, v) -> None:
        self.hedge.update(self.incidence @ np.asarray(v, dtype=float))

    def observe(self, action, feedback):
        self.update(feedback.c)


HEDGE = "hedge"
FPL_INNER = "fpl"


class AlgSB:
    """Semi-bandit to full-feedback reduction with atom-uniform exploration.

    With probability ``gamma`` an atom ``e`` is drawn uniformly and its cover
    action is played; the explored atom's fake cost is ``c(e) * d / gamma``
    and every other fake cost is 0. The inner full-feedback algorithm sees
    the fake atom vector.
    """

    accepts = frozenset({SEMI})

    def __init__(self, family: ActionFamily, gamma: float, T: int, inner: str = FPL_INNER):
        if not 0.0 < gamma <= 1.0:
            raise DomainError("gamma must lie in (0, 1]")
        self.family = family
        self.d = family.d
        self.gamma = gamma
        U = self.d ** 2 / gamma
        if inner == HEDGE:
            n = len(family.actions())
            self.inner = HedgeOverActions(family, hedge_eps_second_moment(max(n, 2), U, T))
        elif inner == FPL_INNER:
            self.inner = FPL(family, U=U, T=T)
        else:
            raise DomainError(f"unknown inner algorithm {inner!r}")
        for e in range(self.d):
            family.cover(e)
        self._explored: Optional[int] = None
        self.max_fake = 0.0

    def act(self, rng, context=None):
        if rng.random() < self.gamma:
            e = rng.integers(self.d)
            self._explored = e
            return self.family.cover(e)
        self._explored = None
        return self.inner.act(rng)

    def fake_costs(self, feedback: SemiBandit) -> np.ndarray:
        fake = np.zeros(self.d)
        if self._explored is not None:
            obs = dict(feedback.atoms)
            fake[self._explored] = obs[self._explored] * self.d / self.gamma
        return fake

    def observe(self, action, feedback):
        fake = self.fake_costs(feedback)
        self.max_fake = max(self.max_fake, float(fake.max()))
        self.inner.update(fake)


def exploration_event_probs(d: int, gamma: float) -> list[float]:
    """``P[Lambda_{t,e}]``: explore (prob gamma) and pick atom ``e`` (prob 1/d)."""
    return [gamma / d] * d


def random_layered_dag(rng: RngStream, layers: int, width: int) -> Dag:
    """Source, ``layers`` layers of ``width`` nodes, sink; random forward edges."""
    g = rng.generator
    names = [["s"]] + [[f"n{i}_{j}" for j in range(width)] for i in range(layers)] + [["t"]]
    edges = []
    for a, b in zip(names, names[1:]):
        for u in a:
            targets = [v for v in b if g.random() < 0.6] or [b[int(g.integers(len(b)))]]
            for v in targets:
                edges.append((len(edges), u, v))
    return Dag(edges, "s", "t")
