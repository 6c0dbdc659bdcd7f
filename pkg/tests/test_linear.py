import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditlab.core import FULL, SEMI, FullCosts, RngStream, SemiBandit
from banditlab.errors import ConfigurationError, DataError, DomainError, PropertyViolation
from banditlab.linear import (FPL, HEDGE, ActionFamily, AlgSB, Dag, LinearCostEnv, bpl_diagnostic,
                              exploration_event_probs, follow_the_leader, format_graph, fpl_eps, opt_oracle,
                              parse_graph, random_layered_dag, run_combinatorial, telescoping_gap)


def _brute(family, v):
    return min(family.actions(), key=lambda a: (sum(v[e] for e in a), a))


def _sync_vectors(T):
    return [[1 / 3, 2 / 3]] + [[1, 0] if t % 2 else [0, 1] for t in range(1, T)]


def test_oracle_examples():
    fam = ActionFamily.explicit([(2, 3), (0, 3), (1,), (0, 1, 2)], d=4)
    assert opt_oracle(fam, np.zeros(4)) == (0, 1, 2)
    dag = Dag([(0, "u", "v"), (1, "u", "v")], "u", "v")
    assert opt_oracle(ActionFamily.from_dag(dag), [0.3, 0.7]) == (0,)
    with pytest.raises(DomainError):
        ActionFamily.explicit([])
    with pytest.raises(DomainError):
        opt_oracle(fam, [0.0, math.nan, 0, 0])


def test_oracle_explicit_random_families():
    g = np.random.default_rng(0)
    for _ in range(20):
        d = 6
        acts = {tuple(sorted(g.choice(d, int(g.integers(1, d + 1)), replace=False).tolist())) for _ in range(10)}
        acts |= {(e,) for e in range(d)}
        fam = ActionFamily.explicit(acts, d)
        for _ in range(100):
            v = g.normal(size=d)
            assert opt_oracle(fam, v) == _brute(fam, v)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 3), st.booleans())
def test_dag_oracle_matches_brute_force(seed, layers, width, integer):
    dag = random_layered_dag(RngStream(seed), layers, width)
    fam = ActionFamily.from_dag(dag)
    g = RngStream(seed, ("v",)).generator
    v = g.integers(-3, 4, fam.d).astype(float) if integer else g.normal(size=fam.d)
    assert opt_oracle(fam, v) == _brute(fam, v)


def test_dag_strips_dead_edges_and_rejects_cycles():
    dag = parse_graph("edge 0 s a\nedge 1 a t\nedge 2 a x\nedge 3 y t\nedge 4 s t\nsource s\nsink t\n")
    assert dag.d == 3 and dag.original_ids == [0, 1, 4]
    assert dag.paths() == [(0, 1), (2,)]
    with pytest.raises(DataError):
        parse_graph("edge 0 s a\nedge 1 a s\nedge 2 a t\nsource s\nsink t\n")
    with pytest.raises(DataError):
        parse_graph("edge 0 s a\nsource s\nsink t\n")
    with pytest.raises(DataError):
        parse_graph("edge zero s t\nsource s\nsink t\n")
    with pytest.raises(DataError):
        parse_graph("edge 0 s t\nsource s\n")


def test_graph_round_trip(tmp_path):
    dag = random_layered_dag(RngStream(3), 3, 3)
    text = format_graph(dag)
    back = parse_graph(text)
    assert back.edges == dag.edges and format_graph(back) == text
    p = tmp_path / "g.txt"
    p.write_text(text)
    from banditlab.linear import load_graph
    assert load_graph(p).edges == dag.edges


def test_cover_and_uncovered_atom():
    fam = ActionFamily.explicit([(0, 1, 2), (1,), (0, 2)], d=3)
    assert fam.cover(0) == (0, 2) and fam.cover(1) == (1,)
    with pytest.raises(ConfigurationError):
        ActionFamily(3, [(0,), (1,)])
    dag_fam = ActionFamily.from_dag(random_layered_dag(RngStream(1), 3, 2))
    for e in range(dag_fam.d):
        c = dag_fam.cover(e)
        assert e in c
        assert len(c) == min(len(a) for a in dag_fam.actions() if e in a)


def test_fpl_eps_and_ftl():
    assert fpl_eps(4, 1, 100) == pytest.approx(0.2)
    fam = ActionFamily.explicit([(0,), (1,)])
    T = 100
    run = run_combinatorial(LinearCostEnv(fam, _sync_vectors(T)), follow_the_leader(fam), T, RngStream(0))
    # first round pays 1/3, every later round pays 1
    assert run.total_cost == pytest.approx(T - 2 / 3, abs=1e-12)
    assert run.best_fixed_cost <= 1 + T / 2


def test_fpl_range_and_single_draw():
    fam = ActionFamily.explicit([(0,), (1,), (2,), (3,)])
    fpl = FPL(fam, U=1.0, T=100)
    fpl.act(RngStream(0))
    v0 = fpl.v0.copy()
    assert (np.abs(v0) <= 1 / fpl.eps).all()
    fpl.update([0.1, 0.2, 0.0, 0.25])
    fpl.act(RngStream(1))
    assert (fpl.v0 == v0).all()
    with pytest.raises(DomainError):
        fpl.update([0.3, 0, 0, 0])
    with pytest.raises(DomainError):
        fpl.update([-0.1, 0, 0, 0])


def test_fpl_replay_bit_exact():
    dag = random_layered_dag(RngStream(2), 3, 2)
    fam = ActionFamily.from_dag(dag)
    V = RngStream(2).generator.random((200, fam.d)) / fam.d
    runs = [run_combinatorial(LinearCostEnv(fam, V), FPL(fam, 1.0, 200), 200, RngStream(9)) for _ in range(2)]
    assert runs[0].actions == runs[1].actions and runs[0].total_cost == runs[1].total_cost


def test_bpl_examples():
    fam = ActionFamily.explicit([(0, 1), (2,), (1, 3)], d=4)
    tr = bpl_diagnostic(fam, np.zeros((10, 4)), 0.5, np.zeros(4))
    assert tr.cost == 0 == tr.opt
    for s in range(100):
        g = RngStream(s).generator
        eps = 0.3
        tr = bpl_diagnostic(fam, g.random((50, 4)), eps, g.uniform(-1 / eps, 1 / eps, 4))
        assert tr.holds


def test_bpl_violation_reported():
    fam = ActionFamily.explicit([(0,), (1,)])
    with pytest.raises(PropertyViolation):
        # a huge perturbation pins BPL to the bad action and d/eps is tiny
        bpl_diagnostic(fam, [[1, 0]] * 50, 1e3, [-1e6, 0])


def test_telescoping():
    g = np.random.default_rng(5)
    fam = ActionFamily.from_dag(random_layered_dag(RngStream(5), 3, 3))
    V = g.random((40, fam.d))
    for _ in range(50):
        i, j = sorted(g.integers(0, 40, 2).tolist())
        assert telescoping_gap(fam, V, i, j) >= -1e-12


def test_algsb_event_probs_and_fake_bound():
    assert exploration_event_probs(4, 0.2) == pytest.approx([0.05] * 4)
    fam = ActionFamily.from_dag(random_layered_dag(RngStream(4), 3, 2))
    T = 400
    V = RngStream(4).generator.random((T, fam.d))
    for inner in ("fpl", HEDGE):
        agent = AlgSB(fam, 0.2, T, inner)
        run = run_combinatorial(LinearCostEnv(fam, V, SEMI), agent, T, RngStream(1))
        assert agent.max_fake <= fam.d / 0.2 + 1e-12
        assert len(run.actions) == T
    with pytest.raises(DomainError):
        AlgSB(fam, 0.0, T)
    with pytest.raises(DomainError):
        AlgSB(fam, 0.2, T, "ftrl")


def test_algsb_unbiased_by_enumeration():
    fam = ActionFamily.explicit([(0, 1), (2,), (1, 2)], d=3)
    c = [0.3, 0.9, 0.5]
    gamma = 0.25
    agent = AlgSB(fam, gamma, 100)
    expected = np.zeros(3)
    # explore branch: atom e with probability gamma/d; exploit branch contributes 0
    for e in range(3):
        agent._explored = e
        a = fam.cover(e)
        expected += gamma / 3 * agent.fake_costs(SemiBandit(tuple((k, c[k]) for k in a)))
    agent._explored = None
    assert (agent.fake_costs(SemiBandit(((0, 0.3),))) == 0).all()
    assert expected == pytest.approx(c)


def test_env_feedback_shapes():
    fam = ActionFamily.explicit([(0, 1), (2,)])
    env = LinearCostEnv(fam, [[0.1, 0.2, 0.3]])
    fb, cost = env.step(1, (0, 1))
    assert isinstance(fb, FullCosts) and cost == pytest.approx(0.3)
    env = LinearCostEnv(fam, [[0.1, 0.2, 0.3]], SEMI)
    fb, _ = env.step(1, (2,))
    assert fb == SemiBandit(((2, 0.3),))
    with pytest.raises(DomainError):
        LinearCostEnv(fam, [[0.1, 0.2]])
    with pytest.raises(ConfigurationError):
        run_combinatorial(env, follow_the_leader(fam), 1, RngStream(0))
    assert FULL in follow_the_leader(fam).accepts
    assert list(itertools.chain(*fam.actions())) == [0, 1, 2]
