import numpy as np
import pytest

from banditlab.adversarial import EXP3, Hedge
from banditlab.core import RngStream
from banditlab.errors import ConfigurationError, DataError, DomainError
from banditlab.games import (BANDIT, EXPECTED, REALIZED, GameMatrix, approx_nash_check, average_joint,
                             best_response_adversary, cce_check, equilibrium_report, expected_regrets, f_value,
                             format_matrix, h_value, hedge_pair, hedge_regret_bound, load_matrix, minimax_selfplay,
                             parse_matrix, realized_regrets, repeated_game, solve_2x2)

PENNIES = [[0.0, 1.0], [1.0, 0.0]]


def test_constant_matrix_gap_zero():
    row, col = hedge_pair([[0.4, 0.4], [0.4, 0.4]], 50)
    trace, rep = repeated_game(row, col, [[0.4, 0.4], [0.4, 0.4]], 50, RngStream(0))
    assert rep.duality_gap == pytest.approx(0.0, abs=1e-15)
    assert trace.average_cost() == pytest.approx(0.4)


def test_pennies_hedge_vs_hedge_averages():
    row, col = hedge_pair(PENNIES, 10**4)
    trace, rep = repeated_game(row, col, PENNIES, 10**4, RngStream(1))
    assert np.abs(rep.p_bar - 0.5).max() <= 0.05
    assert np.abs(rep.q_bar - 0.5).max() <= 0.05
    R, Rc = realized_regrets(PENNIES, trace)
    T = 10**4
    assert 0.5 - Rc / T - 1e-12 <= trace.average_cost() <= 0.5 + R / T + 1e-12


def test_dimension_and_mode_errors():
    with pytest.raises(ConfigurationError):
        repeated_game(Hedge(3, 0.1), Hedge(2, 0.1), PENNIES, 5, RngStream(0))
    with pytest.raises(DomainError):
        repeated_game(Hedge(2, 0.1), Hedge(2, 0.1), PENNIES, 5, RngStream(0), "psychic")
    with pytest.raises(ConfigurationError):
        repeated_game(Hedge(2, 0.1), Hedge(2, 0.1), PENNIES, 5, RngStream(0), BANDIT)


def test_bandit_feedback_with_exp3():
    T = 2000
    trace, rep = repeated_game(EXP3.for_horizon(2, T), EXP3.for_horizon(2, T), PENNIES, T, RngStream(2), BANDIT)
    assert len(trace.rows) == T and rep.duality_gap >= 0


def test_best_response_adversary():
    A = [[0.2, 0.9, 0.9], [0.5, 0.1, 0.3]]
    br = best_response_adversary(A)
    br.set_row_distribution([1.0, 0.0])
    assert br.act() == 1
    br = best_response_adversary(PENNIES)
    br.set_row_distribution([0.5, 0.5])
    assert br.act() == 0
    with pytest.raises(ConfigurationError):
        br.act()


def test_best_response_dominance_and_inequality():
    A = np.asarray([[0.1, 0.8, 0.4], [0.7, 0.2, 0.5], [0.3, 0.6, 0.9]])
    T = 500
    trace, _ = repeated_game(Hedge.for_horizon(3, T), best_response_adversary(A), A, T, RngStream(3))
    for p, j in zip(trace.p, trace.cols):
        assert (p @ A)[j] >= (p @ A).max() - 1e-15
    p_bar = np.mean(trace.p, axis=0)
    expected_cost = np.mean([p @ A[:, j] for p, j in zip(trace.p, trace.cols)])
    assert f_value(A, p_bar) <= expected_cost + 1e-12


def test_minimax_selfplay_examples():
    rep = minimax_selfplay(PENNIES, 0.01)
    assert abs(rep.value_estimate - 0.5) <= 0.01 and rep.converged
    one = minimax_selfplay([[0.7]], 0.01)
    assert one.value_estimate == pytest.approx(0.7) and one.duality_gap == pytest.approx(0.0, abs=1e-15)
    capped = minimax_selfplay(np.random.default_rng(0).random((4, 4)), 1e-9, T0=16, max_T=64)
    assert not capped.converged and capped.certified_eps == capped.duality_gap
    with pytest.raises(DomainError):
        minimax_selfplay(PENNIES, 0.0)


def test_selfplay_random_matrices_weak_duality_and_shrinkage():
    g = np.random.default_rng(1)
    for _ in range(5):
        A = g.random((4, 4))
        gaps = []
        for T in (200, 3200):
            row, col = hedge_pair(A, T)
            _, rep = repeated_game(row, col, A, T, RngStream(7), EXPECTED)
            assert h_value(A, rep.q_bar) <= f_value(A, rep.p_bar) + 1e-12
            gaps.append(rep.duality_gap)
        assert gaps[1] <= gaps[0]


def test_solve_2x2_cross_check():
    v, p, q = solve_2x2(PENNIES)
    assert v == 0.5 and p.tolist() == [0.5, 0.5] and q.tolist() == [0.5, 0.5]
    A = [[0.3, 0.8], [0.6, 0.2]]
    v, p, q = solve_2x2(A)
    rep = minimax_selfplay(A, 0.002)
    assert abs(rep.value_estimate - v) <= 0.002
    assert f_value(A, p) == pytest.approx(v) and h_value(A, q) == pytest.approx(v)
    v, p, q = solve_2x2([[0.1, 0.2], [0.5, 0.6]])
    assert v == 0.2 and p.tolist() == [1, 0] and q.tolist() == [0, 1]


def test_approx_nash_examples():
    assert approx_nash_check([0.5, 0.5], [0.5, 0.5], PENNIES, 0.0, 0.5).passed
    bad = approx_nash_check([1, 0], [1, 0], PENNIES, 0.4, 0.5)
    assert not bad.passed and min(bad.row_margin, bad.col_margin) == pytest.approx(-0.1)
    assert bad.row_margin == pytest.approx(-0.1) and bad.col_margin == pytest.approx(-0.1)


def test_approx_nash_from_regrets_and_cce():
    T = 4000
    for s in range(5):
        row, col = hedge_pair(PENNIES, T)
        trace, rep = repeated_game(row, col, PENNIES, T, RngStream(s))
        R, Rc = realized_regrets(PENNIES, trace)
        assert approx_nash_check(rep.p_bar, rep.q_bar, PENNIES, (R + Rc) / T, rep.value_estimate).passed
        sigma = average_joint(trace)
        u = float((sigma * np.asarray(PENNIES)).sum())
        assert u == pytest.approx(np.mean([p @ np.asarray(PENNIES) @ q for p, q in zip(trace.p, trace.q)]),
                                  abs=1e-12)


def test_cce_examples():
    A = np.asarray(PENNIES)
    assert cce_check(np.full((2, 2), 0.25), A, A, 0.0).passed
    dom = np.asarray([[0.9, 0.9], [0.1, 0.1]])  # row 0 is dominated for the cost-minimizer
    sigma = np.array([[1.0, 0.0], [0.0, 0.0]])
    res = cce_check(sigma, dom, -dom, 0.5)
    assert not res.passed and res.row_margin == pytest.approx(-0.3)
    with pytest.raises(DomainError):
        cce_check([[0.5, 0.6], [0, 0]], A, A, 0.1)


def test_cce_on_expected_hedge_run():
    T = 3000
    A = np.random.default_rng(2).random((3, 3))
    row, col = hedge_pair(A, T)
    trace, _ = repeated_game(row, col, A, T, RngStream(0), EXPECTED)
    R, Rc = expected_regrets(A, trace)
    eps = max(R, Rc) / T
    assert eps <= hedge_regret_bound(T, 3, GameMatrix(A).span) / T
    assert cce_check(average_joint(trace), A, A, eps).passed


def test_stochastic_matrices_driver():
    mats = [[[0, 1], [1, 0]], [[0.2, 0.8], [0.8, 0.2]]]
    mean = np.mean(mats, axis=0)
    row, col = hedge_pair(mean, 200)
    trace, rep = repeated_game(row, col, mean, 200, RngStream(0), REALIZED, matrices=mats)
    assert all(m is not None for m in trace.matrices)
    assert rep.duality_gap >= 0


def test_report_and_matrix_files(tmp_path):
    rep = equilibrium_report(PENNIES, [1, 0], [0.5, 0.5])
    assert rep.value_estimate == pytest.approx(0.75) and rep.duality_gap == pytest.approx(0.5)
    text = format_matrix([[1, -2.5], [0.25, 3]])
    assert parse_matrix(text).M.tolist() == [[1, -2.5], [0.25, 3]]
    p = tmp_path / "m.txt"
    p.write_text("2 2\n0 1\n1 0\n")
    assert load_matrix(p).M.tolist() == PENNIES
    for bad in ("", "2 2 1 2 3", "x y", "0 0"):
        with pytest.raises(DataError):
            parse_matrix(bad)
    with pytest.raises(DomainError):
        GameMatrix([[np.inf]])
    assert GameMatrix([[2.0]]).span == 1.0
