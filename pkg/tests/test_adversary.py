from fractions import Fraction
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botlearn.adversary import (
    HEURISTICS,
    Strategy,
    c_delta,
    exact_solve,
    exchange_delta,
    exchange_optimal,
    exhaustive_minimum,
    gn_identity_rhs,
    gn_leave_one_out,
    gn_value,
    heuristic_allocate,
    kkt_multipliers,
    kkt_residuals,
    mconvexity_probe,
    objective_ptilde,
    pagerank,
    pagerank_terms,
    randomized_round,
    relaxed_solve,
    threshold_value,
)
from botlearn.graph import DegreeSequence, MultiDigraph, ParameterError, build_dcm, generate_degree_sequence
from strategies import sequence_and_allocation, seeds, sequences


def loose(d_out, d_in_a):
    # objective-only instances need not balance their stubs
    return DegreeSequence(np.array(d_out), np.array(d_in_a), np.zeros(len(d_out), dtype=np.int64), strict=False)


FIVE = loose([3, 1, 2, 1, 2], [1, 2, 2, 3, 1])


# ---------------------------------------------------------------------------
# objective


def test_objective_two_agent_example():
    seq = loose([1, 3], [2, 2])
    assert objective_ptilde(seq, [0, 2]) == pytest.approx(float(Fraction(5, 8)), abs=1e-15)
    assert objective_ptilde(seq, [0, 0]) == 1.0


@given(sequence_and_allocation(), st.data())
def test_objective_decreases_when_adding_a_bot(case, data):
    seq, d = case
    i = data.draw(st.integers(0, seq.n - 1))
    more = d.copy()
    more[i] += 1
    assert objective_ptilde(seq, more) < objective_ptilde(seq, d)
    assert 0 < objective_ptilde(seq, more) <= 1


@given(sequence_and_allocation(), st.data())
def test_exchange_delta_matches_reevaluation(case, data):
    seq, d = case
    holders = np.flatnonzero(d >= 1)
    if holders.size == 0:
        return
    i = int(data.draw(st.sampled_from(holders.tolist())))
    j = data.draw(st.integers(0, seq.n - 1).filter(lambda x: x != i))
    moved = d.copy()
    moved[i] -= 1
    moved[j] += 1
    want = objective_ptilde(seq, moved) - objective_ptilde(seq, d)
    assert exchange_delta(seq, d, i, j) == pytest.approx(want, abs=1e-13)


def test_objective_shape_checked():
    with pytest.raises(ParameterError):
        objective_ptilde(FIVE, [1, 2])


# ---------------------------------------------------------------------------
# exact solver


def test_exact_two_agents():
    seq = loose([10, 1], [1, 1])
    res = exact_solve(seq, 1)
    assert res.d.tolist() == [1, 0]
    assert res.objective == pytest.approx(6 / 11, abs=1e-15)
    assert objective_ptilde(seq, [0, 1]) == pytest.approx(21 / 22, abs=1e-15)


def test_exact_zero_budget():
    res = exact_solve(FIVE, 0)
    assert res.d.tolist() == [0] * 5 and res.objective == 1.0 and res.iterations == 0


def test_exact_symmetric_spreads_evenly():
    seq = loose([2] * 6, [2] * 6)
    for b in (3, 6, 13):
        d = exact_solve(seq, b, warm_start="cold").d
        assert d.sum() == b and d.max() - d.min() <= 1


def test_exact_five_agent_regression():
    value, arg = exhaustive_minimum(FIVE, 3)
    assert value == pytest.approx(35 / 54, abs=1e-15)
    assert arg.tolist() == [1, 0, 1, 0, 1]
    assert exact_solve(FIVE, 3, seed=4).objective == pytest.approx(35 / 54, abs=1e-14)


@given(sequences(min_n=2, max_n=5, bots=False), st.integers(0, 6), seeds)
@settings(max_examples=80)
def test_exact_matches_exhaustive(seq, b, seed):
    res = exact_solve(seq, b, seed=seed)
    best, _ = exhaustive_minimum(seq, b)
    assert res.d.sum() == b and res.d.min() >= 0
    assert res.objective == pytest.approx(best, abs=1e-12)
    assert exchange_optimal(seq, res.d)


@given(sequences(min_n=2, max_n=30, bots=False), st.integers(1, 40), seeds)
@settings(max_examples=40)
def test_exact_trace_and_warm_starts(seq, b, seed):
    warm = exact_solve(seq, b, warm_start="relaxed", seed=seed)
    cold = exact_solve(seq, b, warm_start="cold")
    assert all(y < x for x, y in zip(warm.trace, warm.trace[1:]))
    assert all(y < x for x, y in zip(cold.trace, cold.trace[1:]))
    assert warm.objective == pytest.approx(cold.objective, abs=1e-12)
    assert warm.iterations <= 10 * b + 10


def test_exact_rejects_bad_warm_start():
    with pytest.raises(ParameterError):
        exact_solve(FIVE, 3, warm_start=[1, 1, 0, 0, 0])
    with pytest.raises(ParameterError):
        exact_solve(FIVE, -1)


# ---------------------------------------------------------------------------
# relaxation


def test_relaxed_symmetric_is_flat():
    seq = loose([3] * 4, [3] * 4)
    sol = relaxed_solve(seq, 10)
    np.testing.assert_allclose(sol.d_rel, 10 / 4, rtol=1e-13)


def test_relaxed_threshold_tie():
    seq = loose([4, 1], [1, 1])
    assert threshold_value(seq, 1, 2.0) == pytest.approx(1.0, abs=1e-15)
    assert threshold_value(seq, 1, 1.0) == pytest.approx(1.0, abs=1e-15)
    sol = relaxed_solve(seq, 1)
    assert sol.h_star == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(sol.d_rel, [1.0, 0.0], atol=1e-14)


@given(sequences(min_n=1, max_n=40, bots=False), st.integers(1, 60))
def test_relaxed_kkt(seq, b):
    sol = relaxed_solve(seq, b)
    res = kkt_residuals(seq, sol)
    scale = 1.0 / seq.m
    assert res["stationarity"] <= 1e-9 * scale + 1e-15
    assert res["complementarity"] <= 1e-9 * scale + 1e-15
    assert res["budget"] <= 1e-9 * b
    assert res["min_d"] >= 0 and res["min_nu"] >= 0
    lam, _ = kkt_multipliers(seq, sol)
    assert lam == pytest.approx(sol.h_star**2 / seq.m)
    assert sol.h_star == pytest.approx(sol.h_values.max())


@given(sequences(min_n=2, max_n=5, bots=False), st.integers(1, 6), seeds)
@settings(max_examples=40)
def test_relaxed_is_a_lower_bound(seq, b, seed):
    sol = relaxed_solve(seq, b)
    relaxed = objective_ptilde(seq, sol.d_rel)
    assert relaxed <= exhaustive_minimum(seq, b)[0] + 1e-12
    rng = np.random.default_rng(seed)
    for _ in range(5):
        other = rng.dirichlet(np.ones(seq.n)) * b
        assert relaxed <= objective_ptilde(seq, other) + 1e-12


# ---------------------------------------------------------------------------
# randomized rounding


def test_rounding_point_mass():
    seq = loose([4, 1], [1, 1])
    out = randomized_round(relaxed_solve(seq, 1), 5, seed=0)
    assert out.d.tolist() == [5, 0] and out.draws.tolist() == [0] * 5


def test_rounding_is_unbiased():
    seq = generate_degree_sequence(12, 2.1, 1.0, seed=3)
    b = 7
    sol = relaxed_solve(seq, b)
    ds = np.array([randomized_round(sol, b, s).d for s in range(10_000)])
    se = ds.std(axis=0, ddof=1) / sqrt(ds.shape[0])
    assert np.all(np.abs(ds.mean(axis=0) - sol.d_rel) <= 3 * se + 1e-12)


def test_rounding_rejects_empty_relaxation():
    sol = relaxed_solve(loose([1, 1], [1, 1]), 2)
    sol.d_rel[:] = 0
    with pytest.raises(ParameterError):
        randomized_round(sol, 2, seed=0)


# ---------------------------------------------------------------------------
# g_n function


@given(sequences(min_n=1, max_n=10, bots=False), st.lists(st.integers(0, 9), max_size=15))
def test_gn_identity_and_self_bounding(seq, raw):
    draws = np.array([w % seq.n for w in raw], dtype=np.int64)
    d = np.bincount(draws, minlength=seq.n)
    g = gn_value(seq, draws)
    assert g == pytest.approx(gn_identity_rhs(seq, d), abs=1e-12 * max(1.0, g))
    diffs = gn_leave_one_out(seq, draws)
    assert np.all(diffs >= -1e-12) and np.all(diffs <= 1 + 1e-12)
    assert diffs.sum() <= g + 1e-12


def test_c_delta_values():
    assert c_delta(1.0) == pytest.approx(1 / 36)
    assert c_delta(0.0) == 0.0


# ---------------------------------------------------------------------------
# heuristics


def test_pagerank_on_cycle_is_uniform():
    n = 7
    g = MultiDigraph(n, 0, np.arange(n), (np.arange(n) + 1) % n)
    pr = pagerank(g, eps=0.2)
    J = pagerank_terms(0.2)
    want = 0.2 / n * sum(0.8**j for j in range(J + 1))
    np.testing.assert_allclose(pr, want, rtol=1e-13)


def test_pagerank_term_counts():
    assert pagerank_terms(0.15, "tail", 0.01) == 28
    assert 0.85 ** (28 + 1) <= 0.01 < 0.85**28
    assert pagerank_terms(0.15, "literal", 0.01) == 0


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
def test_pagerank_rejects_bad_eps(eps):
    with pytest.raises(ParameterError):
        pagerank_terms(eps)


def test_pagerank_favours_the_listened_to():
    # agent 0 is heard by everyone; it listens to agent 1
    g = MultiDigraph(4, 0, np.array([0, 0, 0, 1]), np.array([1, 2, 3, 0]))
    pr = pagerank(g)
    assert pr[0] == pr.max()


@pytest.mark.parametrize("strategy", HEURISTICS)
def test_heuristics_spend_the_budget(strategy):
    seq = generate_degree_sequence(200, 2.1, 1.0, seed=5)
    g, _, _ = build_dcm(seq, seed=5)
    d = heuristic_allocate(seq, g, 37, strategy, seed=1)
    assert d.sum() == 37 and d.min() >= 0
    again = heuristic_allocate(seq, g, 37, strategy, seed=1)
    assert np.array_equal(d, again)


def test_heuristic_rejects_solver_names():
    with pytest.raises(ParameterError):
        heuristic_allocate(FIVE, None, 3, Strategy.EXACT, seed=0)


# ---------------------------------------------------------------------------
# M-convexity


def test_exchange_inequality_hand_pair():
    seq = loose([3, 1, 2], [1, 2, 2])
    x, y = np.array([2, 0, 1]), np.array([0, 2, 1])
    x2, y2 = np.array([1, 1, 1]), np.array([1, 1, 1])
    lhs = objective_ptilde(seq, x) + objective_ptilde(seq, y)
    assert lhs >= objective_ptilde(seq, x2) + objective_ptilde(seq, y2)


@given(sequences(min_n=2, max_n=8, bots=False), st.integers(1, 10), seeds)
@settings(max_examples=30)
def test_mconvexity_probe_finds_no_violation(seq, b, seed):
    rep = mconvexity_probe(seq, b, 40, seed)
    assert rep["violations"] == 0
