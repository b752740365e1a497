from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botlearn.graph import (
    DegreeSequence,
    ParameterError,
    SnapParseError,
    assumption_check,
    attach_bots,
    build_dcm,
    degree_stats,
    generate_degree_sequence,
    load_snap,
)
from strategies import seeds, sequences


def seq_of(d_out, d_in_a, d_in_b):
    return DegreeSequence(np.array(d_out), np.array(d_in_a), np.array(d_in_b))


# ---------------------------------------------------------------------------
# generator


def test_generate_no_bots_when_p_is_one():
    seq = generate_degree_sequence(4, 2.1, 1.0, seed=0)
    assert seq.d_in_b.tolist() == [0, 0, 0, 0]


def test_generate_mean_in_degree():
    seq = generate_degree_sequence(10_000, 2.1, 0.9, seed=1)
    assert 2.0 <= seq.d_in_a.mean() <= 2.2


@given(st.integers(1, 300), st.floats(1.01, 5.0), st.floats(0.05, 1.0), seeds)
@settings(max_examples=40)
def test_generate_balances_stubs(n, lam, p, seed):
    seq = generate_degree_sequence(n, lam, p, seed)
    assert seq.d_out.sum() == seq.d_in_a.sum()
    assert seq.d_out.min() >= 1 and seq.d_in_a.min() >= 1


@pytest.mark.parametrize("lam, p", [(1.0, 0.5), (0.5, 0.5), (2.1, 0.0), (2.1, 1.2)])
def test_generate_rejects_bad_parameters(lam, p):
    with pytest.raises(ParameterError):
        generate_degree_sequence(10, lam, p, seed=0)


def test_sequence_rejects_unbalanced():
    with pytest.raises(ParameterError):
        seq_of([2, 1], [1, 1], [0, 0])


# ---------------------------------------------------------------------------
# DCM construction


def test_single_agent_self_loop():
    g, trace, i_star = build_dcm(seq_of([1], [1], [0]), seed=0)
    assert i_star == 0
    assert g.src.tolist() == [0] and g.dst.tolist() == [0]


def test_two_agents_cycle_or_loops():
    seen = set()
    for seed in range(40):
        g, _, _ = build_dcm(seq_of([1, 1], [1, 1], [0, 0]), seed)
        edges = tuple(sorted(zip(g.src.tolist(), g.dst.tolist())))
        assert edges in {((0, 0), (1, 1)), ((0, 1), (1, 0))}
        seen.add(edges)
    assert len(seen) == 2


def test_realized_degrees_large():
    seq = generate_degree_sequence(1000, 2.1, 0.8, seed=5)
    g, _, _ = build_dcm(seq, seed=6)
    got = g.realized_sequence()
    np.testing.assert_array_equal(got.d_out, seq.d_out)
    np.testing.assert_array_equal(got.d_in_a, seq.d_in_a)
    np.testing.assert_array_equal(got.d_in_b, seq.d_in_b)


@given(sequences(max_n=12), seeds)
def test_realized_degrees_match(seq, seed):
    g, trace, i_star = build_dcm(seq, seed)
    got = g.realized_sequence()
    assert got.d_out.tolist() == seq.d_out.tolist()
    assert got.d_in_a.tolist() == seq.d_in_a.tolist()
    assert got.d_in_b.tolist() == seq.d_in_b.tolist()
    assert g.n_bots == seq.d_in_b.sum()
    bots = np.arange(g.n_agents, g.n_nodes)
    assert np.all(g.in_degree()[bots] == 1)
    assert np.all(g.out_degree()[bots] == 2)
    # every bot listens only to itself
    from_bot = g.src >= g.n_agents
    assert np.all(g.src[g.dst >= g.n_agents] == g.dst[g.dst >= g.n_agents])
    assert np.all((g.dst[from_bot] == g.src[from_bot]) | (g.dst[from_bot] < g.n_agents))


@given(sequences(max_n=10), seeds)
@settings(max_examples=25)
def test_build_is_reproducible(seq, seed):
    a, ta, ia = build_dcm(seq, seed)
    b, tb, ib = build_dcm(seq, seed)
    assert ia == ib and ta.tau == tb.tau
    np.testing.assert_array_equal(a.src, b.src)
    np.testing.assert_array_equal(a.dst, b.dst)


def _tree_certificate(g, trace, horizon):
    layers = trace.agent_layers[: horizon + 1]
    members = np.concatenate(layers)
    if len(set(members.tolist())) != members.size:
        return False
    inside = set(members.tolist())
    # each non-root agent in layers 1..horizon sends exactly one edge into the ball
    for layer in layers[1:]:
        for a in layer.tolist():
            out_in_ball = [d for s, d in zip(g.src.tolist(), g.dst.tolist()) if s == a and d in inside]
            if len(out_in_ball) != 1:
                return False
    return True


@given(sequences(min_n=5, max_n=30, max_deg=3), seeds, st.integers(1, 3))
@settings(max_examples=40)
def test_late_tau_means_tree_neighbourhood(seq, seed, horizon):
    g, trace, _ = build_dcm(seq, seed)
    if trace.tau_exceeds(horizon):
        assert _tree_certificate(g, trace, horizon)


def test_tau_reported_against_horizon():
    seq = generate_degree_sequence(2000, 2.1, 1.0, seed=2)
    _, trace, _ = build_dcm(seq, seed=3)
    assert trace.tau_label(10**6).startswith(">") or trace.tau <= 10**6
    assert trace.tau_label(0) in {"> 0", "0"}


def test_disconnected_sequence_completes():
    # five agents, one stub each: many closed cycles force restarts
    seq = seq_of([1] * 5, [1] * 5, [0] * 5)
    restarts = 0
    for seed in range(30):
        g, trace, _ = build_dcm(seq, seed)
        assert g.realized_sequence().d_in_a.tolist() == [1] * 5
        restarts += trace.restarts
    assert restarts > 0


def test_first_step_lands_on_agent_with_rate_p_star():
    seq = generate_degree_sequence(60, 2.1, 0.7, seed=11)
    p_star = degree_stats(seq).p_star
    rng = np.random.default_rng(0)
    hits, trials = 0, 3000
    for seed in range(trials):
        g, trace, i_star = build_dcm(seq, seed)
        sources = g.src[g.dst == i_star]
        hits += int(rng.choice(sources) < g.n_agents)
    se = math.sqrt(p_star * (1 - p_star) / trials)
    assert abs(hits / trials - p_star) <= 3 * se


def test_attach_bots_layout():
    base, _, _ = build_dcm(seq_of([1, 2], [2, 1], [0, 0]), seed=0)
    g = attach_bots(base, [2, 1])
    assert g.n_bots == 3
    assert g.realized_sequence().d_in_b.tolist() == [2, 1]
    assert g.in_degree()[2:].tolist() == [1, 1, 1]


# ---------------------------------------------------------------------------
# edge-list ingestion


def write(tmp_path, text, name="edges.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_snap_two_node_cycle(tmp_path):
    snap = load_snap(write(tmp_path, "0 1\n1 0\n"))
    assert snap.graph.n_agents == 2 and snap.graph.n_edges == 2
    assert snap.sequence.d_in_a.tolist() == [1, 1]
    assert snap.sequence.d_in_b.tolist() == [0, 0]


def test_snap_comment_and_compaction(tmp_path):
    snap = load_snap(write(tmp_path, "# comment\n5 7\n"))
    assert snap.graph.n_agents == 2
    assert snap.original_ids.tolist() == [5, 7]
    # node 5 has no in-neighbour, so it gets a self-loop
    assert snap.n_self_loops_added == 1
    assert snap.sequence.d_in_a.tolist() == [1, 1]


def test_snap_keeps_duplicates(tmp_path):
    snap = load_snap(write(tmp_path, "1 2\n1 2\n2 1\n"))
    src, dst, mult = snap.graph.edge_multiset()
    assert dict(zip(zip(src.tolist(), dst.tolist()), mult.tolist())) == {(0, 1): 2, (1, 0): 1}


def test_snap_malformed_line_number(tmp_path):
    with pytest.raises(SnapParseError, match=":3:"):
        load_snap(write(tmp_path, "0 1\n# ok\n1 x\n"))
    with pytest.raises(SnapParseError, match=":1:"):
        load_snap(write(tmp_path, "0 1 2\n"))


def test_snap_empty_file(tmp_path):
    with pytest.raises(SnapParseError):
        load_snap(write(tmp_path, "# nothing here\n"))


# ---------------------------------------------------------------------------
# statistics


def test_stats_without_bots():
    st_ = degree_stats(generate_degree_sequence(50, 2.1, 1.0, seed=0))
    assert st_.p == pytest.approx(1.0) and st_.p_star == pytest.approx(1.0)


def test_stats_two_agent_example():
    st_ = degree_stats(seq_of([1, 3], [2, 2], [0, 2]))
    assert st_.p == pytest.approx(0.625, abs=1e-15)
    assert st_.q == pytest.approx(float(Fraction(7, 32)), abs=1e-15)
    assert st_.r == pytest.approx(float(Fraction(7, 32)), abs=1e-15)


def test_stats_allocation_overrides():
    seq = seq_of([1, 3], [2, 2], [5, 5])
    assert degree_stats(seq, [0, 2]).p == pytest.approx(0.625, abs=1e-15)


def test_stats_unit_in_degree_kills_r():
    seq = seq_of([1, 1, 1], [1, 1, 1], [0, 2, 1])
    st_ = degree_stats(seq)
    assert st_.r == 0 and st_.r_star == 0


@given(sequences(max_n=15))
def test_stats_invariants(seq):
    s = degree_stats(seq)
    for v in (s.p, s.q, s.r, s.p_star, s.q_star, s.r_star):
        assert 0 <= v <= 1
    assert 0 < s.p <= 1 and 0 < s.p_star <= 1
    assert s.q <= s.p + 1e-15 and s.r <= s.p + 1e-15
    assert s.r >= s.p**2 - s.q - 1e-12
    assert s.nu3 / s.nu1 >= 1 - 1e-12


# ---------------------------------------------------------------------------
# assumptions


def test_assumption_flags_line_graph():
    rep = assumption_check(seq_of([1] * 4, [1] * 4, [0] * 4), horizon=3)
    assert rep["degenerate"] and not rep["branching"]


def test_assumption_max_horizon():
    seq = generate_degree_sequence(10_000, 2.1, 1.0, seed=4)
    rep = assumption_check(seq, horizon=5)
    nu1 = seq.d_out.sum() / seq.n
    nu3 = (seq.d_out * seq.d_in_a).sum() / seq.n
    assert rep["max_horizon"] == pytest.approx(0.49 * math.log(10_000) / math.log(nu3 / nu1), rel=1e-12)


@given(sequences(max_n=10))
@settings(max_examples=20)
def test_horizon_one_always_passes(seq):
    assert assumption_check(seq, horizon=1)["horizon_ok"]
