import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from d1lc import generators as G
from d1lc.acd import CliqueRole, EpsilonLedger, classify_sparse, compute_acd
from d1lc.coloring import (InvalidKappa, PipelineConfig, combined, degree_classes, dense_pipeline, dense_roles,
                           full_coloring, low_degree_sample, multi_trial, put_aside, round_bound,
                           slack_color, slack_generation, sparse_pipeline, synch_color_trial, transversal,
                           try_color, try_random_color)
from d1lc.coloring.dense import p_disj
from d1lc.coloring.pipeline import VIRTUAL_BASE, components, working_state
from d1lc.coloring.slackcolor import initial_rounds, log_star, tower
from d1lc.coloring.transversal import EmptyPart, is_independent
from d1lc.engine import BAD, COLORED, TERMINATED, UNCOLORED, EngineError, LeaderPaletteExhausted, SimState
from d1lc.graph import Graph, ListInstance
from d1lc.oracle import verify_coloring

from conftest import d1lc_instances, random_d1lc, uniform

DESK = PipelineConfig.desk()


def clique(m, palette=None):
    return uniform(m, [(u, v) for u in range(m) for v in range(u + 1, m)], palette or range(m))


# -- single-round primitives -------------------------------------------------

def commit_rate(inst, node, trials=10_000):
    hits = 0
    for s in range(trials):
        st_ = SimState(inst, s, count_run=False)
        try_random_color(st_, np.arange(inst.n))
        hits += st_.status[node] == COLORED
    return hits / trials


def test_isolated_node_always_commits():
    st_ = SimState(uniform(1, [], [3, 4]), 0)
    assert try_random_color(st_, [0]).tolist() == [0]


def test_edge_commit_rate():
    # 4 equally likely outcomes, two of them distinct
    assert abs(commit_rate(uniform(2, [(0, 1)], [1, 2]), 0) - 1 / 2) <= 0.02


def test_triangle_commit_rate():
    # of 27 outcomes, node 0 is alone with its color in 3 * 2 * 2 = 12
    assert abs(commit_rate(clique(3, [1, 2, 3]), 0) - 4 / 9) <= 0.02


def test_try_color_rejects_foreign_color():
    with pytest.raises(ValueError):
        try_color(SimState(uniform(1, [], [0])), {0: 5})


def test_slack_generation_p_zero_is_silent():
    inst = random_d1lc(40, 0.2, 1)
    st_ = SimState(inst, 3)
    sampled, colored = slack_generation(st_, np.arange(40), p_gen=0.0)
    assert len(sampled) == len(colored) == 0
    assert np.all(st_.status == UNCOLORED) and st_.alive.all()


def test_slack_generation_only_touches_sample():
    inst = random_d1lc(200, 0.05, 2)
    st_ = SimState(inst, 5)
    sampled, colored = slack_generation(st_, np.arange(100), p_gen=0.5)
    assert set(colored.tolist()) <= set(sampled.tolist()) <= set(range(100))
    assert np.all(st_.status[100:] == UNCOLORED)


def test_multi_trial_without_neighbors_commits():
    inst = uniform(3, [], [0, 1, 2, 3])
    for x in (1, 2, 4, 9):
        st_ = SimState(inst, x)
        assert len(multi_trial(st_, np.arange(3), x)) == 3


def test_multi_trial_full_palette_silent_neighbors():
    inst = clique(5)
    st_ = SimState(inst, 1)
    assert multi_trial(st_, [2], 5).tolist() == [2]
    # the lowest sampled color wins
    assert st_.color[2] == 0


def test_multi_trial_neighbors_share_everything():
    # two nodes sampling the whole identical palette block each other completely
    inst = uniform(2, [(0, 1)], [0, 1])
    st_ = SimState(inst, 0)
    assert len(multi_trial(st_, [0, 1], 2)) == 0


# -- SlackColor ------------------------------------------------------------------

def test_round_bound_arithmetic():
    assert initial_rounds(2) == math.ceil(2 * math.log(8))
    assert log_star(1) == 0 and log_star(2) == 1 and log_star(16) == 3 and log_star(65536) == 4
    assert [tower(i) for i in range(5)] == [1, 2, 4, 16, 65536]
    rho = 100 ** (2 / 3)
    assert round_bound(100, Fraction(1, 2)) == initial_rounds(2) + 2 * (log_star(rho) + 1) + 3 * 2 + 1


def test_invalid_kappa():
    st_ = SimState(random_d1lc(10, 0.3, 0), 0)
    with pytest.raises(InvalidKappa):
        slack_color(st_, np.arange(10), s_min=2, kappa=Fraction(1, 2))
    with pytest.raises(InvalidKappa):
        slack_color(st_, np.arange(10), s_min=100, kappa=Fraction(3, 2))


def test_slack_color_isolated_targets():
    st_ = SimState(uniform(20, [], range(5)), 0)
    res = slack_color(st_, np.arange(20), s_min=5)
    assert len(res.colored) == 20 and len(res.bad) == 0 and len(res.terminated) == 0


@given(st.integers(0, 2**32), st.sampled_from([Fraction(1, 2), Fraction(1, 4), Fraction(1)]),
       st.integers(2, 4))
@settings(max_examples=30, deadline=None)
def test_slack_color_round_bound_and_outcomes(seed, kappa, factor):
    inst = G.planted_slack(300, 12, factor=factor, seed=seed % 1000)
    st_ = SimState(inst, seed)
    s_min = max(int(st_.slacks(np.arange(300)).min()), 3)
    res = slack_color(st_, np.arange(300), s_min=s_min, kappa=kappa)
    assert res.rounds <= res.bound == round_bound(s_min, kappa)
    assert set(st_.status.tolist()) <= {COLORED, TERMINATED, BAD}
    assert len(res.colored) + len(res.terminated) + len(res.bad) == 300
    assert verify_coloring(inst, st_.coloring()) == []


def test_slack_color_planted_slack_colors_nearly_all():
    for seed in range(5):
        inst = G.planted_slack(2000, 60, factor=2, seed=seed)
        st_ = SimState(inst, seed)
        res = slack_color(st_, np.arange(inst.n), s_min=int(st_.slacks(np.arange(inst.n)).min()))
        assert len(res.colored) >= 0.999 * inst.n


# -- sparse pipeline -----------------------------------------------------------

def test_sparse_pipeline_noop_on_dense_instance():
    inst = G.union_of_cliques(2, 30)
    part = compute_acd(inst, DESK.ledger)
    cls = classify_sparse(inst, part, DESK.ledger)
    st_ = SimState(inst, 0)
    sparse_pipeline(st_, part, cls, DESK)
    assert np.all(st_.status == UNCOLORED)


def test_fig1a_apex_colored_before_clique():
    for seed in range(10):
        trace = []
        st_, rep, _ = combined(G.fig1a(20), DESK, seed=seed, trace=trace)
        assert rep.complete
        first = {}
        for rnd, v, event, c in trace:
            if c >= 0:
                first.setdefault(v, rnd)
        assert first[0] < min(first[v] for v in range(1, st_.n))


def test_sparse_pipeline_on_sparse_gnp():
    inst = G.gnp(2000, d=40, seed=7)
    part = compute_acd(inst, DESK.ledger, strict=False)
    cls = classify_sparse(inst, part, DESK.ledger)
    low = np.flatnonzero(part.kind <= 1)
    for seed in range(3):
        st_ = SimState(inst, seed)
        sparse_pipeline(st_, part, cls, DESK)
        assert np.mean(st_.status[low] == COLORED) >= 0.99


# -- dense pipeline ----------------------------------------------------------------

def test_p_disj_formula():
    assert p_disj(16, 512) == 256 / 24576 == 1 / 96
    assert p_disj(100, 10) == 1.0


def test_synch_on_identical_clique_decolors_nothing():
    for m in (8, 30, 64):
        inst = clique(m)
        part = compute_acd(inst, DESK.ledger)
        roles = dense_roles(inst, part, ell=10)
        st_ = SimState(inst, m)
        dec = synch_color_trial(st_, roles)
        assert dec == {0: 0}
        inl = roles[0].inliers
        assert len(set(st_.color[inl].tolist())) == len(inl)


def test_synch_skips_foreign_color():
    inst = ListInstance(Graph(3, [(0, 1), (0, 2), (1, 2)]), [[0, 1, 2], [0, 1, 2], [5, 6, 7]])
    role = CliqueRole(np.arange(3), 0, np.array([0]), np.array([1, 2]), 0.0, 0, True)
    st_ = SimState(inst, 0)
    assert synch_color_trial(st_, [role]) == {0: 1}
    assert st_.status[1] == COLORED and st_.status[2] == UNCOLORED


def test_synch_leader_short_of_colors():
    inst = ListInstance(Graph(3, [(0, 1), (0, 2)]), [[0], [0, 1], [0, 1]])
    role = CliqueRole(np.arange(3), 0, np.array([0]), np.array([1, 2]), 0.0, 0, True)
    with pytest.raises(LeaderPaletteExhausted):
        synch_color_trial(SimState(inst, 0), [role])
    assert synch_color_trial(SimState(inst, 0), [role], strict=False) == {0: 1}


def test_put_aside_without_external_edges():
    inst = G.union_of_cliques(3, 60)
    part = compute_acd(inst, DESK.ledger)
    roles = dense_roles(inst, part, ell=10)
    for seed in range(20):
        pa = put_aside(SimState(inst, seed), roles, 10, part.clique_of, part.delta)
        for cid in pa.sampled:
            assert np.array_equal(pa.kept[cid], pa.sampled[cid])
            assert pa.prob[cid] == p_disj(10, 59)


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_put_aside_cross_independence(seed):
    inst = G.low_slack_cliques(4, 50, p_ext=0.02, seed=seed % 97)
    part = compute_acd(inst, DESK.ledger, strict=False)
    roles = dense_roles(inst, part, ell=30)
    pa = put_aside(SimState(inst, seed), roles, 30, part.clique_of, part.delta)
    g = inst.graph
    for cid, P in pa.kept.items():
        S, inl = set(pa.sampled[cid].tolist()), set(roles[cid].inliers.tolist())
        assert set(P.tolist()) <= S <= inl
    kept = pa.all_kept()
    assert is_independent_across(g, pa.kept)
    sampled = np.concatenate(list(pa.sampled.values())) if pa.sampled else np.zeros(0, np.int64)
    in_s = np.zeros(g.n, bool)
    in_s[sampled] = True
    for v in kept.tolist():
        ext = [u for u in g.neighbors(v).tolist() if part.clique_of[u] != part.clique_of[v]]
        assert not in_s[ext].any()


def is_independent_across(g, kept):
    owner = np.full(g.n, -1)
    for cid, P in kept.items():
        owner[P] = cid
    a, b = owner[g.eu], owner[g.ev]
    return not np.any((a >= 0) & (b >= 0) & (a != b))


def test_high_slack_clique_gets_no_put_aside():
    inst = G.union_of_cliques(1, 40, scheme="random", extra=40)
    part = compute_acd(inst, DESK.ledger)
    roles = dense_roles(inst, part, ell=10)
    assert not roles[0].low_slack
    res = dense_pipeline(SimState(inst, 0), part, DESK, 10, roles=roles)
    assert res.put_aside.kept == {}


def test_dense_pipeline_single_clique():
    for m in (10, 50, 120):
        inst = clique(m)
        part = compute_acd(inst, DESK.ledger)
        st_ = SimState(inst, m)
        res = dense_pipeline(st_, part, DESK, ell=DESK.ell_for(m - 1))
        assert st_.is_complete()
        assert verify_coloring(inst, st_.coloring(), complete=True) == []
        assert res.roles[0].low_slack


def test_dense_pipeline_noop_without_dense_nodes():
    inst = uniform(5, [(i, i + 1) for i in range(4)], range(3))
    part = compute_acd(inst, EpsilonLedger.desk(eps_spa=Fraction(1, 4)))
    st_ = SimState(inst, 0)
    dense_pipeline(st_, part, DESK, 10)
    assert np.all(st_.status == UNCOLORED)


def test_dense_pipeline_put_aside_failure_is_fatal():
    # a put-aside node whose palette was emptied behind the protocol's back
    inst = clique(30)
    part = compute_acd(inst, DESK.ledger)
    st_ = SimState(inst, 0)
    st_.alive[:] = False
    st_.pal_size[:] = 0
    with pytest.raises(EngineError):
        dense_pipeline(st_, part, DESK.with_(p_gen=0.0), ell=30)


# -- degree classes and the full algorithm ------------------------------------------

def test_degree_classes_faithful():
    seq = degree_classes(2 ** 64, PipelineConfig.faithful())
    assert seq[:3] == [2 ** 64, 2 ** 42, math.ceil(42 ** 7)]
    assert all(a > b for a, b in zip(seq, seq[1:]))


def test_degree_classes_constant_floor():
    assert degree_classes(10 ** 4, DESK) == [10 ** 4, 32]
    assert degree_classes(20, DESK) == [20]


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(p_gen=1.0)
    c = DESK.with_(ell=7)
    assert c.ell_for(10 ** 6) == 7 and DESK.ell_for(16) == DESK.ledger.ell(16)
    assert DESK.s_min_floor() == 3


@given(d1lc_instances(max_n=14, max_extra=2), st.integers(0, 2**32), st.integers(1, 4))
@settings(max_examples=150, deadline=None)
def test_full_coloring_is_complete(inst, seed, d_min):
    st_, rep = full_coloring(inst, DESK.with_(d_min=d_min), seed)
    assert rep.complete and rep.conflicts == 0
    assert verify_coloring(inst, rep.coloring, complete=True) == []


def test_full_coloring_mid_size():
    inst = G.gnp(3000, d=60, seed=2)
    st_, rep = full_coloring(inst, DESK, seed=1)
    assert rep.complete and verify_coloring(inst, rep.coloring, complete=True) == []
    names = [p.phase for p in rep.phases]
    assert "class1" in names and names[-1] == "total"


def test_combined_on_empty_graph():
    st_, rep, res = combined(uniform(0, [], []), DESK)
    assert rep.complete and len(res.bad) == 0


def test_working_state_pads_low_degree():
    # star center works alone: its induced degree 0 is padded up to the floor
    inst = uniform(5, [(0, i) for i in range(1, 5)], range(5))
    st_ = SimState(inst, 0)
    ws, nodes = working_state(st_, np.array([0]), floor=3)
    assert nodes.tolist() == [0] and ws.n == 4
    assert ws.graph.degree.tolist() == [3, 1, 1, 1]
    assert np.all(ws.stream_id[1:] >= VIRTUAL_BASE)
    # virtual colors are fresh
    assert not set(ws.instance.palette(1).tolist()) & set(range(5))


def test_components():
    g = Graph(6, [(0, 1), (1, 2), (4, 5)])
    comps = components(g, np.array([0, 1, 2, 3, 4, 5]))
    assert sorted(sorted(c.tolist()) for c in comps) == [[0, 1, 2], [3], [4, 5]]
    assert components(g, np.array([0, 2])).__len__() == 2


# -- transversal -------------------------------------------------------------------

def test_low_degree_sample_keeps_edgeless_set():
    g = Graph(50)
    P = np.arange(0, 50, 2)
    assert np.array_equal(low_degree_sample(g, P, 0.5, 1, seed=3), P)


def test_low_degree_sample_small_threshold_is_independent():
    inst = random_d1lc(300, 0.05, 4)
    for seed in range(20):
        S = low_degree_sample(inst.graph, np.arange(300), q=2.0, B=2.0, seed=seed)
        assert is_independent(inst.graph, S)


def test_transversal_edgeless():
    g = Graph(4 * 512)
    parts = [np.arange(i * 512, (i + 1) * 512) for i in range(4)]
    nodes, counts = transversal(g, parts, 0.5, seed=1, max_degree=64)
    assert is_independent(g, nodes)
    # each stage keeps a node with probability 1/(2q), q = 64^(1/3) = 4
    assert counts.sum() == len(nodes)
    assert abs(len(nodes) / 2048 - (1 / 8) ** 3) < 0.01


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_transversal_independent(seed):
    graph, parts = G.transversal_parts(parts=4, size=256, matchings=16, seed=seed % 50)
    nodes, _ = transversal(graph, parts, 0.5, seed=seed)
    assert is_independent(graph, nodes)


def test_transversal_rejects_bad_delta_and_reports_empty_part():
    g = Graph(8)
    with pytest.raises(ValueError):
        transversal(g, [np.arange(8)], 0.3)
    with pytest.raises(EmptyPart):
        transversal(g, [np.arange(4), np.arange(4, 8)], 0.5, max_degree=10 ** 6, strict=True)
