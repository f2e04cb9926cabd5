import hashlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from d1lc.coloring import try_color, try_random_color
from d1lc.engine import (COLORED, SAFETY, TRANSCRIPT_HEADER, ConflictDetected, OutOfPalette, ProtocolViolation,
                         SimState, check_proper, run_round, transcript_hash, two_hop_independence_probe)

from conftest import d1lc_instances, instance, random_d1lc, uniform


def silent(view):
    return None


def lowest(view):
    return view.palette[0]


def test_silent_round_only_advances():
    inst = random_d1lc(10, 0.4, 0)
    st_ = SimState(inst, 1)
    before = (st_.status.copy(), st_.color.copy(), st_.alive.copy())
    assert run_round(st_, silent) == {}
    assert st_.round == 1
    assert all(np.array_equal(a, b) for a, b in zip(before, (st_.status, st_.color, st_.alive)))


def test_independent_set_commits_without_conflict():
    inst = uniform(6, [], [0])
    st_ = SimState(inst)
    assert run_round(st_, lowest) == {v: 0 for v in range(6)}
    assert st_.is_complete() and check_proper(st_) == 0


def random_program(view):
    return view.rng.choice(view.palette) if view.palette else None


def test_threads_do_not_change_transcript():
    inst = random_d1lc(60, 0.2, 3)
    hashes = set()
    for threads in (1, 3, 8):
        st_ = SimState(inst, 11)
        for _ in range(6):
            run_round(st_, random_program, threads=threads)
        hashes.add((transcript_hash(st_), tuple(st_.color.tolist())))
    assert len(hashes) == 1


def test_direct_conflict_detected():
    inst = uniform(2, [(0, 1)], [0, 1])
    st_ = SimState(inst)
    with pytest.raises(ConflictDetected):
        st_.commit([0, 1], [0, 0])


def test_out_of_palette_detected():
    inst = uniform(2, [(0, 1)], [0, 1])
    st_ = SimState(inst)
    with pytest.raises(OutOfPalette):
        st_.commit([0], [7])
    st_ = SimState(inst)
    with pytest.raises(OutOfPalette):
        run_round(st_, lambda view: 9)


def test_colored_node_cannot_recommit():
    inst = uniform(1, [], [0, 1])
    st_ = SimState(inst)
    st_.commit([0], [0])
    with pytest.raises(ProtocolViolation):
        st_.commit([0], [1])


# -- transcript ---------------------------------------------------------------

def _run(inst, seed):
    st_ = SimState(inst, seed)
    for _ in range(3):
        try_random_color(st_, st_.uncolored(), skip_empty=True)
    return transcript_hash(st_)


def test_transcript_same_seed_equal():
    inst = random_d1lc(30, 0.3, 5)
    assert _run(inst, 4) == _run(inst, 4)


def test_transcript_seeds_differ():
    inst = random_d1lc(30, 0.3, 5)
    assert len({_run(inst, s) for s in range(100)}) == 100


def test_empty_graph_digest_is_header():
    header = int.from_bytes(hashlib.blake2b(TRANSCRIPT_HEADER, digest_size=8).digest(), "little")
    for seed in (0, 1, 2**63):
        st_ = SimState(instance(0, [], []), seed)
        try_random_color(st_, [])
        assert transcript_hash(st_) == header


# -- two-hop locality -----------------------------------------------------------

def one_try(state):
    try_random_color(state, state.uncolored())


def test_two_hop_isolated_node():
    inst = uniform(3, [(1, 2)], [0, 1, 2])
    for seed in range(20):
        a, b = two_hop_independence_probe(inst, one_try, 0, seed, adversary=lambda u: u * 7919 + seed)
        assert a == b


def test_two_hop_path_endpoint():
    inst = uniform(6, [(i, i + 1) for i in range(5)], [0, 1, 2])
    for seed in range(50):
        for adv in range(5):
            a, b = two_hop_independence_probe(inst, one_try, 0, seed, adversary=1000 + adv)
            assert (a is None) == (b is None) and a == b


def test_two_hop_star_center():
    inst = uniform(6, [(0, i) for i in range(1, 6)], range(6))
    for seed in range(20):
        a, b = two_hop_independence_probe(inst, one_try, 0, seed, adversary=seed + 1)
        assert a == b


# -- the trial rule -----------------------------------------------------------------

def test_try_color_empty_conflict_set_commits():
    inst = uniform(2, [(0, 1)], [0, 1])
    st_ = SimState(inst)
    res = try_color(st_, {0: 0, 1: 1}, plus_sets={0: [], 1: [0]})
    assert res == {0: True, 1: True}


def test_try_color_mutual_conflict_blocks_both():
    inst = uniform(2, [(0, 1)], [0, 1])
    st_ = SimState(inst)
    assert try_color(st_, {0: 0, 1: 0}) == {0: False, 1: False}
    assert try_color(SimState(inst), {0: 0, 1: 0}, plus_sets={0: [1], 1: [0]}) == {0: False, 1: False}


def test_try_color_oriented_pair():
    # u=0 in N-(v=1): v ignores u, u listens to v
    inst = uniform(2, [(0, 1)], [0, 1])
    st_ = SimState(inst)
    assert try_color(st_, {0: 0, 1: 0}, plus_sets={0: [1], 1: []}) == {0: False, 1: True}
    assert st_.color[1] == 0 and st_.color[0] == -1


def test_try_color_orientation_violation():
    inst = uniform(2, [(0, 1)], [0, 1])
    with pytest.raises(ProtocolViolation):
        try_color(SimState(inst), {0: 0, 1: 1}, plus_sets={0: [], 1: []})


# -- monotonicity and slack replay ------------------------------------------------------

@given(d1lc_instances(max_n=12, max_extra=2), st.integers(0, 2**32))
@settings(max_examples=150, deadline=None)
def test_rounds_monotone_and_slack_replay(inst, seed):
    g = inst.graph
    st_ = SimState(inst, seed)
    for _ in range(4):
        colored_before = st_.status == COLORED
        slack_before = st_.pal_size - st_.udeg
        pal_before = [set(st_.palette(v).tolist()) for v in range(inst.n)]
        try_random_color(st_, st_.uncolored(), skip_empty=True)
        assert np.all(st_.status[colored_before] == COLORED)
        assert check_proper(st_) == 0
        new = np.flatnonzero((st_.status == COLORED) & ~colored_before)
        for v in range(inst.n):
            nb = g.neighbors(v).tolist()
            taken = {int(st_.color[u]) for u in nb if st_.color[u] >= 0}
            pal = set(st_.palette(v).tolist())
            assert pal == set(inst.palette(v).tolist()) - taken
            assert pal <= pal_before[v]
            if st_.status[v] == COLORED:
                continue
            fresh = [u for u in nb if u in set(new.tolist())]
            lost = len(pal_before[v]) - len(pal)
            # slack gain = colored neighbors minus palette colors they removed
            assert st_.pal_size[v] - st_.udeg[v] - slack_before[v] == len(fresh) - lost
            assert len(fresh) >= lost


def test_safety_counters_move():
    before = SAFETY.snapshot()
    st_ = SimState(random_d1lc(20, 0.3, 1), 0)
    try_random_color(st_, st_.uncolored())
    after = SAFETY.snapshot()
    assert after["runs"] == before["runs"] + 1
    assert after["rounds"] == before["rounds"] + 1
    assert after["commits"] >= before["commits"]
    assert after["conflicts"] == before["conflicts"]
