"""Single-round coloring primitives, vectorized over the participating nodes."""

import numpy as np

from .. import _kernels as K
from .. import rng as R
from ..engine import UNCOLORED, EmptyPalette, resolve


def _propose_and_commit(state, nodes, want, tag, priority=None, event="commit"):
    g, inst = state.graph, state.instance
    ptr, out = K.sample_palettes(nodes, want, inst.pal_ptr, inst.pal_colors, state.alive,
                                 state.node_seed, state.stream_id, state.round, tag)
    use = priority is not None
    prio = priority if use else np.zeros(1, np.int64)
    chosen = K.resolve_trials(g.n, nodes, ptr, out, g.indptr, g.indices, prio, use)
    ok = chosen >= 0
    state.commit(nodes[ok], chosen[ok], event)
    state.advance()
    return nodes[ok]


def _participants(state, nodes, skip_empty):
    nodes = np.asarray(nodes, np.int64)
    nodes = nodes[state.status[nodes] == UNCOLORED]
    empty = state.pal_size[nodes] == 0
    if empty.any():
        if not skip_empty:
            raise EmptyPalette(f"node {int(nodes[empty][0])} has an empty palette")
        nodes = nodes[~empty]
    return nodes


def try_color(state, proposals, plus_sets=None):
    """One round in which each node v of `proposals` sends its color and keeps
    it unless a neighbor in its conflict set sent the same color.

    Returns {node: committed?}."""
    for v, c in proposals.items():
        if c not in set(state.palette(v).tolist()):
            raise ValueError(f"color {c} is not in the current palette of node {v}")
    won, cols = resolve(state, proposals, plus_sets)
    state.commit(won, cols)
    state.advance()
    won = set(won.tolist())
    return {v: v in won for v in proposals}


def try_random_color(state, nodes, priority=None, skip_empty=False, event="commit"):
    """Every node in `nodes` tries a uniformly random color of its palette.
    Conflicts are checked against all other participants. Returns the nodes
    that got colored."""
    nodes = _participants(state, nodes, skip_empty)
    if not len(nodes):
        state.advance()
        return nodes
    return _propose_and_commit(state, nodes, np.ones(len(nodes), np.int64), R.TRY, priority, event)


def multi_trial(state, nodes, x, skip_empty=False, event="multitrial"):
    """Every node samples x colors (x may be per node; capped at the palette)
    and commits the lowest one that no participating neighbor sampled."""
    nodes = _participants(state, nodes, skip_empty)
    if not len(nodes):
        state.advance()
        return nodes
    want = np.broadcast_to(np.asarray(x, np.int64), nodes.shape).copy()
    want = np.maximum(want, 1)
    return _propose_and_commit(state, nodes, want, R.MULTI, None, event)


def slack_generation(state, targets, p_gen=0.1, skip_empty=False):
    """Sample each uncolored target with probability p_gen; the sample runs
    one TryRandomColor round among itself. Returns (sampled, colored)."""
    targets = np.asarray(targets, np.int64)
    targets = targets[state.status[targets] == UNCOLORED]
    sampled = state.sample(targets, R.SAMPLE, p_gen)
    colored = try_random_color(state, sampled, skip_empty=skip_empty, event="slackgen")
    return sampled, colored
