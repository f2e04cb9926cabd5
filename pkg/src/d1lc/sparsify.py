"""Palette sparsification: every node samples a short list from its palette,
and the instance is colored using sampled colors only.

Only edges whose endpoints sampled a common color can conflict, so the
coloring runs on the conflict graph with the sampled lists as palettes. The
ordering follows the sparse/dense split of the original instance; nodes
that still get stuck are handed to an exact search on their component.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import rng as R
from .acd import SPARSE, UNEVEN, classify_sparse, compute_acd
from .coloring.config import PipelineConfig
from .coloring.dense import dense_pipeline, dense_roles
from .coloring.pipeline import components
from .coloring.primitives import slack_generation
from .engine import COLORED, UNCOLORED, SimState
from .graph import Graph, ListInstance
from .metrics import BulkMetrics
from .oracle import BudgetExceeded, solve_lists


def list_size(n, c_s):
    if c_s <= 0:
        raise ValueError("c_s must be positive")
    return max(1, math.ceil(c_s * math.log(max(n, 2)) ** 2))


def sample_lists(instance, c_s, seed=0):
    """L(v): min(ell_s, |palette|) colors of v's palette, uniformly without
    replacement, from v's own stream."""
    n = instance.n
    ell = list_size(n, c_s)
    nodes = np.arange(n, dtype=np.int64)
    seeds = np.full(n, R.as_seed(seed), np.uint64)
    alive = np.ones(len(instance.pal_colors), bool)
    ptr, cols = K.sample_palettes(nodes, np.full(n, ell, np.int64), instance.pal_ptr, instance.pal_colors,
                                  alive, seeds, nodes, 0, R.LISTS)
    return ListInstance(instance.graph, (ptr, cols))


def build_conflict_graph(instance, lists):
    """Edges of the instance whose endpoints' lists intersect."""
    g = instance.graph
    keep = K.lists_intersect(lists.pal_ptr, lists.pal_colors, g.eu, g.ev)
    return Graph.from_edge_arrays(g.n, g.eu[keep], g.ev[keep])


@dataclass
class SparsifyResult:
    success: bool
    coloring: np.ndarray
    stuck: list
    proven_unsolvable: bool
    conflict_edges: int
    repaired: bool = False
    extra: dict = field(default_factory=dict)

    def __bool__(self):
        return self.success


def _by_degree(nodes, degree):
    nodes = np.asarray(nodes, np.int64)
    return nodes[np.lexsort((nodes, -degree[nodes]))]


def color_from_samples(instance, lists, config=None, seed=0, low_c=1.0, repair_budget=20_000):
    """Color `instance` using only the colors in `lists`.

    Sparse and uneven nodes go first (start nodes, then the others, highest
    degree first in each), dense nodes then run the dense pipeline on the
    sampled palettes, low-degree nodes come last. Nodes left without a color
    trigger an exact search on their conflict-graph component; a search
    that runs out proves the sampled instance unsolvable there."""
    config = config or PipelineConfig.desk()
    g = instance.graph
    n = g.n
    H = build_conflict_graph(instance, lists)
    sub = ListInstance(H, (lists.pal_ptr, lists.pal_colors))
    state = SimState(sub, seed)
    if n == 0:
        return SparsifyResult(True, state.coloring(), [], False, 0)

    bm = BulkMetrics.of(instance)
    part = compute_acd(instance, config.ledger, bm, strict=False)
    cls = classify_sparse(instance, part, config.ledger, bm, config.variant)
    deg = g.degree
    low_deg = deg < low_c * math.log(max(n, 2)) ** 2
    kind = part.kind
    sparse = (kind == SPARSE) | (kind == UNEVEN)
    start = cls.start & ~low_deg
    rest = sparse & ~cls.start & ~low_deg

    slack_generation(state, np.flatnonzero(~low_deg), config.p_gen, skip_empty=True)
    state.greedy(_by_degree(np.flatnonzero(start), deg), "sparsify:start", skip_stuck=True)
    state.greedy(_by_degree(np.flatnonzero(rest), deg), "sparsify:sparse", skip_stuck=True)
    ell = config.ell_for(g.max_degree())
    roles = dense_roles(instance, part, ell)
    dense_pipeline(state, part, config, ell, roles=roles, skip_empty=True)
    state.set_status(np.flatnonzero((state.status != COLORED) & (state.status != UNCOLORED)), UNCOLORED)
    state.greedy(_by_degree(np.flatnonzero(low_deg), deg), "sparsify:low", skip_stuck=True)
    stuck = state.greedy(_by_degree(state.uncolored(), deg), "sparsify:left", skip_stuck=True)
    conflict_edges = H.m
    if not stuck:
        return SparsifyResult(True, state.coloring(), [], False, conflict_edges)
    return _repair(state, sub, stuck, repair_budget, conflict_edges)


def _repair(state, sub, stuck, budget, conflict_edges):
    """Exact search on every conflict-graph component holding a stuck node."""
    H = sub.graph
    color = state.coloring()
    comp_of = {}
    for comp in components(H, np.arange(H.n)):
        for v in comp.tolist():
            comp_of[v] = comp
    seen, proven, failed = set(), False, []
    for v in stuck:
        comp = comp_of[v]
        if int(comp[0]) in seen:
            continue
        seen.add(int(comp[0]))
        local = {int(u): i for i, u in enumerate(comp.tolist())}
        nbrs = [[local[int(w)] for w in H.neighbors(u).tolist()] for u in comp.tolist()]
        pals = [sub.palette(u).tolist() for u in comp.tolist()]
        try:
            sol, _ = solve_lists(nbrs, pals, budget=budget)
        except BudgetExceeded:
            failed.extend(u for u in stuck if int(comp_of[u][0]) == int(comp[0]))
            continue
        if sol is None:
            proven = True
            failed.extend(u for u in stuck if int(comp_of[u][0]) == int(comp[0]))
            continue
        for i, c in sol.items():
            color[int(comp[i])] = c
    if failed:
        return SparsifyResult(False, color, sorted(failed), proven, conflict_edges, repaired=True)
    return SparsifyResult(True, color, [], False, conflict_edges, repaired=True)


def sparsify_trial(instance, c_s, seed=0, config=None, low_c=1.0):
    lists = sample_lists(instance, c_s, seed)
    return lists, color_from_samples(instance, lists, config, seed, low_c)
