"""The combined algorithm on one degree range and the full coloring over
all degree ranges, with component-wise greedy for nodes that end up Bad."""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..acd import FAILED, classify_sparse, compute_acd
from ..engine import BAD, COLORED, UNCOLORED, SimState, check_proper
from ..graph import D1lcInstance, Graph
from ..metrics import BulkMetrics
from .config import PipelineConfig, degree_classes
from .dense import dense_pipeline
from .primitives import try_random_color
from .report import PhaseLog, PhaseRecord
from .sparse import sparse_pipeline

VIRTUAL_BASE = 1 << 40


@dataclass
class CombinedResult:
    partition: object
    classification: object
    sparse: object
    dense: object
    bad: np.ndarray


def combined_state(state, config, log=None, skip_empty=False, strict_acd=False):
    """ACD, sparse pipeline and dense pipeline on every node of `state`.
    Nodes the decomposition cannot place, and nodes the pipelines give up
    on, are left uncolored and reported as Bad."""
    inst = state.instance
    bm = BulkMetrics.of(inst)
    part = compute_acd(inst, config.ledger, bm, strict=strict_acd)
    failed = part.nodes_of(FAILED)
    state.set_status(failed[state.status[failed] == UNCOLORED], BAD, "unplaced")
    cls = classify_sparse(inst, part, config.ledger, bm, config.variant)
    sp = sparse_pipeline(state, part, cls, config, log=log, skip_empty=skip_empty)
    ell = config.ell_for(inst.graph.max_degree())
    dn = dense_pipeline(state, part, config, ell, log=log, skip_empty=skip_empty)
    bad = np.flatnonzero(state.status != COLORED)
    state.set_status(bad, BAD)
    return CombinedResult(part, cls, sp, dn, bad)


def components(graph, nodes):
    """Connected components of the subgraph induced on `nodes`."""
    nodes = np.asarray(nodes, np.int64)
    if not len(nodes):
        return []
    sub, nodes = graph.induced(nodes)
    adj = coo_matrix((np.ones(sub.m), (sub.eu, sub.ev)), shape=(sub.n, sub.n))
    k, lab = connected_components(adj, directed=False)
    order = np.argsort(lab, kind="stable")
    bounds = np.searchsorted(lab[order], np.arange(k + 1))
    return [nodes[order[bounds[i]:bounds[i + 1]]] for i in range(k)]


def greedy_components(state, nodes, event="fallback"):
    """Sequential greedy inside each connected component of `nodes`; the
    components run in parallel, so the round cost is the largest one."""
    comps = components(state.graph, nodes)
    for comp in comps:
        stuck = state.greedy(comp, event)
        if stuck is not None:
            raise RuntimeError(f"greedy fallback got stuck at node {stuck}")
    longest = max((len(c) for c in comps), default=0)
    state.advance(longest)
    return comps


def working_state(state, work, floor, label=0):
    """Sub-state on the uncolored nodes `work` with their current palettes.
    Nodes whose induced degree is below `floor` get private virtual
    neighbors with fresh colors, which never touch the real graph."""
    g, inst = state.graph, state.instance
    work = np.unique(np.asarray(work, np.int64))
    if len(work) == g.n and state.alive.all() and np.all(g.degree >= floor):
        # nothing colored and nobody to pad: the working instance is the input
        ws = SimState(inst, state.seed, stream_ids=state.stream_id, trace=state.trace, count_run=False)
        ws.node_seed[:] = state.node_seed
        ws.round = state.round
        ws._digest = state._digest
        return ws, work
    sub, nodes = g.induced(work)
    k = len(nodes)
    pad = np.maximum(floor - sub.degree, 0)
    nv = int(pad.sum())
    owner = np.repeat(np.arange(g.n), inst.pal_len)
    local = np.full(g.n, -1, np.int64)
    local[nodes] = np.arange(k)
    sel = state.alive & (local[owner] >= 0)
    real_cols = inst.pal_colors[sel]
    real_len = np.bincount(local[owner[sel]], minlength=k)
    base = inst.num_colors()
    virt_cols = base + np.arange(2 * nv, dtype=np.int64)
    lens = np.concatenate([real_len, np.full(nv, 2, np.int64)])
    ptr = np.zeros(k + nv + 1, np.int64)
    np.cumsum(lens, out=ptr[1:])
    colors = np.concatenate([real_cols, virt_cols])
    vo = np.repeat(np.arange(k), pad)
    vid = k + np.arange(nv)
    lo = np.concatenate([sub.eu, vo])
    hi = np.concatenate([sub.ev, vid])
    order = np.lexsort((hi, lo))
    wg = Graph.from_edge_arrays(k + nv, lo[order], hi[order])
    winst = D1lcInstance(wg, (ptr, colors))
    sids = np.concatenate([state.stream_id[nodes], VIRTUAL_BASE + (label << 32) + np.arange(nv)])
    ws = SimState(winst, state.seed, stream_ids=sids, trace=state.trace, count_run=False)
    ws.node_seed[:k] = state.node_seed[nodes]
    ws.round = state.round
    ws._digest = state._digest
    return ws, nodes


def absorb(state, sub, nodes):
    """Copy the real nodes' commits of a finished sub-state back."""
    k = len(nodes)
    done = np.flatnonzero(sub.status[:k] == COLORED)
    state.commit(nodes[done], sub.color[done], record=False)
    state.round = sub.round
    return nodes[sub.status[:k] != COLORED]


@dataclass
class RunReport:
    phases: list
    coloring: np.ndarray
    complete: bool
    rounds: int
    bad: int
    max_bad_component: int
    conflicts: int
    transcript: int
    bad_components: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def _finish_report(state, log, bad_total, comps):
    maxc = max((len(c) for c in comps), default=0)
    total = PhaseRecord("total", rounds=state.round, colored=int(np.sum(state.status == COLORED)),
                        bad=bad_total, max_bad_component=maxc, conflicts=check_proper(state))
    log.records.append(total)
    return RunReport(log.records, state.coloring(), state.is_complete(), state.round, bad_total, maxc,
                     total.conflicts, state.transcript_hash(), [c.tolist() for c in comps])


def _run_class(state, log, name, work, floor, config, label):
    sub, nodes = working_state(state, work, floor, label)
    sublog = PhaseLog(sub)
    with log.phase(name) as rec:
        res = combined_state(sub, config, log=sublog)
        bad = absorb(state, sub, nodes)
    for r in sublog.records:
        r.phase = f"{name}:{r.phase}"
    comps = components(state.graph, bad)
    rec.bad = len(bad)
    rec.max_bad_component = max((len(c) for c in comps), default=0)
    log.records.extend(sublog.records)
    with log.phase(f"{name}:fallback"):
        greedy_components(state, bad)
    return res, comps


def finish_remainder(state, log, config, name="remainder"):
    """Random trials on whatever is left, then greedy."""
    with log.phase(name) as rec:
        for _ in range(config.remainder_rounds):
            left = state.uncolored()
            if not len(left):
                break
            try_random_color(state, left, event="remainder")
        left = state.uncolored()
        rec.bad = len(left)
        if len(left):
            comps = greedy_components(state, left, "remainder-greedy")
            rec.max_bad_component = max(len(c) for c in comps)


def full_coloring(instance, config=None, seed=0, trace=None):
    """Degree classes from n downward; each class runs the combined
    algorithm on nodes of large current uncolored degree, then greedy on
    the Bad components; the low-degree remainder is finished last."""
    config = config or PipelineConfig.desk()
    state = SimState(instance, seed, trace=trace)
    log = PhaseLog(state)
    bad_total, all_comps = 0, []
    classes = degree_classes(instance.n, config)
    for i in range(1, len(classes)):
        floor = classes[i]
        work = np.flatnonzero((state.status == UNCOLORED) & (state.udeg >= floor))
        if not len(work):
            continue
        _, comps = _run_class(state, log, f"class{i}", work, floor, config, i)
        bad_total += sum(len(c) for c in comps)
        all_comps.extend(comps)
    finish_remainder(state, log, config)
    return state, _finish_report(state, log, bad_total, all_comps)


def combined(instance, config=None, seed=0, trace=None, finish=True):
    """The combined algorithm on the whole instance as one degree range.
    With finish, Bad nodes are then colored by the component greedy."""
    config = config or PipelineConfig.desk()
    state = SimState(instance, seed, trace=trace)
    log = PhaseLog(state)
    res = combined_state(state, config, log=log)
    bad = res.bad
    comps = components(state.graph, bad)
    if finish and len(bad):
        state.set_status(bad, UNCOLORED)
        with log.phase("fallback"):
            greedy_components(state, bad)
    return state, _finish_report(state, log, len(bad), comps), res
