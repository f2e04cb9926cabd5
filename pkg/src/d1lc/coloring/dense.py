"""Coloring of dense nodes: roles, put-aside sets, synchronized color trial,
SlackColor on outliers and then on the rest, put-aside sets last."""

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels as K
from .. import rng as R
from ..acd import CliqueRole, clique_roles
from ..engine import COLORED, UNCOLORED, EngineError, LeaderPaletteExhausted
from ..metrics import BulkMetrics
from .primitives import slack_generation
from .sparse import run_slack_color


def dense_roles(instance, partition, ell):
    """Clique roles computed on the subgraph induced by the dense nodes,
    reported in the ids of `instance`."""
    dense = partition.dense
    if not len(dense):
        return []
    H, nodes = instance.induced(dense)
    part = partition.restrict(nodes)
    roles = clique_roles(H, part, metrics=BulkMetrics.of(H), ell=ell, degree=H.graph.degree)
    return [CliqueRole(nodes[r.clique], int(nodes[r.leader]), nodes[r.outliers], nodes[r.inliers],
                       r.sigma, r.sigma_exact, r.low_slack) for r in roles]


@dataclass
class PutAsideSets:
    sampled: dict = field(default_factory=dict)    # clique id -> S_C
    kept: dict = field(default_factory=dict)       # clique id -> P_C
    prob: dict = field(default_factory=dict)       # clique id -> p_disj

    def all_kept(self):
        parts = list(self.kept.values())
        return np.concatenate(parts) if parts else np.zeros(0, np.int64)


def p_disj(ell, delta_c):
    return min(1.0, ell * ell / (48 * delta_c))


def put_aside(state, roles, ell, clique_of, deltas, cliques=None):
    """Sample uncolored inliers of each chosen clique w.p. ell^2/(48 Delta_C)
    and keep those with no sampled neighbor in another clique. One round."""
    if cliques is None:
        cliques = [cid for cid, r in enumerate(roles) if r.low_slack]
    out = PutAsideSets()
    in_s = np.zeros(state.n, bool)
    for cid in cliques:
        inl = roles[cid].inliers
        inl = inl[state.status[inl] == UNCOLORED]
        p = p_disj(ell, deltas[cid])
        s = state.sample(inl, R.PUT_ASIDE, p)
        out.sampled[cid], out.prob[cid] = s, p
        in_s[s] = True
    g = state.graph
    hit = in_s[g.eu] & in_s[g.ev] & (clique_of[g.eu] != clique_of[g.ev])
    blocked = np.zeros(state.n, bool)
    blocked[g.eu[hit]] = True
    blocked[g.ev[hit]] = True
    for cid, s in out.sampled.items():
        out.kept[cid] = s[~blocked[s]]
    state.advance()
    return out


def synch_color_trial(state, roles, exclude=None, event="synch", strict=True):
    """Each leader sends distinct colors of its randomly permuted palette to
    its uncolored inliers; an inlier tries its color if it still has it.
    Returns {clique id: number of decolored inliers}.

    With strict=False a leader short of colors serves only as many inliers
    as it has colors (lowest ids first) instead of raising."""
    nodes, cols, owners = [], [], {}
    for cid, r in enumerate(roles):
        U = r.inliers[state.status[r.inliers] == UNCOLORED]
        if exclude is not None:
            U = U[~exclude[U]]
        if not len(U):
            continue
        x = r.leader
        pal = state.palette(x)
        if len(pal) < len(U) and strict:
            raise LeaderPaletteExhausted(f"leader {x} has {len(pal)} colors for {len(U)} inliers")
        keys = K.stream_draws(state.node_seed[x], state.stream_id[x], state.round, R.PERMUTE, len(pal))
        cand = pal[np.argsort(keys, kind="stable")][:len(U)]
        owners[cid] = U
        for u, c in zip(U[:len(cand)].tolist(), cand.tolist()):
            lo, hi = state.instance.pal_ptr[u], state.instance.pal_ptr[u + 1]
            seg = state.instance.pal_colors[lo:hi]
            j = lo + np.searchsorted(seg, c)
            if j < hi and state.instance.pal_colors[j] == c and state.alive[j]:
                nodes.append(u)
                cols.append(c)
    if nodes:
        order = np.argsort(nodes, kind="stable")
        nodes = np.asarray(nodes, np.int64)[order]
        cols = np.asarray(cols, np.int64)[order]
        g = state.graph
        ptr = np.arange(len(nodes) + 1, dtype=np.int64)
        chosen = K.resolve_trials(g.n, nodes, ptr, cols, g.indptr, g.indices, np.zeros(1, np.int64), False)
        ok = chosen >= 0
        state.commit(nodes[ok], chosen[ok], event)
    state.advance()
    return {cid: int(np.sum(state.status[U] != COLORED)) for cid, U in owners.items()}


@dataclass
class DenseResult:
    roles: list
    put_aside: PutAsideSets
    decolored: dict
    outliers: object = None
    rest: object = None


def dense_pipeline(state, partition, config, ell, roles=None, log=None, skip_empty=False):
    dense = partition.dense
    dense = dense[state.status[dense] == UNCOLORED]
    if not len(dense):
        return DenseResult([], PutAsideSets(), {})
    if roles is None:
        roles = dense_roles(state.instance, partition, ell)

    def step(name, fn):
        if log is None:
            return fn()
        with log.phase(name) as rec:
            out = fn()
        if hasattr(out, "bad"):
            rec.bad = len(out.bad) + len(out.terminated)
        return out

    step("dense:slackgen", lambda: slack_generation(state, dense, config.p_gen, skip_empty))
    pa = step("dense:putaside", lambda: put_aside(state, roles, ell, partition.clique_of, partition.delta))
    in_p = np.zeros(state.n, bool)
    in_p[pa.all_kept()] = True
    outl = np.concatenate([r.outliers for r in roles]) if roles else np.zeros(0, np.int64)
    r_out = step("dense:outliers", lambda: run_slack_color(state, outl, config, skip_empty))
    dec = step("dense:synch", lambda: synch_color_trial(state, roles, exclude=in_p, strict=not skip_empty))
    rest = dense[~in_p[dense]]
    r_rest = step("dense:rest", lambda: run_slack_color(state, rest, config, skip_empty))

    def finish():
        # leaders gather the put-aside palettes and color them locally
        for cid in sorted(pa.kept):
            stuck = state.greedy(np.sort(pa.kept[cid]), "putaside", skip_stuck=skip_empty)
            if not skip_empty and stuck is not None:
                raise EngineError(f"put-aside node {stuck} has no color left")
        state.advance(2)

    step("dense:finish", finish)
    return DenseResult(roles, pa, dec, r_out, r_rest)
