"""Synchronous LOCAL-model execution with snapshot reads and atomic commits.

Every color enters the state through `SimState.commit`, which checks palette
membership and adjacency conflicts before the round closes. Algorithms either
compute all proposals of a round at once (vectorized primitives in
`d1lc.coloring`) or supply a per-node program to `run_round`.
"""

import hashlib
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels as K
from . import rng as R

UNCOLORED, COLORED, TERMINATED, BAD = K.UNCOLORED, K.COLORED, K.TERMINATED, K.BAD
STATUS_NAMES = {UNCOLORED: "uncolored", COLORED: "colored", TERMINATED: "terminated", BAD: "bad"}


class EngineError(RuntimeError):
    pass


class ConflictDetected(EngineError):
    pass


class ProtocolViolation(EngineError):
    pass


class OutOfPalette(ProtocolViolation):
    pass


class EmptyPalette(EngineError):
    pass


class LeaderPaletteExhausted(EngineError):
    pass


class SafetyLedger:
    """Process-wide tally of runs, commits and safety failures."""

    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        self.runs = 0
        self.rounds = 0
        self.commits = 0
        self.conflicts = 0
        self.out_of_palette = 0

    def add(self, **kw):
        with self._lock:
            for k, v in kw.items():
                setattr(self, k, getattr(self, k) + v)

    def snapshot(self):
        return dict(runs=self.runs, rounds=self.rounds, commits=self.commits,
                    conflicts=self.conflicts, out_of_palette=self.out_of_palette)


SAFETY = SafetyLedger()

TRANSCRIPT_HEADER = b"d1lc-transcript-v1"


class SimState:
    def __init__(self, instance, seed=0, stream_ids=None, trace=None, count_run=True):
        self.instance = instance
        self.graph = g = instance.graph
        n = g.n
        self.n = n
        self.seed = int(seed)
        self.node_seed = np.full(n, R.as_seed(seed), np.uint64)
        self.stream_id = np.arange(n, dtype=np.int64) if stream_ids is None else np.asarray(stream_ids, np.int64)
        self.status = np.zeros(n, np.int8)
        self.color = np.full(n, -1, np.int64)
        self.alive = np.ones(len(instance.pal_colors), bool)
        self.pal_size = instance.pal_len.astype(np.int64).copy()
        self.udeg = g.degree.astype(np.int64).copy()
        self.round = 0
        self.trace = trace
        self._digest = hashlib.blake2b(TRANSCRIPT_HEADER, digest_size=8)
        self._pending = []
        self.commits = 0
        if count_run:
            SAFETY.add(runs=1)

    # -- queries -------------------------------------------------------
    def palette(self, v):
        lo, hi = self.instance.pal_ptr[v], self.instance.pal_ptr[v + 1]
        return self.instance.pal_colors[lo:hi][self.alive[lo:hi]]

    def uncolored_mask(self):
        return self.status == UNCOLORED

    def uncolored(self):
        return np.flatnonzero(self.status == UNCOLORED)

    def degree_in(self, nodes, mask):
        """Number of neighbors of each node lying in `mask`."""
        nodes = np.asarray(nodes, np.int64)
        return K.masked_degree(nodes, self.graph.indptr, self.graph.indices, mask)

    def slack(self, v, scope=None):
        """|current palette| minus number of uncolored neighbors (in scope)."""
        if scope is None:
            d = self.udeg[v]
        else:
            mask = scope & (self.status != COLORED)
            d = self.degree_in([v], mask)[0]
        return int(self.pal_size[v] - d)

    def slacks(self, nodes, mask=None):
        nodes = np.asarray(nodes, np.int64)
        if mask is None:
            return self.pal_size[nodes] - self.udeg[nodes]
        return self.pal_size[nodes] - self.degree_in(nodes, mask)

    def coloring(self):
        return self.color.copy()

    def is_complete(self):
        return bool(np.all(self.status == COLORED))

    # -- randomness ----------------------------------------------------
    def uniforms(self, nodes, tag, j=0):
        return R.uniforms(self.node_seed, self.stream_id, nodes, self.round, tag, j)

    def sample(self, nodes, tag, p):
        return R.bernoulli(self.node_seed, self.stream_id, nodes, self.round, tag, p)

    def node_rng(self, v, tag=R.TRY):
        return R.NodeRng(self.node_seed[v], self.stream_id[v], self.round, tag)

    # -- mutation ------------------------------------------------------
    def commit(self, nodes, colors, event="commit", record=True):
        """Write colors for `nodes` (uncolored) and update neighbor palettes.

        record=False applies commits that were already recorded elsewhere
        (a sub-run sharing this state's transcript)."""
        nodes = np.asarray(nodes, np.int64)
        colors = np.asarray(colors, np.int64)
        if not len(nodes):
            return
        if np.any(self.status[nodes] == COLORED):
            raise ProtocolViolation("a colored node tried to commit again")
        g, inst = self.graph, self.instance
        conflicts, oop = K.apply_commits(nodes, colors, g.indptr, g.indices, inst.pal_ptr, inst.pal_colors,
                                         self.alive, self.pal_size, self.udeg, self.color, self.status)
        self._after_commit(nodes, colors, conflicts, oop, event, record)

    def _after_commit(self, nodes, colors, conflicts, oop, event, record):
        SAFETY.add(commits=len(nodes) if record else 0, conflicts=int(conflicts), out_of_palette=int(oop))
        self.commits += len(nodes)
        if oop:
            raise OutOfPalette(f"{oop} commit(s) outside the committer's current palette in round {self.round}")
        if conflicts:
            raise ConflictDetected(f"adjacent nodes share a color after round {self.round}")
        if not record:
            return
        self._pending.append((nodes, colors))
        if self.trace is not None:
            sids = self.stream_id
            for v, c in zip(nodes.tolist(), colors.tolist()):
                self.trace.append((self.round, int(sids[v]), event, c))

    def greedy(self, order, event="greedy", skip_stuck=False):
        """Sequential greedy in the given order, lowest available color first.
        Returns the stuck node, or None when every node got a color. With
        skip_stuck, nodes without a color are passed over and the list of
        all of them is returned instead."""
        order = np.asarray(order, np.int64)
        order = order[self.status[order] != COLORED]
        g, inst = self.graph, self.instance
        stuck_nodes = []
        while len(order):
            stuck, conflicts, oop = K.greedy_sequence(order, g.indptr, g.indices, inst.pal_ptr, inst.pal_colors,
                                                      self.alive, self.pal_size, self.udeg, self.color, self.status)
            done = order if stuck < 0 else order[:stuck]
            done = done[self.status[done] == COLORED]
            self._after_commit(done, self.color[done], conflicts, oop, event, True)
            if stuck < 0:
                break
            if not skip_stuck:
                return int(order[stuck])
            stuck_nodes.append(int(order[stuck]))
            order = order[stuck + 1:]
        return stuck_nodes if skip_stuck else None

    def set_status(self, nodes, status, event=None):
        nodes = np.asarray(nodes, np.int64)
        if not len(nodes):
            return
        if np.any(self.status[nodes] == COLORED):
            raise ProtocolViolation("cannot change the status of a colored node")
        self.status[nodes] = status
        if self.trace is not None and event:
            for v in nodes.tolist():
                self.trace.append((self.round, int(self.stream_id[v]), event, -1))

    def advance(self, rounds=1):
        """Close the current round: fold its commits into the transcript."""
        if self._pending:
            nodes = np.concatenate([p[0] for p in self._pending])
            cols = np.concatenate([p[1] for p in self._pending])
            sids = self.stream_id[nodes]
            order = np.argsort(sids, kind="stable")
            self._digest.update(np.int64(self.round).tobytes())
            self._digest.update(np.stack([sids[order], cols[order]]).astype("<i8").tobytes())
            self._pending = []
        self.round += rounds
        SAFETY.add(rounds=rounds)

    def transcript_hash(self):
        return int.from_bytes(self._digest.digest(), "little")


def transcript_hash(state):
    return state.transcript_hash()


def check_proper(state):
    """Independent re-check of the partial coloring (for tests and reports)."""
    g = state.graph
    cu, cv = state.color[g.eu], state.color[g.ev]
    return int(np.sum((cu >= 0) & (cu == cv)))


class NodeView:
    """What a node program may look at: its own private state and the
    round-r public state of its neighbors."""

    def __init__(self, state, v, snapshot_colors, snapshot_status):
        self.v = v
        self.state = state
        self.palette = tuple(state.palette(v).tolist())
        self.neighbors = state.graph.neighbors(v)
        self.neighbor_colors = snapshot_colors[self.neighbors]
        self.neighbor_status = snapshot_status[self.neighbors]
        self.rng = state.node_rng(v)
        self.round = state.round

    @property
    def uncolored_degree(self):
        return int(np.sum(self.neighbor_status != COLORED))


def _as_set(p):
    if p is None:
        return None
    if isinstance(p, (set, frozenset, tuple, list, np.ndarray)):
        return sorted(int(c) for c in p)
    return [int(p)]


def resolve(state, proposals, plus_sets=None):
    """Apply the trial rule to {node: color or set of colors}.

    A node commits its lowest proposed color not proposed by any neighbor in
    its conflict set N+(v) (default: every proposing neighbor). Returns the
    committed (nodes, colors)."""
    nodes = np.array(sorted(proposals), np.int64)
    sets = [_as_set(proposals[v]) for v in nodes.tolist()]
    keep = [i for i, s in enumerate(sets) if s]
    nodes = nodes[keep]
    sets = [sets[i] for i in keep]
    if not len(nodes):
        return nodes, nodes
    g = state.graph
    if plus_sets is not None:
        check_orientation(g, nodes, plus_sets)
        chosen = []
        for v, s in zip(nodes.tolist(), sets):
            blockers = set()
            for u in plus_sets.get(v, ()):
                if u in proposals and proposals[u] is not None:
                    blockers.update(_as_set(proposals[u]))
            chosen.append(next((c for c in s if c not in blockers), -1))
        chosen = np.array(chosen, np.int64)
    else:
        ptr = np.zeros(len(sets) + 1, np.int64)
        np.cumsum([len(s) for s in sets], out=ptr[1:])
        flat = np.array([c for s in sets for c in s], np.int64)
        chosen = K.resolve_trials(g.n, nodes, ptr, flat, g.indptr, g.indices, np.zeros(1, np.int64), False)
    ok = chosen >= 0
    return nodes[ok], chosen[ok]


def check_orientation(graph, nodes, plus_sets):
    """Every edge needs at least one endpoint that listens to the other."""
    for v in nodes.tolist():
        pv = set(plus_sets.get(v, ()))
        for u in graph.neighbors(v).tolist():
            if u not in pv and v not in set(plus_sets.get(u, ())):
                raise ProtocolViolation(f"edge {min(u, v)}-{max(u, v)}: neither endpoint has the other in its conflict set")
        if not pv <= set(graph.neighbors(v).tolist()):
            raise ProtocolViolation(f"conflict set of node {v} contains a non-neighbor")


def run_round(state, program, nodes=None, threads=1, plus_sets=None, event="commit"):
    """One synchronous round of a per-node program.

    `program(view)` returns None (stay silent), a color, or a set of colors.
    All programs read the same snapshot; results are merged in node order
    and committed atomically, so the thread count never changes the outcome.
    """
    if nodes is None:
        nodes = state.uncolored()
    nodes = [int(v) for v in nodes]
    colors = state.color.copy()
    status = state.status.copy()

    def work(chunk):
        return [(v, program(NodeView(state, v, colors, status))) for v in chunk]

    if threads > 1 and len(nodes) > 1:
        size = -(-len(nodes) // threads)
        chunks = [nodes[i:i + size] for i in range(0, len(nodes), size)]
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(nodes)]
    proposals = {v: p for part in parts for v, p in part if p is not None}
    for v, p in proposals.items():
        pal = set(state.palette(v).tolist())
        bad = [c for c in _as_set(p) if c not in pal]
        if bad:
            SAFETY.add(out_of_palette=1)
            raise OutOfPalette(f"node {v} proposed color {bad[0]} outside its palette")
    won, cols = resolve(state, proposals, plus_sets)
    state.commit(won, cols, event)
    state.advance()
    return dict(zip(won.tolist(), cols.tolist()))


def ball(graph, v, radius):
    seen = {v}
    frontier = [v]
    for _ in range(radius):
        nxt = []
        for u in frontier:
            for w in graph.neighbors(u).tolist():
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def two_hop_independence_probe(instance, algorithm, v, seed, adversary):
    """v's outcome with the original seed and with every stream outside v's
    2-hop ball reseeded by `adversary` (a seed or a callable node -> seed).

    `algorithm(state)` runs on a fresh state; returns the pair of outcomes
    (color of v, or None if uncolored)."""
    near = ball(instance.graph, v, 2)
    far = np.array(sorted(set(range(instance.n)) - near), np.int64)

    def outcome(reseed):
        st = SimState(instance, seed)
        if reseed and len(far):
            if callable(adversary):
                st.node_seed[far] = np.array([R.as_seed(adversary(int(u))) for u in far], np.uint64)
            else:
                st.node_seed[far] = R.as_seed(adversary)
        algorithm(st)
        return int(st.color[v]) if st.status[v] == COLORED else None

    return outcome(False), outcome(True)
