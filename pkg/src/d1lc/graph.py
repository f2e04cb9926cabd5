"""Graphs, list-coloring instances and the text instance format."""

import numpy as np


class GraphError(ValueError):
    pass


class InstanceError(ValueError):
    def __init__(self, message, node=None, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.node = node
        self.line = line


def _freeze(a):
    a.setflags(write=False)
    return a


class Graph:
    """Immutable simple undirected graph stored as CSR adjacency.

    Neighbor lists are sorted. Node ids are 0..n-1.
    """

    def __init__(self, n, edges=()):
        n = int(n)
        if n < 0:
            raise GraphError("negative node count")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if len(e):
            if e.min() < 0 or e.max() >= n:
                raise GraphError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                v = int(e[e[:, 0] == e[:, 1]][0, 0])
                raise GraphError(f"self-loop at node {v}")
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            key = lo * n + hi
            uniq = np.unique(key)
            if len(uniq) != len(key):
                raise GraphError("duplicate edge")
            lo, hi = uniq // n, uniq % n
        else:
            lo = hi = np.zeros(0, np.int64)
        self._build(n, lo, hi)

    def _build(self, n, lo, hi):
        self.n = n
        self.m = len(lo)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.argsort(src * max(n, 1) + dst, kind="stable")
        src, dst = src[order], dst[order]
        deg = np.bincount(src, minlength=n).astype(np.int64)
        indptr = np.zeros(n + 1, np.int64)
        np.cumsum(deg, out=indptr[1:])
        self.indptr = _freeze(indptr)
        self.indices = _freeze(dst.astype(np.int64))
        self.degree = _freeze(deg)
        self.eu = _freeze(lo.astype(np.int64))
        self.ev = _freeze(hi.astype(np.int64))

    def common_neighbors(self):
        """Per edge (eu[i], ev[i]): number of common neighbors. Cached."""
        c = getattr(self, "_common", None)
        if c is None:
            from ._kernels import common_neighbors
            c = _freeze(common_neighbors(self.indptr, self.indices, self.eu, self.ev))
            self._common = c
        return c

    @classmethod
    def from_edge_arrays(cls, n, lo, hi):
        """Trusted constructor: lo < hi, sorted by (lo, hi), no duplicates."""
        g = cls.__new__(cls)
        g._build(int(n), np.asarray(lo, np.int64), np.asarray(hi, np.int64))
        return g

    def neighbors(self, v):
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self):
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def edges(self):
        return list(zip(self.eu.tolist(), self.ev.tolist()))

    def has_edge(self, u, v):
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def max_degree(self):
        return int(self.degree.max()) if self.n else 0

    def induced(self, nodes):
        """Subgraph induced on `nodes`; returns (graph, sorted node array)."""
        nodes = np.unique(np.asarray(nodes, np.int64))
        local = np.full(self.n, -1, np.int64)
        local[nodes] = np.arange(len(nodes))
        keep = (local[self.eu] >= 0) & (local[self.ev] >= 0)
        lo, hi = local[self.eu[keep]], local[self.ev[keep]]
        order = np.lexsort((hi, lo))
        return Graph.from_edge_arrays(len(nodes), lo[order], hi[order]), nodes

    def __eq__(self, other):
        return (isinstance(other, Graph) and self.n == other.n
                and np.array_equal(self.eu, other.eu) and np.array_equal(self.ev, other.ev))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


class ListInstance:
    """A graph with one list of distinct non-negative colors per node.

    No size requirement on the lists; see D1lcInstance for that.
    """

    def __init__(self, graph, palettes):
        self.graph = graph
        if isinstance(palettes, tuple) and len(palettes) == 2 and isinstance(palettes[0], np.ndarray):
            ptr, colors = palettes
        else:
            if len(palettes) != graph.n:
                raise InstanceError(f"expected {graph.n} palettes, got {len(palettes)}")
            sizes = [len(p) for p in palettes]
            ptr = np.zeros(graph.n + 1, np.int64)
            np.cumsum(sizes, out=ptr[1:])
            colors = np.fromiter((c for p in palettes for c in sorted(p)), np.int64, count=int(ptr[-1]))
        ptr = np.asarray(ptr, np.int64)
        colors = np.asarray(colors, np.int64)
        self.pal_ptr = _freeze(ptr)
        self.pal_colors = _freeze(colors)
        self.pal_len = _freeze(np.diff(ptr))
        self._check_lists()

    def _check_lists(self):
        if len(self.pal_colors) and self.pal_colors.min() < 0:
            owner = np.searchsorted(self.pal_ptr, np.argmax(self.pal_colors < 0), side="right") - 1
            raise InstanceError("negative color", node=int(owner))
        # strictly increasing inside each segment
        if len(self.pal_colors) > 1:
            bad = np.diff(self.pal_colors) <= 0
            starts = np.zeros(len(self.pal_colors), bool)
            starts[self.pal_ptr[1:-1][self.pal_ptr[1:-1] < len(starts)]] = True
            bad &= ~starts[1:]
            if bad.any():
                pos = int(np.argmax(bad)) + 1
                owner = int(np.searchsorted(self.pal_ptr, pos, side="right") - 1)
                raise InstanceError(f"palette of node {owner} has repeated colors", node=owner)

    @property
    def n(self):
        return self.graph.n

    def palette(self, v):
        return self.pal_colors[self.pal_ptr[v]:self.pal_ptr[v + 1]]

    @property
    def palettes(self):
        return [tuple(self.palette(v).tolist()) for v in range(self.n)]

    def num_colors(self):
        return int(self.pal_colors.max()) + 1 if len(self.pal_colors) else 0

    def induced(self, nodes):
        g, nodes = self.graph.induced(nodes)
        return type(self)(g, [self.palette(v) for v in nodes]), nodes

    def __eq__(self, other):
        return (isinstance(other, ListInstance) and self.graph == other.graph
                and np.array_equal(self.pal_ptr, other.pal_ptr)
                and np.array_equal(self.pal_colors, other.pal_colors))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, m={self.graph.m})"


class D1lcInstance(ListInstance):
    """List instance where every palette has at least degree+1 colors."""

    def _check_lists(self):
        super()._check_lists()
        short = np.flatnonzero(self.pal_len < self.graph.degree + 1)
        if len(short):
            v = int(short[0])
            raise InstanceError(
                f"node {v}: palette smaller than degree+1 ({self.pal_len[v]} < {self.graph.degree[v] + 1})",
                node=v)


def format_instance(instance):
    g = instance.graph
    lines = [f"d1lc {g.n} {g.m}"]
    for v in range(g.n):
        lines.append(" ".join(["node", str(v)] + [str(c) for c in instance.palette(v).tolist()]))
    for u, v in zip(g.eu.tolist(), g.ev.tolist()):
        lines.append(f"edge {u} {v}")
    return "\n".join(lines) + "\n"


def parse_instance(text, cls=D1lcInstance):
    header = None
    palettes = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(x) for x in parts[1:]]
        except ValueError:
            raise InstanceError(f"non-integer field in {raw.strip()!r}", line=lineno) from None
        if header is None:
            if parts[0] != "d1lc" or len(nums) != 2:
                raise InstanceError("expected header 'd1lc <n> <m>'", line=lineno)
            header = nums
            continue
        if parts[0] == "node":
            if not nums:
                raise InstanceError("node line without id", line=lineno)
            v = nums[0]
            if not 0 <= v < header[0]:
                raise InstanceError(f"node id {v} out of range", line=lineno)
            if v in palettes:
                raise InstanceError(f"node {v} listed twice", node=v, line=lineno)
            pal = nums[1:]
            if len(set(pal)) != len(pal):
                raise InstanceError(f"node {v}: repeated color", node=v, line=lineno)
            palettes[v] = sorted(pal)
        elif parts[0] == "edge":
            if len(nums) != 2:
                raise InstanceError("edge line needs two endpoints", line=lineno)
            edges.append((nums[0], nums[1], lineno))
        else:
            raise InstanceError(f"unknown record {parts[0]!r}", line=lineno)
    if header is None:
        raise InstanceError("missing header")
    n, m = header
    if len(palettes) != n:
        missing = next(v for v in range(n) if v not in palettes)
        raise InstanceError(f"node {missing} has no node line", node=missing)
    if len(edges) != m:
        raise InstanceError(f"header announces {m} edges, found {len(edges)}")
    for u, v, lineno in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InstanceError(f"edge {u} {v} out of range", line=lineno)
        if u == v:
            raise InstanceError(f"self-loop at node {u}", node=u, line=lineno)
    try:
        g = Graph(n, [(u, v) for u, v, _ in edges])
    except GraphError as exc:
        raise InstanceError(str(exc)) from None
    return cls(g, [palettes[v] for v in range(n)])


def load_instance(path, cls=D1lcInstance):
    with open(path) as fh:
        return parse_instance(fh.read(), cls)


def save_instance(instance, path):
    with open(path, "w") as fh:
        fh.write(format_instance(instance))
