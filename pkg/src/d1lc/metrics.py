"""Per-node structural metrics.

The scalar functions return exact Fractions. `BulkMetrics` computes the same
quantities for every node at once in floating point and exposes threshold
tests that fall back to the exact value whenever the float is too close to
the threshold to be trusted.
"""

from fractions import Fraction

import numpy as np

from . import _kernels as K


def _pal(instance, v):
    return set(instance.palette(v).tolist())


def slack(state, v, scope=None):
    """Current palette size minus current uncolored degree."""
    return state.slack(v, scope)


def edges_among(graph, nodes):
    nodes = set(int(x) for x in nodes)
    return sum(1 for u in nodes for w in graph.neighbors(u).tolist() if w in nodes and u < w)


def sparsity(instance, v):
    g = instance.graph
    d = int(g.degree[v])
    if d == 0:
        return Fraction(0)
    return Fraction(d * (d - 1) // 2 - edges_among(g, g.neighbors(v)), d)


def disparity(instance, u, v):
    pu = _pal(instance, u)
    if not pu:
        return Fraction(0)
    return Fraction(len(pu - _pal(instance, v)), len(pu))


def disparity_now(state, u, v):
    pu = set(state.palette(u).tolist())
    if not pu:
        return Fraction(0)
    return Fraction(len(pu - set(state.palette(v).tolist())), len(pu))


def discrepancy(instance, v, S=None):
    S = instance.graph.neighbors(v).tolist() if S is None else S
    return sum((disparity(instance, u, v) for u in S), Fraction(0))


def unevenness(instance, v):
    g = instance.graph
    dv = int(g.degree[v])
    total = Fraction(0)
    for u in g.neighbors(v).tolist():
        du = int(g.degree[u])
        if du > dv:
            total += Fraction(du - dv, du + 1)
    return total


def slackability(instance, v):
    return discrepancy(instance, v) + sparsity(instance, v)


def strong_slackability(instance, v):
    return unevenness(instance, v) + sparsity(instance, v)


def color_weights(instance, v, S=None):
    S = instance.graph.neighbors(v).tolist() if S is None else S
    H = {}
    for u in S:
        pal = instance.palette(u).tolist()
        w = Fraction(1, len(pal))
        for c in pal:
            H[c] = H.get(c, Fraction(0)) + w
    return H


def external_degree(instance, partition, v):
    """Neighbors of a dense node outside its clique and outside the sparse and uneven sets."""
    cid = partition.clique_of[v]
    return sum(1 for u in instance.graph.neighbors(v).tolist()
               if partition.clique_of[u] >= 0 and partition.clique_of[u] != cid)


def anti_degree(instance, partition, v):
    """Members of v's clique that are not adjacent to v (v itself excluded)."""
    cid = partition.clique_of[v]
    nb = set(instance.graph.neighbors(v).tolist())
    return sum(1 for u in partition.cliques[cid] if u != v and u not in nb)


def _close(x, t):
    return np.abs(x - t) <= 1e-9 * np.maximum(1.0, np.abs(t))


class BulkMetrics:
    """All per-node metrics of an instance, vectorized.

    Attributes are float arrays except `missing` (integer number of
    non-adjacent neighbor pairs) and `common` (per-edge common neighbors).
    """

    def __init__(self, instance):
        self.instance = g_inst = instance
        g = g_inst.graph
        self.graph = g
        self.common = g.common_neighbors()
        tri2 = np.bincount(g.eu, self.common, minlength=g.n) + np.bincount(g.ev, self.common, minlength=g.n)
        d = g.degree
        self.edges_in_nbhd = (tri2 // 2).astype(np.int64)
        self.missing = d * (d - 1) // 2 - self.edges_in_nbhd
        with np.errstate(divide="ignore", invalid="ignore"):
            self.sparsity = np.where(d > 0, self.missing / np.maximum(d, 1), 0.0)
        ptr, cols = g_inst.pal_ptr, g_inst.pal_colors
        plen = g_inst.pal_len.astype(np.float64)
        # disparity of eu towards ev and of ev towards eu
        miss_uv = K.palette_missing(ptr, cols, g.eu, g.ev)
        miss_vu = K.palette_missing(ptr, cols, g.ev, g.eu)
        disp_uv = np.where(plen[g.eu] > 0, miss_uv / np.maximum(plen[g.eu], 1), 0.0)
        disp_vu = np.where(plen[g.ev] > 0, miss_vu / np.maximum(plen[g.ev], 1), 0.0)
        self._miss = (miss_uv, miss_vu)
        self._incoming = None
        self.edge_disp_to_v = disp_uv   # disparity(eu, ev)
        self.edge_disp_to_u = disp_vu   # disparity(ev, eu)
        self.discrepancy = (np.bincount(g.ev, disp_uv, minlength=g.n)
                            + np.bincount(g.eu, disp_vu, minlength=g.n))
        du, dv = d[g.eu].astype(np.float64), d[g.ev].astype(np.float64)
        unev_to_v = np.where(du > dv, (du - dv) / (du + 1), 0.0)
        unev_to_u = np.where(dv > du, (dv - du) / (dv + 1), 0.0)
        self.unevenness = (np.bincount(g.ev, unev_to_v, minlength=g.n)
                           + np.bincount(g.eu, unev_to_u, minlength=g.n))
        self.slackability = self.discrepancy + self.sparsity
        self.strong_slackability = self.unevenness + self.sparsity

    @classmethod
    def of(cls, instance):
        """Metrics of an (immutable) instance, computed once."""
        bm = getattr(instance, "_bulk", None)
        if bm is None:
            bm = cls(instance)
            instance._bulk = bm
        return bm

    def exact_discrepancy(self, v):
        """Same value as discrepancy(instance, v), summed per denominator."""
        if self._incoming is None:
            g, plen = self.graph, self.instance.pal_len
            tgt = np.concatenate([g.ev, g.eu])
            num = np.concatenate(self._miss)
            den = np.concatenate([plen[g.eu], plen[g.ev]])
            order = np.argsort(tgt, kind="stable")
            ptr = np.searchsorted(tgt[order], np.arange(g.n + 1))
            self._incoming = (ptr, num[order], den[order])
        ptr, num, den = self._incoming
        a, b = ptr[v], ptr[v + 1]
        total = Fraction(0)
        nums, dens = num[a:b], den[a:b]
        for q in np.unique(dens).tolist():
            if q > 0:
                total += Fraction(int(nums[dens == q].sum()), q)
        return total

    def exact_slackability(self, v):
        d = int(self.graph.degree[v])
        spars = Fraction(int(self.missing[v]), d) if d else Fraction(0)
        return self.exact_discrepancy(v) + spars

    # exact threshold tests: value(v) >= eps * d_v
    def sparse_at_least(self, eps):
        eps = Fraction(eps)
        d = self.graph.degree
        # missing / d >= eps * d  <=>  missing * den >= num * d^2   (d > 0); d = 0 is always sparse
        lhs = self.missing.astype(object) * eps.denominator
        rhs = (d.astype(object) ** 2) * eps.numerator
        return np.array([bool(a >= b) for a, b in zip(lhs, rhs)], dtype=bool) if len(d) else np.zeros(0, bool)

    def _exact_ge(self, values, exact_fn, eps):
        eps = Fraction(eps)
        d = self.graph.degree
        thr = float(eps) * d
        out = values >= thr
        for v in np.flatnonzero(_close(values, thr)).tolist():
            out[v] = exact_fn(self.instance, v) >= eps * int(d[v])
        return out

    def uneven_at_least(self, eps):
        return self._exact_ge(self.unevenness, unevenness, eps)

    def discrepant_at_least(self, eps):
        return self._exact_ge(self.discrepancy, discrepancy, eps)
