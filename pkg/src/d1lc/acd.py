"""Almost-clique decomposition, sparse-node classes and clique roles."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels as K
from . import metrics as M

SPARSE, UNEVEN, DENSE, FAILED = 0, 1, 2, 3
KIND_NAMES = {SPARSE: "sparse", UNEVEN: "uneven", DENSE: "dense", FAILED: "failed"}


@dataclass(frozen=True)
class EpsilonLedger:
    eps_acd: Fraction
    eps_spa: Fraction
    eps_ub: Fraction
    eps_hat: Fraction
    eps_hc: Fraction
    ell_exponent: Fraction = Fraction(21, 10)
    degree_floor_exponent: Fraction = Fraction(7)
    eps_f: Fraction = None

    def __post_init__(self):
        for name in ("eps_acd", "eps_spa", "eps_ub", "eps_hat", "eps_hc"):
            val = Fraction(getattr(self, name))
            if not 0 < val < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "ell_exponent", Fraction(self.ell_exponent))
        object.__setattr__(self, "degree_floor_exponent", Fraction(self.degree_floor_exponent))
        if self.eps_f is None:
            object.__setattr__(self, "eps_f", self.eps_acd / 3)

    @classmethod
    def from_eps_acd(cls, eps_acd, **overrides):
        e = Fraction(eps_acd)
        spa = e * e / 2
        ub = e * e / 4
        hat = ub * ub / 100
        vals = dict(eps_acd=e, eps_spa=spa, eps_ub=ub, eps_hat=hat, eps_hc=hat * hat / 540)
        vals.update({k: Fraction(v) for k, v in overrides.items()
                     if k in vals or k == "eps_f"})
        extra = {k: v for k, v in overrides.items() if k not in vals and k != "eps_f"}
        return cls(**vals, **extra)

    @classmethod
    def desk(cls, **overrides):
        return cls.from_eps_acd(Fraction(1, 5), **overrides)

    @classmethod
    def faithful(cls, **overrides):
        return cls.from_eps_acd(Fraction(1, 125), **overrides)

    def constraint_violations(self):
        out = []
        if self.eps_acd > Fraction(1, 125):
            out.append(f"eps_acd = {self.eps_acd} > 1/125")
        if self.eps_hat > Fraction(1, 36):
            out.append(f"eps_hat = {self.eps_hat} > 1/36")
        if self.eps_hc > self.eps_hat ** 2 / 540:
            out.append(f"eps_hc = {self.eps_hc} > eps_hat^2/540")
        if not self.eps_spa > self.eps_ub:
            out.append(f"eps_spa = {self.eps_spa} <= eps_ub = {self.eps_ub}")
        return out

    def ell(self, max_degree):
        if max_degree < 2:
            return 1
        return max(1, math.ceil(math.log2(max_degree) ** float(self.ell_exponent)))


class DecompositionFailure(Exception):
    def __init__(self, nodes, partial):
        super().__init__(f"{len(nodes)} node(s) are neither sparse, uneven nor in a clique: {list(nodes)[:10]}")
        self.nodes = list(nodes)
        self.partial = partial


class Violation(NamedTuple):
    node: int
    prop: int
    lhs: object
    rhs: object


@dataclass
class AcdPartition:
    kind: np.ndarray          # SPARSE / UNEVEN / DENSE / FAILED per node
    clique_of: np.ndarray     # clique id or -1
    cliques: list             # sorted node arrays
    delta: list = field(default_factory=list)   # max degree inside each clique

    @property
    def n(self):
        return len(self.kind)

    def nodes_of(self, kind):
        return np.flatnonzero(self.kind == kind)

    @property
    def sparse(self):
        return self.nodes_of(SPARSE)

    @property
    def uneven(self):
        return self.nodes_of(UNEVEN)

    @property
    def dense(self):
        return self.nodes_of(DENSE)

    def label(self, v):
        k = int(self.kind[v])
        if k == DENSE:
            return f"dense:{int(self.clique_of[v])}"
        return KIND_NAMES[k]

    def restrict(self, nodes):
        """Partition for the subinstance induced on `nodes` (sorted array)."""
        local = np.full(self.n, -1, np.int64)
        local[nodes] = np.arange(len(nodes))
        cliques = []
        remap = {}
        for cid, C in enumerate(self.cliques):
            C2 = local[C[local[C] >= 0]]
            if len(C2):
                remap[cid] = len(cliques)
                cliques.append(C2)
        kind = self.kind[nodes].copy()
        clique_of = np.array([remap.get(int(c), -1) if c >= 0 else -1 for c in self.clique_of[nodes]], np.int64)
        return AcdPartition(kind, clique_of, cliques, [])


def _clique_stats(graph, clique_of, ncliques):
    same = (clique_of[graph.eu] >= 0) & (clique_of[graph.eu] == clique_of[graph.ev])
    inside = (np.bincount(graph.eu[same], minlength=graph.n)
              + np.bincount(graph.ev[same], minlength=graph.n))
    sizes = np.bincount(clique_of[clique_of >= 0], minlength=max(ncliques, 1))
    return inside, sizes


def compute_acd(instance, ledger, metrics=None, strict=True):
    """Friendship-threshold decomposition, pruned until the clique properties
    hold, followed by sparse/uneven assignment and a full verification."""
    g = instance.graph
    bm = metrics if metrics is not None else M.BulkMetrics.of(instance)
    n = g.n
    d = g.degree
    eps, epf = ledger.eps_acd, ledger.eps_f
    # friends: closed neighborhoods overlap in a (1 - eps_f) fraction
    closed_common = bm.common + 2
    big = np.maximum(d[g.eu], d[g.ev]) + 1
    friend = closed_common * epf.denominator >= (epf.denominator - epf.numerator) * big
    fu, fv = g.eu[friend], g.ev[friend]
    nfriends = np.bincount(fu, minlength=n) + np.bincount(fv, minlength=n)
    eligible = (nfriends * epf.denominator >= (epf.denominator - epf.numerator) * d) & (d > 0)
    keep = eligible[fu] & eligible[fv]
    fu, fv = fu[keep], fv[keep]
    clique_of = np.full(n, -1, np.int64)
    if len(fu):
        adj = coo_matrix((np.ones(len(fu)), (fu, fv)), shape=(n, n))
        _, comp = connected_components(adj, directed=False)
        has_friend = np.zeros(n, bool)
        has_friend[fu] = True
        has_friend[fv] = True
        labels = comp[has_friend]
        _, relabel = np.unique(labels, return_inverse=True)
        clique_of[has_friend] = relabel
    # prune members violating the size/degree properties until stable
    while True:
        ncl = int(clique_of.max()) + 1 if n else 0
        inside, sizes = _clique_stats(g, clique_of, ncl)
        members = clique_of >= 0
        csize = np.where(members, sizes[np.maximum(clique_of, 0)], 0)
        too_big = d * eps.denominator > (eps.denominator + eps.numerator) * csize
        too_far = (eps.denominator + eps.numerator) * inside < eps.denominator * csize
        bad = members & (too_big | too_far | (csize < 2))
        if not bad.any():
            break
        clique_of[bad] = -1
        live = np.unique(clique_of[clique_of >= 0])
        remap = np.full(ncl, -1, np.int64)
        remap[live] = np.arange(len(live))
        clique_of = np.where(clique_of >= 0, remap[np.maximum(clique_of, 0)], -1)
    kind = np.full(n, FAILED, np.int8)
    kind[clique_of >= 0] = DENSE
    rest = clique_of < 0
    sp = bm.sparse_at_least(ledger.eps_spa)
    un = bm.uneven_at_least(ledger.eps_spa)
    kind[rest & sp] = SPARSE
    kind[rest & ~sp & un] = UNEVEN
    ncl = int(clique_of.max()) + 1 if n else 0
    order = np.argsort(clique_of, kind="stable")
    order = order[clique_of[order] >= 0]
    bounds = np.searchsorted(clique_of[order], np.arange(ncl + 1))
    cliques = [order[bounds[i]:bounds[i + 1]] for i in range(ncl)]
    delta = [int(d[C].max()) for C in cliques]
    part = AcdPartition(kind, clique_of, cliques, delta)
    failed = np.flatnonzero(kind == FAILED)
    if len(failed):
        if strict:
            raise DecompositionFailure(failed.tolist(), part)
        return part
    viol = verify_acd(instance, part, ledger, metrics=bm)
    if viol:
        raise AssertionError(f"decomposition failed its own verification: {viol[:5]}")
    return part


def verify_acd(instance, partition, ledger, metrics=None):
    """List every violated decomposition property (empty when valid)."""
    g = instance.graph
    bm = metrics if metrics is not None else M.BulkMetrics.of(instance)
    d = g.degree
    eps = ledger.eps_acd
    out = []
    sp = bm.sparse_at_least(ledger.eps_spa)
    for v in np.flatnonzero((partition.kind == SPARSE) & ~sp).tolist():
        out.append(Violation(v, 1, M.sparsity(instance, v), ledger.eps_spa * int(d[v])))
    unev = partition.kind == UNEVEN
    if unev.any():
        un = bm.uneven_at_least(ledger.eps_spa)
        for v in np.flatnonzero(unev & ~un).tolist():
            out.append(Violation(v, 2, M.unevenness(instance, v), ledger.eps_spa * int(d[v])))
    for v in np.flatnonzero(partition.kind == FAILED).tolist():
        out.append(Violation(v, 0, "unassigned", None))
    clique_of = np.asarray(partition.clique_of)
    for cid, C in enumerate(partition.cliques):
        if np.any(clique_of[C] != cid) or np.any(partition.kind[C] != DENSE):
            out.append(Violation(int(C[0]), 0, "inconsistent clique membership", cid))
    ncl = len(partition.cliques)
    inside, sizes = _clique_stats(g, clique_of, ncl)
    for v in np.flatnonzero(clique_of >= 0).tolist():
        size = int(sizes[clique_of[v]])
        if Fraction(int(d[v])) > (1 + eps) * size:
            out.append(Violation(v, 3, int(d[v]), (1 + eps) * size))
        if (1 + eps) * int(inside[v]) < size:
            out.append(Violation(v, 4, (1 + eps) * int(inside[v]), size))
    return out


@dataclass
class SparseClassification:
    balanced: np.ndarray
    discrepant: np.ndarray
    easy: np.ndarray
    heavy: np.ndarray
    start: np.ndarray
    tough: np.ndarray
    variant: str = "discrepant"

    def label(self, v):
        for name in ("start", "heavy", "tough", "easy"):
            if getattr(self, name)[v]:
                return name
        return ""


def _heavy_mass(instance, nodes, threshold, member=None):
    g = instance.graph
    if member is None:
        member = np.ones(g.n, bool)
    nodes = np.asarray(nodes, np.int64)
    if not len(nodes):
        return np.zeros(0), np.zeros(0, bool)
    return K.color_weight_sums(nodes, g.indptr, g.indices, member, instance.pal_ptr,
                               instance.pal_colors, instance.num_colors(), float(threshold))


def heavy_mass_exact(instance, v, eps_hc, S=None):
    H = M.color_weights(instance, v, S)
    thr = 1 / Fraction(eps_hc)
    return sum((h for h in H.values() if h >= thr), Fraction(0))


def classify_sparse(instance, partition, ledger, metrics=None, variant="discrepant"):
    """Split sparse and uneven nodes into the easy/heavy/start/tough classes.

    variant="uneven" replaces the discrepancy test by 2*sqrt(eps_hat)-unevenness.
    """
    g = instance.graph
    bm = metrics if metrics is not None else M.BulkMetrics.of(instance)
    n = g.n
    d = g.degree
    kind = partition.kind
    low = (kind == SPARSE) | (kind == UNEVEN)
    hat, ub = ledger.eps_hat, ledger.eps_ub
    # balanced: many neighbors of degree >= 2 d_v / 3
    hi_nb = (3 * d[g.ev] >= 2 * d[g.eu]).astype(np.int64)
    hi_nb_rev = (3 * d[g.eu] >= 2 * d[g.ev]).astype(np.int64)
    high = np.bincount(g.eu, hi_nb, minlength=n) + np.bincount(g.ev, hi_nb_rev, minlength=n)
    balanced = low & (high * ub.denominator >= (ub.denominator - ub.numerator) * d)
    if variant == "discrepant":
        disc = low & bm.discrepant_at_least(hat)
    elif variant == "uneven":
        # unevenness >= 2 sqrt(hat) d  <=>  unevenness^2 >= 4 hat d^2
        thr = 2 * math.sqrt(hat) * d
        disc = bm.unevenness >= thr
        for v in np.flatnonzero(M._close(bm.unevenness, thr)).tolist():
            u = M.unevenness(instance, v)
            disc[v] = u * u >= 4 * hat * int(d[v]) ** 2
        disc &= low
    else:
        raise ValueError(f"unknown classifier variant {variant!r}")
    dense = kind == DENSE
    dense_nb = (np.bincount(g.eu, dense[g.ev].astype(np.int64), minlength=n)
                + np.bincount(g.ev, dense[g.eu].astype(np.int64), minlength=n))
    many_dense = dense_nb * hat.denominator >= hat.numerator * d
    easy = low & (balanced | disc | (kind == UNEVEN) | many_dense)
    cand = np.flatnonzero((kind == SPARSE) & ~easy)
    heavy = np.zeros(n, bool)
    if len(cand):
        mass, near = _heavy_mass(instance, cand, 1 / ledger.eps_hc)
        thr = float(hat) * d[cand]
        hv = mass >= thr
        for i in np.flatnonzero(near | M._close(mass, thr)).tolist():
            v = int(cand[i])
            hv[i] = heavy_mass_exact(instance, v, ledger.eps_hc) >= hat * int(d[v])
        heavy[cand] = hv
    easy_nb = (np.bincount(g.eu, easy[g.ev].astype(np.int64), minlength=n)
               + np.bincount(g.ev, easy[g.eu].astype(np.int64), minlength=n))
    start = (kind == SPARSE) & ~easy & ~heavy & (easy_nb * hat.denominator >= hat.numerator * d)
    tough = (kind == SPARSE) & ~easy & ~heavy & ~start
    return SparseClassification(balanced, disc, easy, heavy, start, tough, variant)


@dataclass
class CliqueRole:
    clique: np.ndarray
    leader: int
    outliers: np.ndarray
    inliers: np.ndarray
    sigma: float            # clique slackability, min over members
    sigma_exact: Fraction
    low_slack: bool


def _exact_argmin(values, nodes, exact_fn):
    """argmin over nodes of values, resolving near-ties exactly, ties by id."""
    vals = values[nodes]
    best = vals.min()
    near = nodes[M._close(vals, best) | (vals <= best)]
    if len(near) == 1:
        return int(near[0]), None
    ex = [(exact_fn(int(v)), int(v)) for v in near.tolist()]
    val, v = min(ex)
    return v, val


def select_leader_outliers(instance, partition, cid, metrics=None, ell=None, degree=None):
    """Leader, outliers and inliers of clique `cid` of the partition.

    `degree` is the degree used for the largest-degree rule (defaults to the
    instance's degrees)."""
    g = instance.graph
    bm = metrics if metrics is not None else M.BulkMetrics.of(instance)
    C = np.asarray(partition.cliques[cid], np.int64)
    deg = g.degree if degree is None else degree
    x, sig_ex = _exact_argmin(bm.slackability, C, bm.exact_slackability)
    if sig_ex is None:
        sig_ex = bm.exact_slackability(x)
    nx = g.neighbors(x)
    in_nx = np.isin(C, nx)
    # common neighbors of each member with x
    common = np.array([np.intersect1d(g.neighbors(u), nx, assume_unique=True).size for u in C.tolist()])
    others = C != x
    k_a = math.ceil(max(int(g.degree[x]), len(C)) / 3)
    order_a = np.lexsort((C[others], common[others]))
    out_a = C[others][order_a[:k_a]]
    k_b = math.ceil(len(C) / 6)
    order_b = np.lexsort((C[others], -deg[C[others]]))
    out_b = C[others][order_b[:k_b]]
    out_c = C[~in_nx]          # includes x itself, which is not its own neighbor
    outliers = np.unique(np.concatenate([out_a, out_b, out_c]))
    inliers = np.setdiff1d(C, outliers, assume_unique=True)
    sigma = float(sig_ex)
    low = ell is not None and sig_ex <= ell
    return CliqueRole(C, x, outliers, inliers, sigma, sig_ex, low)


def clique_roles(instance, partition, ledger=None, metrics=None, ell=None, degree=None):
    bm = metrics if metrics is not None else M.BulkMetrics.of(instance)
    return [select_leader_outliers(instance, partition, cid, bm, ell, degree)
            for cid in range(len(partition.cliques))]


def structural_report(instance, partition, roles, ledger, metrics=None):
    """Exact checks of the anti-degree bound, the inlier bounds and the
    inlier-count bound for every clique. Returns a dict of violation lists
    and the largest observed external-degree ratio."""
    g = instance.graph
    bm = metrics if metrics is not None else M.BulkMetrics.of(instance)
    eps = ledger.eps_acd
    c_ant = 2 / (1 - 3 * eps)
    clique_of = partition.clique_of
    ext = (np.bincount(g.eu, ((clique_of[g.ev] >= 0) & (clique_of[g.ev] != clique_of[g.eu])).astype(np.int64), minlength=g.n)
           + np.bincount(g.ev, ((clique_of[g.eu] >= 0) & (clique_of[g.eu] != clique_of[g.ev])).astype(np.int64), minlength=g.n))
    same = (clique_of[g.eu] >= 0) & (clique_of[g.eu] == clique_of[g.ev])
    inside = np.bincount(g.eu[same], minlength=g.n) + np.bincount(g.ev[same], minlength=g.n)
    sizes = np.array([len(C) for C in partition.cliques], np.int64)
    anti = np.zeros(g.n, np.int64)
    dense = clique_of >= 0
    anti[dense] = sizes[clique_of[dense]] - 1 - inside[dense]
    strong = bm.strong_slackability

    def exact_sigma(v):
        return M.strong_slackability(instance, v)

    report = {"anti_degree": [], "inlier_external": [], "inlier_symdiff": [], "inlier_count": [],
              "ext_ratio_max": 0.0, "ext_zero_sigma": []}
    for v in np.flatnonzero(dense).tolist():
        a = int(anti[v])
        if a == 0:
            continue
        if a > c_ant * strong[v] - 1e-9 * max(1.0, strong[v]):
            if a > c_ant * exact_sigma(v):
                report["anti_degree"].append((v, a, c_ant * exact_sigma(v)))
        e = int(ext[v])
        if strong[v] > 0:
            report["ext_ratio_max"] = max(report["ext_ratio_max"], e / strong[v])
    for v in np.flatnonzero(dense & (ext > 0)).tolist():
        if strong[v] == 0 and exact_sigma(v) == 0:
            report["ext_zero_sigma"].append((v, int(ext[v])))
    for r in roles:
        x = r.leader
        sx = strong[x]
        bound = 12 * sx
        sx_exact = None
        closed_x = np.union1d(g.neighbors(x), [x])
        for u in r.inliers.tolist():
            closed_u = np.union1d(g.neighbors(u), [u])
            sym = len(np.setxor1d(closed_u, closed_x, assume_unique=True))
            e = int(ext[u])
            for key, val in (("inlier_external", e), ("inlier_symdiff", sym)):
                if val > bound - 1e-9 * max(1.0, bound):
                    if sx_exact is None:
                        sx_exact = exact_sigma(x)
                    if val > 12 * sx_exact:
                        report[key].append((u, x, val, 12 * sx_exact))
        if Fraction(len(r.inliers)) < len(r.clique) * (Fraction(1, 2) - 2 * eps):
            report["inlier_count"].append((int(r.clique[0]), len(r.inliers), len(r.clique)))
    return report
