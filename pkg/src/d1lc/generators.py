"""Instance families: random graphs, unions of cliques and the hard
constructions in which sparsity does not translate into slack."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as R
from .graph import D1lcInstance, Graph, InstanceError

SCHEMES = ("identical", "degree", "shifted", "random", "disjoint")


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0


def _pairs_to_edges(idx, n):
    # pair index k over i < j, row-major
    i = (n - 2 - np.floor(np.sqrt(-8.0 * idx + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5)).astype(np.int64)
    j = idx + i + 1 - n * (n - 1) // 2 + (n - i) * ((n - i) - 1) // 2
    return i, j.astype(np.int64)


def gnp_graph(n, p, gen):
    total = n * (n - 1) // 2
    if total == 0 or p <= 0:
        return Graph(n)
    if p >= 1:
        iu = np.triu_indices(n, 1)
        return Graph.from_edge_arrays(n, iu[0].astype(np.int64), iu[1].astype(np.int64))
    m = int(gen.binomial(total, p))
    got = np.zeros(0, np.int64)
    while len(got) < m:
        extra = gen.integers(0, total, size=int((m - len(got)) * 1.1) + 16)
        got = np.unique(np.concatenate([got, extra]))
    if len(got) > m:
        got = np.sort(gen.choice(got, m, replace=False))
    lo, hi = _pairs_to_edges(got, n)
    return Graph.from_edge_arrays(n, lo, hi)


def random_regular_graph(n, r, gen):
    """Union of r random perfect matchings on n nodes (n even), deduplicated;
    degrees are at most r and typically r."""
    lo, hi = [], []
    for _ in range(r):
        perm = gen.permutation(n)
        a, b = perm[0::2], perm[1::2]
        lo.append(np.minimum(a, b))
        hi.append(np.maximum(a, b))
    return _graph_from_pairs(n, np.concatenate(lo), np.concatenate(hi))


def _graph_from_pairs(n, lo, hi):
    lo = np.asarray(lo, np.int64)
    hi = np.asarray(hi, np.int64)
    keep = lo != hi
    a, b = np.minimum(lo, hi)[keep], np.maximum(lo, hi)[keep]
    key = np.unique(a * n + b)
    return Graph.from_edge_arrays(n, key // n, key % n)


def palettes_for(graph, scheme, gen, extra=0, space=None, shift=None):
    """Palettes of size degree + 1 + extra under a named scheme."""
    d = graph.degree
    n = graph.n
    size = d + 1 + extra
    if scheme == "identical":
        top = int(size.max()) if n else 0
        base = np.arange(top)
        return [base for _ in range(n)]
    if scheme == "degree":
        return [np.arange(s) for s in size.tolist()]
    if scheme == "shifted":
        shift = int(shift if shift is not None else (graph.max_degree() + 1) // 2)
        off = gen.integers(0, shift + 1, size=n)
        return [np.arange(o, o + s) for o, s in zip(off.tolist(), size.tolist())]
    if scheme == "random":
        space = int(space if space is not None else 2 * (int(size.max()) if n else 1))
        if n and space < size.max():
            raise GeneratorError(f"color space {space} is smaller than the largest palette {int(size.max())}")
        return [np.sort(gen.choice(space, s, replace=False)) for s in size.tolist()]
    if scheme == "disjoint":
        width = int(size.max()) if n else 0
        return [np.arange(v * width, v * width + s) for v, s in enumerate(size.tolist())]
    raise GeneratorError(f"unknown palette scheme {scheme!r}; choose from {SCHEMES}")


def _instance(graph, palettes):
    try:
        return D1lcInstance(graph, palettes)
    except InstanceError as e:
        raise GeneratorError(f"construction violates the palette bound: {e}") from e


def gnp(n, d=None, p=None, scheme="identical", seed=0, extra=0, space=None):
    """G(n, p) with p = d/(n-1) when d is given."""
    gen = R.generator(seed, 1)
    if p is None:
        p = 0.0 if n < 2 else min(1.0, d / (n - 1))
    g = gnp_graph(n, p, gen)
    return _instance(g, palettes_for(g, scheme, gen, extra, space))


def planted_slack(n, d, factor=2, seed=0, space=None):
    """G(n, d/(n-1)) where each palette has (1 + factor) * degree + 1 random
    colors, so every node starts with slack at least factor * degree."""
    gen = R.generator(seed, 2)
    g = gnp_graph(n, min(1.0, d / max(n - 1, 1)), gen)
    size = (1 + factor) * g.degree + 1
    space = space or 2 * int(size.max())
    pals = [np.sort(gen.choice(space, s, replace=False)) for s in size.tolist()]
    return _instance(g, pals)


def union_of_cliques(k, m, scheme="identical", seed=0, extra=0):
    """k disjoint copies of K_m. With "identical" every clique uses colors
    0..m-1+extra; with "disjoint" each clique has its own block."""
    gen = R.generator(seed, 3)
    lo, hi = [], []
    iu = np.triu_indices(m, 1)
    for c in range(k):
        lo.append(iu[0] + c * m)
        hi.append(iu[1] + c * m)
    n = k * m
    g = Graph.from_edge_arrays(n, np.concatenate(lo).astype(np.int64) if lo else np.zeros(0, np.int64),
                               np.concatenate(hi).astype(np.int64) if hi else np.zeros(0, np.int64))
    w = m + extra
    if scheme == "identical":
        pals = [np.arange(w) for _ in range(n)]
    elif scheme == "disjoint":
        pals = [np.arange((v // m) * w, (v // m) * w + w) for v in range(n)]
    elif scheme == "shifted":
        off = gen.integers(0, max(1, m // 4) + 1, size=k)
        pals = [np.arange(off[v // m], off[v // m] + w) for v in range(n)]
    else:
        pals = palettes_for(g, scheme, gen, extra)
    return _instance(g, pals)


def fig1a(k, parts=2, tight=True, seed=0):
    """Apex node 0 joined to `parts` cliques K_k with pairwise disjoint
    palette blocks of k+1 colors. The apex palette is the union of the
    blocks; with `tight`, one color of each block but the last is dropped
    so the apex starts with slack exactly 1."""
    if k < 1 or parts < 1:
        raise GeneratorError("fig1a needs k >= 1 and parts >= 1")
    n = 1 + parts * k
    lo, hi = [], []
    for b in range(parts):
        base = 1 + b * k
        for i in range(k):
            lo.append(0)
            hi.append(base + i)
            for j in range(i + 1, k):
                lo.append(base + i)
                hi.append(base + j)
    g = _graph_from_pairs(n, lo, hi)
    blocks = [np.arange(b * (k + 1), (b + 1) * (k + 1)) for b in range(parts)]
    apex = [blk[1:] if (tight and b < parts - 1) else blk for b, blk in enumerate(blocks)]
    pals = [np.concatenate(apex)] + [blocks[b] for b in range(parts) for _ in range(k)]
    return _instance(g, pals)


def fig1b(big, small, seed=0):
    """Node 0 sits in a clique of `big` nodes (colors 0..big-1) and is also
    joined to a clique of `small` nodes with a disjoint block of small+1
    colors. Node 0's palette is sized exactly degree + 1."""
    if big < 2 or small < 1:
        raise GeneratorError("fig1b needs big >= 2 and small >= 1")
    n = big + small
    lo, hi = [], []
    for i in range(big):
        for j in range(i + 1, big):
            lo.append(i)
            hi.append(j)
    for i in range(small):
        lo.append(0)
        hi.append(big + i)
        for j in range(i + 1, small):
            lo.append(big + i)
            hi.append(big + j)
    g = _graph_from_pairs(n, lo, hi)
    sblock = np.arange(big, big + small + 1)
    pals = [np.arange(big + small)] + [np.arange(big)] * (big - 1) + [sblock] * small
    return _instance(g, pals)


def fig2b(d=400, copies=1, seed=0):
    """Apex of degree d whose neighbors form a random (sqrt(d)-1)-regular
    graph. Every neighbor has the same sqrt(d) shared colors plus one
    private color; the apex palette is the shared colors plus all private
    ones, so the shared colors carry almost all of the weight."""
    r = math.isqrt(d)
    if r * r != d or r < 2 or d % 2:
        raise GeneratorError("fig2b needs an even perfect square d >= 4")
    gen = R.generator(seed, 4)
    lo, hi, pals = [], [], []
    n_copy = d + 1
    for c in range(copies):
        base = c * n_copy
        ring = random_regular_graph(d, r - 1, gen)
        lo.append(np.full(d, base))
        hi.append(base + 1 + np.arange(d))
        lo.append(base + 1 + ring.eu)
        hi.append(base + 1 + ring.ev)
    g = _graph_from_pairs(copies * n_copy, np.concatenate(lo), np.concatenate(hi))
    heavy = np.arange(r)
    for c in range(copies):
        base = c * n_copy
        pals.append(np.arange(r + d))
        for i in range(d):
            v = base + 1 + i
            need = int(g.degree[v]) + 1
            own = np.arange(r + i, r + i + 1)
            cols = np.concatenate([heavy[:max(need - 1, 0)], own]) if need <= r + 1 else None
            if cols is None:
                raise GeneratorError("neighbor degree exceeds the shared block")
            pals.append(cols)
    return _instance(g, pals)


def low_slack_cliques(k, m, p_ext=0.0, extra=0, seed=0):
    """k copies of K_m plus sparse random edges between cliques. Every node
    gets colors 0..max(m, degree + 1) + extra - 1."""
    gen = R.generator(seed, 5)
    n = k * m
    lo, hi = [], []
    iu = np.triu_indices(m, 1)
    for c in range(k):
        lo.append(iu[0] + c * m)
        hi.append(iu[1] + c * m)
    if p_ext > 0 and k > 1:
        cnt = int(gen.binomial(n * n // 2, p_ext))
        a = gen.integers(0, n, cnt)
        b = gen.integers(0, n, cnt)
        cross = (a // m) != (b // m)
        lo.append(a[cross])
        hi.append(b[cross])
    g = _graph_from_pairs(n, np.concatenate(lo), np.concatenate(hi))
    pals = [np.arange(max(m + extra, int(g.degree[v]) + 1 + extra)) for v in range(n)]
    return _instance(g, pals)


def mixed(n=1000, k=3, m=200, d=60, p_cross=0.0005, scheme="degree", seed=0):
    """k cliques K_m next to a G(n - k m, d) part, with random cross edges.
    Palettes are sized degree + 1."""
    if k * m > n:
        raise GeneratorError("mixed needs k * m <= n")
    gen = R.generator(seed, 6)
    rest = n - k * m
    lo, hi = [], []
    iu = np.triu_indices(m, 1)
    for c in range(k):
        lo.append(iu[0] + c * m)
        hi.append(iu[1] + c * m)
    if rest > 1:
        sp = gnp_graph(rest, min(1.0, d / (rest - 1)), gen)
        lo.append(sp.eu + k * m)
        hi.append(sp.ev + k * m)
    if p_cross > 0:
        cnt = int(gen.binomial(n * n // 2, p_cross))
        a = gen.integers(0, n, cnt)
        b = gen.integers(0, n, cnt)
        same = (a < k * m) & (b < k * m) & (a // m == b // m)
        lo.append(a[~same])
        hi.append(b[~same])
    g = _graph_from_pairs(n, np.concatenate(lo), np.concatenate(hi))
    return _instance(g, palettes_for(g, scheme, gen))


def tough_tree(d=400, fan=50, seed=0):
    """Root 0 with d children; each child has fan - 1 leaf children. No
    edges among siblings, every node has the palette 0..d."""
    if d < 1 or fan < 1:
        raise GeneratorError("tough_tree needs d >= 1 and fan >= 1")
    leaves = fan - 1
    n = 1 + d + d * leaves
    kids = 1 + np.arange(d)
    lo = [np.zeros(d, np.int64), np.repeat(kids, leaves)]
    hi = [kids, 1 + d + np.arange(d * leaves)]
    g = _graph_from_pairs(n, np.concatenate(lo), np.concatenate(hi))
    base = np.arange(max(d, fan) + 1)
    return _instance(g, [base] * n)


def gritty_clique(m=400, frac=1 / 3, ext=8, seed=0):
    """A clique K_m on colors 0..m-1; a `frac` share of its members each get
    a private K_ext attached. The attached nodes draw ext + 1 colors from
    the clique's colors, and their member gets ext private extra colors.
    Returns the instance; the members with attachments are the first
    round(frac * m) nodes."""
    gen = R.generator(seed, 7)
    t = int(round(frac * m))
    n = m + t * ext
    lo, hi = [], []
    iu = np.triu_indices(m, 1)
    lo.append(iu[0])
    hi.append(iu[1])
    ie = np.triu_indices(ext, 1)
    for i in range(t):
        base = m + i * ext
        lo.append(np.full(ext, i))
        hi.append(base + np.arange(ext))
        lo.append(base + ie[0])
        hi.append(base + ie[1])
    g = _graph_from_pairs(n, np.concatenate(lo), np.concatenate(hi))
    P = np.arange(m)
    pals = []
    for v in range(m):
        if v < t:
            pals.append(np.concatenate([P, m + v * ext + np.arange(ext)]))
        else:
            pals.append(P)
    for _ in range(t * ext):
        pals.append(np.sort(gen.choice(m, ext + 1, replace=False)))
    return _instance(g, pals)


def perturbed_cliques(k=4, m=200, swaps=3, drop=0.01, seed=0):
    """k disjoint near-cliques: K_m with each edge dropped w.p. `drop`.
    Every node starts from colors 0..m-1 and swaps `swaps` of them for
    random colors from m..2m-1."""
    gen = R.generator(seed, 9)
    iu = np.triu_indices(m, 1)
    lo, hi = [], []
    for c in range(k):
        keep = gen.random(len(iu[0])) >= drop
        lo.append(iu[0][keep] + c * m)
        hi.append(iu[1][keep] + c * m)
    n = k * m
    g = _graph_from_pairs(n, np.concatenate(lo), np.concatenate(hi))
    pals = []
    for _ in range(n):
        base = np.arange(m)
        if swaps:
            out = gen.choice(m, swaps, replace=False)
            base = np.union1d(np.delete(base, out), m + gen.choice(m, swaps, replace=False))
        pals.append(base)
    return _instance(g, pals)


def transversal_parts(parts=4, size=1024, matchings=21, seed=0):
    """`parts` blocks of `size` nodes; every pair of blocks is joined by
    `matchings` random perfect matchings (deduplicated). Returns (graph,
    list of part arrays)."""
    gen = R.generator(seed, 8)
    lo, hi = [], []
    for a in range(parts):
        for b in range(a + 1, parts):
            for _ in range(matchings):
                perm = gen.permutation(size)
                lo.append(a * size + np.arange(size))
                hi.append(b * size + perm)
    n = parts * size
    g = _graph_from_pairs(n, np.concatenate(lo) if lo else [], np.concatenate(hi) if hi else [])
    return g, [a * size + np.arange(size) for a in range(parts)]


FAMILIES = {
    "gnp": gnp,
    "planted-slack": planted_slack,
    "cliques": union_of_cliques,
    "fig1a": fig1a,
    "fig1b": fig1b,
    "fig2b": fig2b,
    "low-slack": low_slack_cliques,
    "mixed": mixed,
    "tough": tough_tree,
    "gritty": gritty_clique,
    "perturbed": perturbed_cliques,
}

ALIASES = {"Gnp": "gnp", "UnionOfCliques": "cliques", "Fig1a": "fig1a", "Fig1b": "fig1b",
           "Fig2b": "fig2b", "PlantedSlack": "planted-slack", "LowSlackClique": "low-slack",
           "Mixed": "mixed", "ToughTree": "tough", "GrittyClique": "gritty",
           "PerturbedCliques": "perturbed"}


def generate(spec):
    kind = ALIASES.get(spec.kind, spec.kind)
    if kind not in FAMILIES:
        raise GeneratorError(f"unknown generator {spec.kind!r}; choose from {sorted(FAMILIES)}")
    params = dict(spec.params)
    params.setdefault("seed", spec.seed)
    try:
        return FAMILIES[kind](**params)
    except TypeError as e:
        raise GeneratorError(f"bad parameters for {kind}: {e}") from None
