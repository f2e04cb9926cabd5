"""Independent transversals by repeated low-degree sampling."""

import math

import numpy as np

from .. import _kernels as K
from .. import rng as R


class EmptyPart(RuntimeError):
    def __init__(self, part, stage):
        super().__init__(f"part {part} is empty after stage {stage}")
        self.part = part
        self.stage = stage


def low_degree_sample(graph, P, q, B, seed, stage=0):
    """Sample each node of P w.p. 1/(2q); keep sampled nodes with fewer
    than B/q sampled neighbors."""
    P = np.asarray(P, np.int64)
    p = 1.0 / (2 * q)
    seeds = np.full(graph.n, R.as_seed(seed), np.uint64)
    sids = np.arange(graph.n, dtype=np.int64)
    S = R.bernoulli(seeds, sids, P, stage, R.SAMPLE, p)
    mask = np.zeros(graph.n, bool)
    mask[S] = True
    deg = K.masked_degree(S, graph.indptr, graph.indices, mask)
    return S[deg * q < B]


def _snap(x):
    r = round(x)
    return r if math.isclose(x, r, rel_tol=1e-9) else x


def transversal(graph, parts, delta, seed=0, max_degree=None, strict=False):
    """Run low_degree_sample 1/delta + 1 times with q = D^(delta/(1+delta))
    and thresholds B_j = D^(1 - j delta/(1+delta)). The last stage keeps
    only nodes with no sampled neighbor, so the result is independent.

    Returns (nodes, per-part counts). With strict, an exhausted part raises
    EmptyPart."""
    m = round(1 / delta)
    if not math.isclose(m * delta, 1.0):
        raise ValueError("delta must be 1/m for an integer m")
    D = max_degree if max_degree is not None else graph.max_degree()
    q = _snap(D ** (delta / (1 + delta)))
    part_of = np.full(graph.n, -1, np.int64)
    for i, I in enumerate(parts):
        part_of[np.asarray(I, np.int64)] = i
    P = np.arange(graph.n, dtype=np.int64)
    B = float(D)
    for j in range(1, m + 2):
        P = low_degree_sample(graph, P, q, B, seed, stage=j)
        # D^(1 - j delta/(1+delta)) = q^(m+1-j), so the last stage has B = q exactly
        B = q ** (m + 1 - j)
        counts = np.bincount(part_of[P][part_of[P] >= 0], minlength=len(parts))
        if strict and np.any(counts == 0):
            raise EmptyPart(int(np.argmin(counts)), j)
    return P, counts


def is_independent(graph, nodes):
    mask = np.zeros(graph.n, bool)
    mask[np.asarray(nodes, np.int64)] = True
    return not np.any(mask[graph.eu] & mask[graph.ev])
