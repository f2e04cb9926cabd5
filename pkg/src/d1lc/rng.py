"""Counter-based random streams.

A stream is addressed by (seed, node, round, tag). Its key is

    key = f(f(f(f(tag) ^ round) ^ node) ^ seed)

with f the splitmix64 finalizer, and the j-th draw is f(key + j) >> 11
scaled to [0, 1). Because every draw is a pure function of its address,
results do not depend on evaluation order or thread count.
"""

import numpy as np

from . import _kernels as K

MASK = (1 << 64) - 1

# stream tags
TRY = 1
SAMPLE = 2
MULTI = 3
PERMUTE = 4
PUT_ASIDE = 5
LOW_DEGREE = 6
LISTS = 7
GENERATOR = 8


def mix64(z):
    z = (z + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream_key(seed, node, rnd, tag):
    k = mix64(tag & MASK)
    k = mix64(k ^ (rnd & MASK))
    k = mix64(k ^ (node & MASK))
    return mix64(k ^ (seed & MASK))


def draw(key, j):
    return (mix64((key + j) & MASK) >> 11) / 9007199254740992.0


class NodeRng:
    """Scalar view on one stream, for per-node programs."""

    def __init__(self, seed, node, rnd, tag=TRY):
        self.key = stream_key(int(seed), int(node), int(rnd), int(tag))
        self.j = 0

    def random(self):
        u = draw(self.key, self.j)
        self.j += 1
        return u

    def randrange(self, k):
        return min(int(self.random() * k), k - 1)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]


def as_seed(seed):
    return np.uint64(int(seed) & MASK)


def uniforms(seeds, sids, nodes, rnd, tag, j=0):
    """Vectorized draw j of stream (seeds[v], sids[v], rnd, tag) for each v."""
    return K.uniforms(seeds, sids, np.asarray(nodes, np.int64), int(rnd), int(tag), int(j))


def bernoulli(seeds, sids, nodes, rnd, tag, p):
    nodes = np.asarray(nodes, np.int64)
    if p <= 0:
        return nodes[:0]
    if p >= 1:
        return nodes
    return nodes[uniforms(seeds, sids, nodes, rnd, tag) < p]


def generator(seed, *labels):
    """numpy Generator for instance construction, keyed by seed and labels."""
    k = stream_key(int(seed), 0, 0, GENERATOR)
    for x in labels:
        k = mix64(k ^ (int(x) & MASK))
    return np.random.default_rng(k)
