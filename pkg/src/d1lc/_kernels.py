"""Compiled inner loops. Everything here works on flat CSR arrays."""

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV53 = 1.0 / 9007199254740992.0

UNCOLORED = 0
COLORED = 1
TERMINATED = 2
BAD = 3


@njit(cache=True)
def mix64(z):
    z = z + GOLDEN
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def stream_key(seed, sid, rnd, tag):
    k = mix64(np.uint64(tag))
    k = mix64(k ^ np.uint64(rnd))
    k = mix64(k ^ np.uint64(sid))
    return mix64(k ^ seed)


@njit(cache=True)
def draw(key, j):
    return float(mix64(key + np.uint64(j)) >> np.uint64(11)) * INV53


@njit(cache=True)
def uniforms(seeds, sids, nodes, rnd, tag, j):
    out = np.empty(len(nodes), np.float64)
    for i in range(len(nodes)):
        v = nodes[i]
        out[i] = draw(stream_key(seeds[v], sids[v], rnd, tag), j)
    return out


@njit(cache=True)
def common_neighbors(indptr, indices, eu, ev):
    n = len(indptr) - 1
    mark = np.zeros(n, np.bool_)
    out = np.zeros(len(eu), np.int64)
    cur = -1
    for e in range(len(eu)):
        u = eu[e]
        if u != cur:
            if cur >= 0:
                for q in range(indptr[cur], indptr[cur + 1]):
                    mark[indices[q]] = False
            for q in range(indptr[u], indptr[u + 1]):
                mark[indices[q]] = True
            cur = u
        v = ev[e]
        c = 0
        for q in range(indptr[v], indptr[v + 1]):
            c += mark[indices[q]]
        out[e] = c
    return out


@njit(cache=True)
def palette_missing(ptr, colors, src, dst):
    """For each pair, |pal(src) minus pal(dst)|."""
    out = np.zeros(len(src), np.int64)
    for e in range(len(src)):
        a, ae = ptr[src[e]], ptr[src[e] + 1]
        b, be = ptr[dst[e]], ptr[dst[e] + 1]
        miss = 0
        while a < ae:
            if b >= be:
                miss += ae - a
                break
            x, y = colors[a], colors[b]
            if x == y:
                a += 1
                b += 1
            elif x < y:
                miss += 1
                a += 1
            else:
                b += 1
        out[e] = miss
    return out


@njit(cache=True)
def lists_intersect(ptr, colors, src, dst):
    out = np.zeros(len(src), np.bool_)
    for e in range(len(src)):
        a, ae = ptr[src[e]], ptr[src[e] + 1]
        b, be = ptr[dst[e]], ptr[dst[e] + 1]
        while a < ae and b < be:
            x, y = colors[a], colors[b]
            if x == y:
                out[e] = True
                break
            elif x < y:
                a += 1
            else:
                b += 1
    return out


@njit(cache=True)
def sample_palettes(nodes, want, ptr, colors, alive, seeds, sids, rnd, tag):
    """Sample want[i] alive colors of nodes[i] without replacement.

    Returns (out_ptr, out) with each node's sample sorted ascending.
    """
    k = len(nodes)
    out_ptr = np.zeros(k + 1, np.int64)
    width = 1
    for i in range(k):
        v = nodes[i]
        a = 0
        for p in range(ptr[v], ptr[v + 1]):
            if alive[p]:
                a += 1
        x = want[i] if want[i] < a else a
        out_ptr[i + 1] = out_ptr[i] + x
        if ptr[v + 1] - ptr[v] > width:
            width = ptr[v + 1] - ptr[v]
    out = np.empty(out_ptr[k], np.int64)
    buf = np.empty(width, np.int64)
    for i in range(k):
        v = nodes[i]
        a = 0
        for p in range(ptr[v], ptr[v + 1]):
            if alive[p]:
                buf[a] = colors[p]
                a += 1
        x = out_ptr[i + 1] - out_ptr[i]
        key = stream_key(seeds[v], sids[v], rnd, tag)
        for j in range(x):
            r = j + int(draw(key, j) * (a - j))
            if r >= a:
                r = a - 1
            t = buf[j]
            buf[j] = buf[r]
            buf[r] = t
        seg = buf[:x].copy()
        seg.sort()
        out[out_ptr[i]:out_ptr[i + 1]] = seg
    return out_ptr, out


@njit(cache=True)
def _contains(arr, lo, hi, c):
    j = lo + np.searchsorted(arr[lo:hi], c)
    return j < hi and arr[j] == c


@njit(cache=True)
def resolve_trials(n, nodes, out_ptr, out, indptr, indices, priority, use_priority):
    """Each proposer commits its lowest proposed color that no neighbor in
    its conflict set also proposed. With use_priority, v ignores neighbors
    of strictly lower priority."""
    idx = np.full(n, -1, np.int64)
    for i in range(len(nodes)):
        idx[nodes[i]] = i
    chosen = np.full(len(nodes), -1, np.int64)
    for i in range(len(nodes)):
        v = nodes[i]
        for p in range(out_ptr[i], out_ptr[i + 1]):
            c = out[p]
            blocked = False
            for q in range(indptr[v], indptr[v + 1]):
                u = indices[q]
                j = idx[u]
                if j < 0:
                    continue
                if use_priority and priority[v] > priority[u]:
                    continue
                if _contains(out, out_ptr[j], out_ptr[j + 1], c):
                    blocked = True
                    break
            if not blocked:
                chosen[i] = c
                break
    return chosen


@njit(cache=True)
def apply_commits(nodes, cols, indptr, indices, ptr, colors, alive, pal_size, udeg, color, status):
    """Commit colors; returns (conflicts, out_of_palette)."""
    oop = 0
    for i in range(len(nodes)):
        v = nodes[i]
        c = cols[i]
        lo, hi = ptr[v], ptr[v + 1]
        j = lo + np.searchsorted(colors[lo:hi], c)
        if not (j < hi and colors[j] == c and alive[j]):
            oop += 1
        color[v] = c
        status[v] = COLORED
    conflicts = 0
    for i in range(len(nodes)):
        v = nodes[i]
        c = cols[i]
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            udeg[u] -= 1
            if status[u] == COLORED and color[u] == c:
                conflicts += 1
            lo, hi = ptr[u], ptr[u + 1]
            j = lo + np.searchsorted(colors[lo:hi], c)
            if j < hi and colors[j] == c and alive[j]:
                alive[j] = False
                pal_size[u] -= 1
    return conflicts, oop


@njit(cache=True)
def masked_degree(nodes, indptr, indices, mask):
    out = np.zeros(len(nodes), np.int64)
    for i in range(len(nodes)):
        v = nodes[i]
        c = 0
        for q in range(indptr[v], indptr[v + 1]):
            if mask[indices[q]]:
                c += 1
        out[i] = c
    return out


@njit(cache=True)
def first_alive_free(v, ptr, colors, alive):
    for p in range(ptr[v], ptr[v + 1]):
        if alive[p]:
            return colors[p]
    return -1


@njit(cache=True)
def color_weight_sums(nodes, indptr, indices, member, ptr, colors, ncolors, threshold):
    """Per node v: total weight of colors c with H_v(c) >= threshold, where
    H_v(c) sums 1/|pal(u)| over neighbors u with member[u] and c in pal(u).
    `near` flags nodes where some weight is within rounding of the threshold."""
    acc = np.zeros(ncolors, np.float64)
    seen = np.zeros(ncolors, np.bool_)
    heavy_total = np.zeros(len(nodes), np.float64)
    near = np.zeros(len(nodes), np.bool_)
    tol = 1e-9 * max(1.0, threshold)
    for i in range(len(nodes)):
        v = nodes[i]
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            if not member[u]:
                continue
            w = 1.0 / (ptr[u + 1] - ptr[u])
            for p in range(ptr[u], ptr[u + 1]):
                acc[colors[p]] += w
        tot = 0.0
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            if not member[u]:
                continue
            for p in range(ptr[u], ptr[u + 1]):
                c = colors[p]
                if seen[c]:
                    continue
                seen[c] = True
                h = acc[c]
                if abs(h - threshold) <= tol:
                    near[i] = True
                if h >= threshold:
                    tot += h
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            for p in range(ptr[u], ptr[u + 1]):
                acc[colors[p]] = 0.0
                seen[colors[p]] = False
        heavy_total[i] = tot
    return heavy_total, near


@njit(cache=True)
def greedy_sequence(order, indptr, indices, ptr, colors, alive, pal_size, udeg, color, status):
    """Sequentially give each node in `order` its lowest alive color.
    Returns (index of the first stuck node or -1, conflicts, out_of_palette)."""
    one_node = np.empty(1, np.int64)
    one_col = np.empty(1, np.int64)
    conflicts = 0
    oop = 0
    for i in range(len(order)):
        v = order[i]
        if status[v] == COLORED:
            continue
        c = first_alive_free(v, ptr, colors, alive)
        if c < 0:
            return i, conflicts, oop
        one_node[0] = v
        one_col[0] = c
        a, b = apply_commits(one_node, one_col, indptr, indices, ptr, colors, alive, pal_size, udeg, color, status)
        conflicts += a
        oop += b
    return -1, conflicts, oop


@njit(cache=True)
def stream_draws(seed, sid, rnd, tag, k):
    key = stream_key(seed, sid, rnd, tag)
    out = np.empty(k, np.float64)
    for j in range(k):
        out[j] = draw(key, j)
    return out
