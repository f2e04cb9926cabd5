import numpy as np
from hypothesis import strategies as st

from d1lc.graph import D1lcInstance, Graph, ListInstance


def instance(n, edges, palettes, cls=D1lcInstance):
    return cls(Graph(n, edges), palettes)


def uniform(n, edges, palette):
    return instance(n, edges, [palette] * n)


@st.composite
def graphs(draw, max_n=12, min_n=0):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [e for e, keep in zip(pairs, mask) if keep])


@st.composite
def d1lc_instances(draw, max_n=12, min_n=0, max_extra=2, colors=None):
    """Random D1LC instances: palette of v has deg(v)+1+extra colors drawn
    from a color space just large enough to force overlaps."""
    g = draw(graphs(max_n, min_n))
    space = colors if colors is not None else max(2, int(g.degree.max(initial=0)) + 1 + max_extra)
    pals = []
    for v in range(g.n):
        k = int(g.degree[v]) + 1 + draw(st.integers(0, max_extra))
        k = min(k, max(space, k))
        pool = list(range(max(space, k)))
        pals.append(draw(st.permutations(pool))[:k])
    return D1lcInstance(g, pals)


@st.composite
def list_instances(draw, max_n=8, max_len=3, colors=4):
    g = draw(graphs(max_n))
    pals = [draw(st.lists(st.integers(0, colors - 1), min_size=0, max_size=max_len, unique=True))
            for _ in range(g.n)]
    return ListInstance(g, pals)


def random_d1lc(n, p, seed, extra=0, space=None):
    gen = np.random.default_rng(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if gen.random() < p]
    g = Graph(n, edges)
    space = space or int(g.degree.max(initial=0)) + 1 + extra
    pals = [gen.choice(max(space, int(g.degree[v]) + 1 + extra), int(g.degree[v]) + 1 + extra,
                       replace=False).tolist() for v in range(n)]
    return D1lcInstance(g, pals)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
