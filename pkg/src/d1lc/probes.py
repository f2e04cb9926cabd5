"""Monte Carlo probes of the slack and sampling guarantees.

Each probe builds a fixed instance once, then runs independent seeded
trials. A trial yields one number; the trial succeeds when that number is
on the right side of the probe's fitted constant. The probe passes when the
one-sided 99% Clopper-Pearson lower bound on the success rate reaches the
probe's pass fraction.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import generators as G
from . import metrics as M
from . import rng as R
from .acd import CliqueRole, EpsilonLedger, classify_sparse, compute_acd
from .coloring.config import PipelineConfig
from .coloring.dense import dense_roles, put_aside, synch_color_trial
from .coloring.primitives import multi_trial, slack_generation
from .coloring.sparse import run_slack_color
from .coloring.transversal import is_independent, transversal
from .engine import COLORED, UNCOLORED, ProtocolViolation, SimState
from .graph import D1lcInstance, ListInstance
from .stats import clopper_pearson_lower, quantiles


@dataclass(frozen=True)
class ProbeSpec:
    id: str
    summary: str
    build: object               # seed -> context
    trial: object               # (context, seed) -> float
    constant: float
    direction: str = "ge"       # success: value >= constant ("ge") or <= ("le")
    trials: int = 1000
    pass_fraction: float = 0.99
    params: dict = field(default_factory=dict)


@dataclass
class ProbeResult:
    id: str
    trials: int
    successes: int
    rate: float
    lower: float
    pass_fraction: float
    constant: float
    direction: str
    passed: bool
    values: np.ndarray

    def summary(self):
        q = quantiles(self.values)
        op = ">=" if self.direction == "ge" else "<="
        return (f"{self.id}: {self.successes}/{self.trials} trials with value {op} {self.constant:g} "
                f"(rate {self.rate:.4f}, 99% lower bound {self.lower:.4f}, need {self.pass_fraction:g}); "
                f"value quantiles min/10%/50%/90%/max = " + "/".join(f"{x:.4g}" for x in q))


def trial_seed(seed, t):
    return R.stream_key(int(seed), int(t), 0, R.GENERATOR)


# -- shared measurements ----------------------------------------------

def _slack(state, nodes):
    return state.pal_size[nodes] - state.udeg[nodes]


def _gain_after_slackgen(instance, seed, targets, watch, p_gen):
    """Slack change of the watched nodes over one slack-generation step.
    Watched nodes that got colored are dropped."""
    st = SimState(instance, seed)
    before = _slack(st, watch)
    slack_generation(st, targets, p_gen)
    keep = st.status[watch] == UNCOLORED
    return st, watch[keep], (_slack(st, watch) - before)[keep]


def _reduce(ratios, how):
    if not len(ratios):
        return math.nan
    if how == "mean":
        return float(np.mean(ratios))
    return float(np.quantile(ratios, 0.1))


def _same_color_pairs(state, members):
    """Pairs of colored nodes in `members` sharing a color (members are
    pairwise non-adjacent, or the coloring would be improper)."""
    cols = state.color[members]
    cols = cols[state.status[members] == COLORED]
    if not len(cols):
        return 0
    cnt = np.unique(cols, return_counts=True)[1]
    return int(np.sum(cnt * (cnt - 1) // 2))


# -- sparse nodes --------------------------------------------------------

def _build_sparse(seed, n=2000, d=200):
    inst = G.gnp(n, d=d, seed=seed)
    part = compute_acd(inst, EpsilonLedger.desk(), strict=False)
    watch = part.sparse
    return dict(inst=inst, watch=watch, targets=np.arange(inst.n), deg=inst.graph.degree)


def _sparse_trial(ctx, seed, p_gen=0.5, how="q10"):
    _, w, gain = _gain_after_slackgen(ctx["inst"], seed, ctx["targets"], ctx["watch"], p_gen)
    return _reduce(gain / ctx["deg"][w], how)


def _build_discrepant(seed, n=2000, d=100):
    g0 = G.gnp(n, d=d, seed=seed)
    space = 4 * (g0.graph.max_degree() + 1)
    inst = G.gnp(n, d=d, scheme="random", space=space, seed=seed)
    led = EpsilonLedger.desk()
    part = compute_acd(inst, led, strict=False)
    cls = classify_sparse(inst, part, led)
    low = np.concatenate([part.sparse, part.uneven])
    watch = np.sort(low[cls.discrepant[low]])
    return dict(inst=inst, watch=watch, targets=np.sort(low), deg=inst.graph.degree)


def _build_heavy(seed, d=400, copies=8):
    inst = G.fig2b(d, copies=copies, seed=seed)
    led = EpsilonLedger.desk(eps_hc=Fraction(1, 16), eps_hat=Fraction(1, 10))
    part = compute_acd(inst, led, strict=False)
    cls = classify_sparse(inst, part, led)
    apex = np.arange(copies, dtype=np.int64) * (d + 1)
    watch = apex[cls.heavy[apex]]
    if len(watch) != copies:
        raise RuntimeError("heavy probe: not every apex is classified heavy")
    targets = np.setdiff1d(np.arange(inst.n), watch)
    return dict(inst=inst, watch=watch, targets=targets, deg=inst.graph.degree)


def _build_tough(seed, d=400, fan=50):
    inst = G.tough_tree(d, fan, seed=seed)
    led = EpsilonLedger.desk()
    part = compute_acd(inst, led, strict=False)
    cls = classify_sparse(inst, part, led)
    if not cls.tough[0]:
        raise RuntimeError("tough probe: the root is not classified tough")
    return dict(inst=inst, root=0, kids=inst.graph.neighbors(0), targets=np.arange(1, inst.n), d=d)


def _tough_trial(ctx, seed, p_gen=0.5):
    st = SimState(ctx["inst"], seed)
    slack_generation(st, ctx["targets"], p_gen)
    return _same_color_pairs(st, ctx["kids"]) / ctx["d"]


# -- dense nodes ---------------------------------------------------------

def _build_dense(seed, k=4, m=200):
    inst = G.union_of_cliques(k, m, scheme="random", seed=seed)
    part = compute_acd(inst, EpsilonLedger.desk(), strict=False)
    bm = M.BulkMetrics.of(inst)
    return dict(inst=inst, watch=part.dense, targets=part.dense, sigma=bm.slackability)


def _dense_trial(ctx, seed, p_gen=0.1, how="q10"):
    _, w, gain = _gain_after_slackgen(ctx["inst"], seed, ctx["targets"], ctx["watch"], p_gen)
    return _reduce(gain / ctx["sigma"][w], how)


def _build_gritty(seed, m=400, frac=1 / 3, ext=8):
    inst = G.gritty_clique(m, frac, ext, seed=seed)
    part = compute_acd(inst, EpsilonLedger.desk(), strict=False)
    t = int(round(frac * m))
    watch = np.arange(t, dtype=np.int64)
    if not np.all(part.clique_of[watch] >= 0):
        raise RuntimeError("gritty probe: an attached member is not dense")
    sigma = M.BulkMetrics.of(inst).slackability
    return dict(inst=inst, watch=watch, m=m, ext=ext, sigma=sigma, targets=np.arange(inst.n))


def _gritty_trial(ctx, seed, p_gen=0.5, how="mean"):
    st = SimState(ctx["inst"], seed)
    slack_generation(st, ctx["targets"], p_gen)
    m, ext = ctx["m"], ctx["ext"]
    clique_cols = st.color[:m]
    z, s = [], []
    for v in ctx["watch"].tolist():
        if st.status[v] == COLORED:
            continue
        att = m + v * ext + np.arange(ext)
        cols = st.color[att][st.status[att] == COLORED]
        others = np.delete(clique_cols, v)
        z.append(int(np.isin(others[others >= 0], cols).sum()))
        s.append(ctx["sigma"][v])
    if not z:
        return math.nan
    if how == "mean":
        return float(np.sum(z) / np.sum(s))
    return _reduce(np.array(z) / np.array(s), how)


def _build_cliques(seed, k=4, m=200, swaps=3, drop=0.01, ell=10):
    inst = G.perturbed_cliques(k, m, swaps, drop, seed=seed)
    config = PipelineConfig.desk(ell=ell)
    part = compute_acd(inst, config.ledger, strict=False)
    roles = dense_roles(inst, part, ell)
    return dict(inst=inst, part=part, roles=roles, config=config, ell=ell)


def _leader_disparity_trial(ctx, seed):
    """Largest ratio over cliques of the summed current disparity of the
    leader towards the inliers, divided by the clique's slackability."""
    st = SimState(ctx["inst"], seed)
    slack_generation(st, ctx["part"].dense, ctx["config"].p_gen)
    worst = 0.0
    for r in ctx["roles"]:
        inl = r.inliers[st.status[r.inliers] == UNCOLORED]
        total = sum((M.disparity_now(st, r.leader, int(u)) for u in inl.tolist()), Fraction(0))
        if r.sigma_exact == 0:
            if total > 0:
                return math.inf
            continue
        worst = max(worst, float(total / r.sigma_exact))
    return worst


def _synch_trial(ctx, seed):
    """Largest ratio over cliques of inliers left uncolored by the
    synchronized trial to the clique's slackability."""
    st = SimState(ctx["inst"], seed)
    part, roles, config, ell = ctx["part"], ctx["roles"], ctx["config"], ctx["ell"]
    slack_generation(st, part.dense, config.p_gen)
    pa = put_aside(st, roles, ell, part.clique_of, part.delta)
    in_p = np.zeros(st.n, bool)
    in_p[pa.all_kept()] = True
    outl = np.concatenate([r.outliers for r in roles])
    run_slack_color(st, outl, config)
    dec = synch_color_trial(st, roles, exclude=in_p)
    worst = 0.0
    for cid, k in dec.items():
        sig = roles[cid].sigma
        if sig == 0:
            if k:
                return math.inf
            continue
        worst = max(worst, k / sig)
    return worst


# -- put-aside sets --------------------------------------------------------

def _build_put_aside(seed, cliques=4, ell=30, ext=30):
    """Implicit cliques of ell^3 nodes each: only the edges between cliques
    are materialized (about `ext` per node). Inliers are whole cliques and
    every clique counts as low-slack."""
    size = ell ** 3
    n = cliques * size
    gen = R.generator(seed, 20)
    lo, hi = [], []
    for _ in range(ext // 2):
        perm = gen.permutation(n)
        a, b = perm[0::2], perm[1::2]
        cross = (a // size) != (b // size)
        lo.append(a[cross])
        hi.append(b[cross])
    g = G._graph_from_pairs(n, np.concatenate(lo), np.concatenate(hi))
    inst = ListInstance(g, (np.arange(n + 1, dtype=np.int64), np.zeros(n, np.int64)))
    clique_of = np.arange(n, dtype=np.int64) // size
    roles, deltas = [], []
    for c in range(cliques):
        C = np.arange(c * size, (c + 1) * size, dtype=np.int64)
        roles.append(CliqueRole(C, int(C[0]), C[:0], C, 0.0, Fraction(0), True))
        deltas.append(size - 1 + int(g.degree[C].max()))
    return dict(inst=inst, roles=roles, clique_of=clique_of, deltas=np.array(deltas), ell=ell)


def _put_aside_trial(ctx, seed):
    st = SimState(ctx["inst"], seed)
    pa = put_aside(st, ctx["roles"], ctx["ell"], ctx["clique_of"], ctx["deltas"])
    return min(len(p) for p in pa.kept.values()) / ctx["ell"] ** 2


# -- multi-color trials ------------------------------------------------------

def _build_multitrial(seed, x=1, n=200, r=20):
    gen = R.generator(seed, 21)
    g = G.random_regular_graph(n, r, gen)
    v = int(np.argmax(g.degree))
    size = 2 * x * int(g.degree[v])
    inst = D1lcInstance(g, [np.arange(max(size, int(g.degree[u]) + 1)) for u in range(n)])
    return dict(inst=inst, v=v, x=x, nodes=np.arange(n))


def _multitrial_trial(ctx, seed):
    st = SimState(ctx["inst"], seed)
    multi_trial(st, ctx["nodes"], ctx["x"])
    return float(st.status[ctx["v"]] == COLORED)


# -- transversal -------------------------------------------------------------

def transversal_setup(delta_max=64, delta=0.5, parts=4, factor=16):
    """Part size factor * k * Delta with k = ceil(q ln n), q = Delta^(delta/(1+delta)),
    solved for the n the parts produce."""
    q = delta_max ** (delta / (1 + delta))
    k = 1
    for _ in range(50):
        size = factor * k * delta_max
        nk = math.ceil(q * math.log(parts * size))
        if nk == k:
            break
        k = nk
    return k, factor * k * delta_max


def _build_transversal(seed, delta_max=64, delta=0.5, parts=4, factor=16):
    k, size = transversal_setup(delta_max, delta, parts, factor)
    per_pair = (delta_max - 1) // (parts - 1)
    g, part_list = G.transversal_parts(parts, size, per_pair, seed=seed)
    return dict(graph=g, parts=part_list, k=k, delta=delta, D=delta_max)


def _transversal_trial(ctx, seed):
    P, counts = transversal(ctx["graph"], ctx["parts"], ctx["delta"], seed=seed, max_degree=ctx["D"])
    if not is_independent(ctx["graph"], P):
        raise ProtocolViolation("transversal output is not independent")
    return counts.min() / ctx["k"]


# -- registry ---------------------------------------------------------------

def _spec(id, summary, build, trial, constant, **kw):
    return ProbeSpec(id, summary, build, trial, constant, **kw)


PROBES = {p.id: p for p in [
    _spec("sparse-slack", "sparse nodes of G(2000, d=200), identical palettes: 10% quantile of "
          "slack gain / degree after slack generation with p = 1/2",
          _build_sparse, _sparse_trial, 0.01),
    _spec("dense-slack", "4 x K_200 with random palettes: 10% quantile of slack gain / slackability "
          "after slack generation with p = 1/10",
          _build_dense, _dense_trial, 0.01),
    _spec("discrepant-slack", "discrepant nodes of G(2000, d=100) with palettes from 4(D+1) colors: "
          "10% quantile of slack gain / participating neighbors, p = 1/10",
          _build_discrepant, lambda c, s: _sparse_trial(c, s, p_gen=0.1), 0.015),
    _spec("heavy-slack", "8 heavy apexes of degree 400: 10% quantile of slack gain / degree, p = 1/10",
          _build_heavy, lambda c, s: _sparse_trial(c, s, p_gen=0.1), 0.01),
    _spec("tough-pairs", "tough root of degree 400: non-adjacent same-color neighbor pairs / degree, p = 1/2",
          _build_tough, _tough_trial, 0.03),
    _spec("gritty-pairs", "members of K_400 with private K_8 attachments: same-color pairs (attached, "
          "clique) summed over members / summed slackability, p = 1/2",
          _build_gritty, _gritty_trial, 0.05),
    _spec("put-aside", "4 cliques of ell^3 nodes, ell = 30, ~30 external neighbors each: "
          "smallest put-aside set / ell^2",
          _build_put_aside, _put_aside_trial, 1 / 300),
    _spec("leader-disparity", "4 perturbed K_200: largest (summed leader disparity over inliers) / "
          "clique slackability after slack generation",
          _build_cliques, _leader_disparity_trial, 44.0, direction="le"),
    _spec("synch-residue", "4 perturbed K_200: largest (inliers left uncolored by the synchronized "
          "trial) / clique slackability",
          _build_cliques, _synch_trial, 4.0, direction="le"),
    _spec("transversal", "4 parts of 16 k Delta nodes, Delta = 64, delta = 1/2: smallest part count / k",
          _build_transversal, _transversal_trial, 1.0),
] + [
    _spec(f"multitrial-x{x}", f"node of degree 20 with palette 40x, x = {x}: committed in one "
          f"multi-color trial (need rate 1 - 2^-{x} - 0.02)",
          lambda s, x=x: _build_multitrial(s, x=x), _multitrial_trial, 1.0,
          trials=10_000, pass_fraction=1 - 2.0 ** -x - 0.02, params={"x": x})
    for x in range(1, 6)
]}


def run_probe(probe, trials=None, seed=0, threads=1, build_seed=None):
    """Run a probe (spec or id). The instance is built from `build_seed`
    (default: `seed`); trial t uses trial_seed(seed, t)."""
    spec = PROBES[probe] if isinstance(probe, str) else probe
    n = spec.trials if trials is None else int(trials)
    ctx = spec.build(seed if build_seed is None else build_seed)

    def one(t):
        return spec.trial(ctx, trial_seed(seed, t))

    if threads > 1 and n > 1:
        with ThreadPoolExecutor(threads) as ex:
            values = list(ex.map(one, range(n)))
    else:
        values = [one(t) for t in range(n)]
    values = np.array(values, float)
    if spec.direction == "ge":
        ok = values >= spec.constant
    else:
        ok = values <= spec.constant
    k = int(np.sum(ok))
    lower = clopper_pearson_lower(k, n)
    return ProbeResult(spec.id, n, k, k / n if n else math.nan, lower, spec.pass_fraction, spec.constant,
                       spec.direction, bool(n and lower >= spec.pass_fraction), values)
