"""Command line entry point: gen, run, verify, acd, sparsify, probe.

Exit codes: 0 when every check passed, 1 on a statistical failure,
2 on an invariant or protocol violation (including invalid input).
"""

import argparse
import csv
import io
import sys
from fractions import Fraction

import numpy as np

from . import generators as G
from .acd import (DecompositionFailure, EpsilonLedger, classify_sparse, compute_acd, structural_report,
                  verify_acd)
from .coloring.config import PipelineConfig
from .coloring.dense import dense_roles
from .coloring.pipeline import VIRTUAL_BASE, combined, full_coloring
from .engine import EngineError
from .experiments import ALGOS, ExperimentConfig, run_experiment
from .graph import InstanceError, format_instance, load_instance
from .metrics import BulkMetrics
from .oracle import verify_coloring
from .probes import PROBES, run_probe, trial_seed
from .sparsify import list_size, sample_lists, color_from_samples
from .stats import clopper_pearson_lower

OK, STAT_FAIL, VIOLATION = 0, 1, 2


def _value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _params(pairs):
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise SystemExit(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.replace("-", "_")] = _value(v)
    return out


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _csv(rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _add_source(p):
    p.add_argument("--instance", help="instance file")
    p.add_argument("--gen", metavar="KIND", help="generate the instance instead (see `gen --list`)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    p.add_argument("--gen-seed", type=int, default=None, help="generator seed (default: --seed)")


def _source(args):
    if args.instance:
        return load_instance(args.instance), None
    if not args.gen:
        raise SystemExit("need --instance or --gen")
    seed = args.seed if args.gen_seed is None else args.gen_seed
    spec = G.GeneratorSpec(args.gen, _params(args.param), seed)
    return G.generate(spec), spec


def _add_ledger(p):
    p.add_argument("--profile", choices=("desk", "faithful"), default="desk")
    for name in ("eps-acd", "eps-spa", "eps-ub", "eps-hat", "eps-hc"):
        p.add_argument(f"--{name}", type=Fraction, default=None)
    p.add_argument("--d-min", type=int, default=None)
    p.add_argument("--kappa", type=Fraction, default=None)
    p.add_argument("--p-gen", type=float, default=None)
    p.add_argument("--ell", type=int, default=None, help="low-slack threshold override")
    p.add_argument("--variant", choices=("discrepant", "uneven"), default=None)
    p.add_argument("--max-rounds", type=int, default=None)


def _pipeline(args):
    over = {k: getattr(args, k) for k in ("eps_spa", "eps_ub", "eps_hat", "eps_hc") if getattr(args, k) is not None}
    base = EpsilonLedger.faithful if args.profile == "faithful" else EpsilonLedger.desk
    ledger = EpsilonLedger.from_eps_acd(args.eps_acd, **over) if args.eps_acd is not None else base(**over)
    kw = dict(ledger=ledger)
    for k in ("d_min", "kappa", "p_gen", "ell", "variant", "max_rounds"):
        if getattr(args, k) is not None:
            kw[k] = getattr(args, k)
    return PipelineConfig.faithful(**kw) if args.profile == "faithful" else PipelineConfig.desk(**kw)


# -- subcommands ---------------------------------------------------------

def cmd_gen(args):
    if args.list:
        _emit("".join(f"{k}\n" for k in sorted(G.FAMILIES)), args.out)
        return OK
    inst = G.generate(G.GeneratorSpec(args.kind, _params(args.param), args.seed))
    _emit(format_instance(inst), args.out)
    return OK


def _node_name(sid):
    # padding nodes of a degree class carry stream ids above VIRTUAL_BASE
    if sid < VIRTUAL_BASE:
        return str(sid)
    off = sid - VIRTUAL_BASE
    return f"v{off >> 32}.{off & 0xFFFFFFFF}"


def cmd_run(args):
    inst, spec = _source(args)
    cfg = ExperimentConfig(generator=spec, instance=inst, algo=args.algo, pipeline=_pipeline(args),
                           trials=args.trials, seed=args.seed, threads=args.threads, c_s=args.c_s)
    if args.trace and args.algo not in ("full", "combined"):
        raise SystemExit("--trace is available for --algo full and combined")
    res = run_experiment(cfg)
    _emit(res.to_csv(), args.out)
    if args.trace:
        # replay trial 0 with an event log; same seed, so the same run
        trace = []
        run = full_coloring if args.algo == "full" else combined
        run(inst, cfg.pipeline, trial_seed(args.seed, 0), trace=trace)
        with open(args.trace, "w") as fh:
            fh.writelines(f"{rnd} {_node_name(node)} {event} {value}\n" for rnd, node, event, value in trace)
    if args.coloring and res.outcomes:
        col = res.outcomes[-1].report.coloring
        with open(args.coloring, "w") as fh:
            fh.writelines(f"{v} {int(c)}\n" for v, c in enumerate(col.tolist()))
    if res.conflicts():
        return VIOLATION
    if args.algo in ("full", "combined", "sparsify") and res.success_rate() < 1:
        return STAT_FAIL
    if res.max_rounds_exceeded():
        return STAT_FAIL
    return OK


def _read_coloring(path, n):
    col = np.full(n, -1, np.int64)
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].replace(",", " ").split()
            if not line or not line[0].lstrip("-").isdigit():
                continue
            col[int(line[0])] = int(line[1])
    return col


def cmd_verify(args):
    inst, _ = _source(args)
    col = _read_coloring(args.coloring, inst.n)
    viol = verify_coloring(inst, col, complete=args.complete)
    rows = [["kind", "nodes", "color"]] + [[v.kind, " ".join(map(str, v.nodes)), v.color] for v in viol]
    _emit(_csv(rows), args.out)
    return VIOLATION if viol else OK


def cmd_acd(args):
    inst, _ = _source(args)
    cfg = _pipeline(args)
    led = cfg.ledger
    bm = BulkMetrics.of(inst)
    try:
        part = compute_acd(inst, led, bm, strict=not args.lenient)
    except DecompositionFailure as e:
        part, status = e.partial, VIOLATION
        sys.stderr.write(f"decomposition failed for {len(e.nodes)} node(s)\n")
    else:
        status = OK
    cls = classify_sparse(inst, part, led, bm, cfg.variant)
    ell = cfg.ell_for(inst.graph.max_degree())
    roles = dense_roles(inst, part, ell)
    role_of = {}
    for cid, r in enumerate(roles):
        for v in r.outliers.tolist():
            role_of[v] = "outlier"
        for v in r.inliers.tolist():
            role_of[v] = "inlier"
        role_of[r.leader] = "leader"
    rows = [["node", "degree", "kind", "clique", "role", "class", "sparsity", "discrepancy", "unevenness",
             "slackability"]]
    g = inst.graph
    for v in range(inst.n):
        rows.append([v, int(g.degree[v]), part.label(v).split(":")[0], int(part.clique_of[v]),
                     role_of.get(v, ""), cls.label(v), f"{bm.sparsity[v]:.6g}", f"{bm.discrepancy[v]:.6g}",
                     f"{bm.unevenness[v]:.6g}", f"{bm.slackability[v]:.6g}"])
    viol = verify_acd(inst, part, led, bm)
    rep = structural_report(inst, part, roles, led, bm)
    rows.append([])
    rows.append(["violation", "node", "detail"])
    for x in viol:
        rows.append(["acd", x.node if hasattr(x, "node") else "", str(x)])
    for key in ("anti_degree", "inlier_external", "inlier_symdiff", "inlier_count", "ext_zero_sigma"):
        for item in rep[key]:
            rows.append([key, item[0], " ".join(str(i) for i in item[1:])])
    _emit(_csv(rows), args.out)
    if viol or any(rep[k] for k in ("anti_degree", "inlier_external", "inlier_symdiff", "inlier_count")):
        return VIOLATION
    return status


def cmd_sparsify(args):
    inst, _ = _source(args)
    cfg = _pipeline(args)
    rows = [["c_s", "list_size", "trial", "success", "repaired", "proven_unsolvable", "stuck", "conflict_edges",
             "edges_per_node"]]
    summary = [["c_s", "list_size", "trials", "successes", "success_rate", "lower_99", "mean_edges_per_node"]]
    status = OK
    for c_s in args.c_s:
        wins, edges = 0, []
        for t in range(args.trials):
            seed = trial_seed(args.seed, t)
            lists = sample_lists(inst, c_s, seed)
            res = color_from_samples(inst, lists, cfg, seed, args.low_c)
            if res.success and verify_coloring(lists, res.coloring, complete=True):
                status = VIOLATION
            wins += res.success
            edges.append(res.conflict_edges)
            rows.append([c_s, list_size(inst.n, c_s), t, int(res.success), int(res.repaired),
                         int(res.proven_unsolvable), len(res.stuck), res.conflict_edges,
                         f"{res.conflict_edges / max(inst.n, 1):.6g}"])
        n = args.trials
        rate = wins / n if n else float("nan")
        low = clopper_pearson_lower(wins, n)
        summary.append([c_s, list_size(inst.n, c_s), n, wins, f"{rate:.6g}", f"{low:.6g}",
                        f"{np.mean(edges) / max(inst.n, 1):.6g}" if edges else ""])
        if args.min_rate is not None and n and low < args.min_rate and status == OK:
            status = STAT_FAIL
    _emit(_csv(rows + [[]] + summary), args.out)
    return status


def cmd_probe(args):
    if args.probe_id == "list":
        _emit(_csv([["id", "trials", "constant", "direction", "pass_fraction", "summary"]] +
                   [[p.id, p.trials, f"{p.constant:g}", p.direction, f"{p.pass_fraction:g}", p.summary]
                    for p in PROBES.values()]), args.out)
        return OK
    if args.probe_id not in PROBES:
        raise SystemExit(f"unknown probe {args.probe_id!r}; try `probe list`")
    res = run_probe(args.probe_id, trials=args.trials, seed=args.seed, threads=args.threads)
    op = (lambda x: x >= res.constant) if res.direction == "ge" else (lambda x: x <= res.constant)
    rows = [["trial", "value", "success"]] + [[t, f"{x:.6g}", int(op(x))] for t, x in enumerate(res.values.tolist())]
    _emit(_csv(rows), args.out)
    sys.stderr.write(res.summary() + ("  PASS\n" if res.passed else "  FAIL\n"))
    return OK if res.passed else STAT_FAIL


def build_parser():
    ap = argparse.ArgumentParser(prog="d1lc", description="(deg+1)-list-coloring simulator and experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("kind", nargs="?", default="gnp")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--list", action="store_true", help="list generator families")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("run", help="run an algorithm for seeded trials, report CSV")
    _add_source(p)
    _add_ledger(p)
    p.add_argument("--algo", choices=ALGOS, default="full")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--c-s", type=float, default=4.0, help="list-size constant for --algo sparsify")
    p.add_argument("--trace", help="per-commit event log (round node event value)")
    p.add_argument("--coloring", help="write the last trial's coloring (node color per line)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("verify", help="check a coloring against an instance")
    _add_source(p)
    p.add_argument("--coloring", required=True)
    p.add_argument("--complete", action="store_true", help="also report uncolored nodes")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("acd", help="decomposition report")
    _add_source(p)
    _add_ledger(p)
    p.add_argument("--lenient", action="store_true", help="report unplaced nodes instead of failing")
    p.set_defaults(fn=cmd_acd)

    p = sub.add_parser("sparsify", help="palette sparsification success rates")
    _add_source(p)
    _add_ledger(p)
    p.add_argument("--c-s", type=float, nargs="+", default=[4.0])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--low-c", type=float, default=1.0)
    p.add_argument("--min-rate", type=float, default=None,
                   help="exit 1 when the 99%% lower bound on a success rate is below this")
    p.set_defaults(fn=cmd_sparsify)

    p = sub.add_parser("probe", help="Monte Carlo probe; `probe list` shows the registry")
    p.add_argument("probe_id")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_probe)

    for p in sub.choices.values():
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (default: standard output)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InstanceError, G.GeneratorError) as e:
        sys.stderr.write(f"error: {e}\n")
        return VIOLATION
    except EngineError as e:
        sys.stderr.write(f"violation: {e}\n")
        return VIOLATION


if __name__ == "__main__":
    sys.exit(main())
