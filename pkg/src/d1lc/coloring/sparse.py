"""Coloring of sparse and uneven nodes: slack generation, then SlackColor on
the start nodes while the rest wait, then SlackColor on the rest."""

from dataclasses import dataclass

import numpy as np

from ..acd import SPARSE, UNEVEN
from ..engine import UNCOLORED
from .primitives import slack_generation
from .slackcolor import slack_color


def active_s_min(state, targets, config):
    """Smallest slack among uncolored targets, counting only uncolored
    neighbors inside the target set, floored so that kappa * s_min > 1."""
    targets = np.asarray(targets, np.int64)
    targets = targets[state.status[targets] == UNCOLORED]
    floor = config.s_min_floor()
    if not len(targets):
        return floor
    mask = np.zeros(state.n, bool)
    mask[targets] = True
    return max(int(state.slacks(targets, mask).min()), floor)


def run_slack_color(state, targets, config, skip_empty=False):
    targets = np.asarray(targets, np.int64)
    s_min = active_s_min(state, targets, config)
    return slack_color(state, targets, s_min, config.kappa, config.beta, skip_empty=skip_empty)


@dataclass
class SparseResult:
    sampled: np.ndarray
    start: object
    rest: object


def sparse_pipeline(state, partition, classification, config, log=None, skip_empty=False):
    low = np.flatnonzero((partition.kind == SPARSE) | (partition.kind == UNEVEN))
    if not len(low):
        return SparseResult(low, None, None)
    start = np.flatnonzero(classification.start)
    rest = np.setdiff1d(low, start, assume_unique=True)

    def step(name, fn):
        if log is None:
            return fn()
        with log.phase(name) as rec:
            out = fn()
        if hasattr(out, "bad"):
            rec.bad = len(out.bad) + len(out.terminated)
        return out

    sampled, _ = step("sparse:slackgen", lambda: slack_generation(state, low, config.p_gen, skip_empty))
    r_start = step("sparse:start", lambda: run_slack_color(state, start, config, skip_empty))
    r_rest = step("sparse:rest", lambda: run_slack_color(state, rest, config, skip_empty))
    return SparseResult(sampled, r_start, r_rest)
