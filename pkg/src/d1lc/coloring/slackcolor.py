"""SlackColor: a few random trials, then multi-color trials with a growing
number of sampled colors, terminating nodes whose slack ratio falls behind."""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..engine import BAD, COLORED, TERMINATED, UNCOLORED
from .primitives import multi_trial, try_random_color


class InvalidKappa(ValueError):
    pass


def log_star(x):
    k = 0
    while x > 1:
        x = math.log2(x)
        k += 1
    return k


def tower(i):
    """2 up-arrow-up-arrow i, with tower(0) = 1."""
    t = 1
    for _ in range(i):
        if t >= 64:
            return math.inf
        t = 2 ** t
    return t


def initial_rounds(beta=2):
    return math.ceil(beta * math.log(4 * beta))


def round_bound(s_min, kappa=Fraction(1, 2), beta=2):
    rho = s_min ** (1 / (1 + float(kappa)))
    return initial_rounds(beta) + 2 * (log_star(rho) + 1) + 3 * math.ceil(1 / Fraction(kappa)) + 1


@dataclass
class SlackColorResult:
    rounds: int
    colored: np.ndarray
    terminated: np.ndarray
    bad: np.ndarray
    rho: float
    bound: int


def slack_color(state, targets, s_min, kappa=Fraction(1, 2), beta=2, skip_empty=False):
    """Run SlackColor on `targets`. Nodes outside the target set are inactive:
    they neither conflict with nor count towards the degree of active nodes.
    Terminated nodes get status TERMINATED, uncolored survivors BAD."""
    kappa = Fraction(kappa)
    if kappa * s_min <= 1 or kappa > 1:
        raise InvalidKappa(f"kappa={kappa} needs kappa * s_min > 1 and kappa <= 1 (s_min={s_min})")
    targets = np.asarray(targets, np.int64)
    targets = targets[state.status[targets] == UNCOLORED]
    k = float(kappa)
    rho = s_min ** (1 / (1 + k))
    bound = round_bound(s_min, kappa, beta)
    start_round = state.round
    scope = np.zeros(state.n, bool)
    scope[targets] = True
    terminated = []

    def active():
        act = targets[state.status[targets] == UNCOLORED]
        scope[:] = False
        scope[act] = True
        return act

    def check(limit):
        act = active()
        if not len(act):
            return
        d = state.degree_in(act, scope)
        s = state.pal_size[act] - d
        drop = act[d * limit > s]
        if len(drop):
            state.set_status(drop, TERMINATED, "terminate")
            terminated.append(drop)
            active()

    def trial(x):
        act = active()
        if len(act):
            multi_trial(state, act, x, skip_empty=skip_empty)

    for _ in range(initial_rounds(beta)):
        act = active()
        if not len(act):
            break
        try_random_color(state, act, skip_empty=skip_empty)
    check(2)
    for i in range(log_star(rho) + 1):
        if not len(active()):
            break
        x = tower(i)
        trial(x if x != math.inf else 1 << 62)
        trial(x if x != math.inf else 1 << 62)
        two = 2.0 ** x if x < 1024 else math.inf
        check(min(two, rho ** k))
    for i in range(1, math.ceil(1 / kappa) + 1):
        if not len(active()):
            break
        x = math.ceil(rho ** (i * k))
        for _ in range(3):
            trial(x)
        check(min(rho ** ((i + 1) * k), rho))
    if len(active()):
        trial(math.ceil(rho))
    survivors = active()
    state.set_status(survivors, BAD, "bad")
    colored = targets[state.status[targets] == COLORED]
    term = np.concatenate(terminated) if terminated else np.zeros(0, np.int64)
    return SlackColorResult(state.round - start_round, colored, term, survivors, rho, bound)
