from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from ..engine import UNCOLORED

SLACK_QUANTILES = (0.0, 0.1, 0.5, 0.9, 1.0)


@dataclass
class PhaseRecord:
    phase: str
    rounds: int = 0
    colored: int = 0
    bad: int = 0
    max_bad_component: int = 0
    conflicts: int = 0
    slack: tuple = ()       # quantiles of the uncolored nodes' slack at phase end
    extra: dict = field(default_factory=dict)


def slack_quantiles(state):
    left = state.status == UNCOLORED
    if not left.any():
        return ()
    s = (state.pal_size - state.udeg)[left]
    return tuple(float(x) for x in np.quantile(s, SLACK_QUANTILES))


class PhaseLog:
    """Collects one record per named phase of a run on a SimState."""

    def __init__(self, state=None):
        self.state = state
        self.records = []

    @contextmanager
    def phase(self, name, state=None):
        st = state if state is not None else self.state
        r0, c0 = st.round, st.commits
        rec = PhaseRecord(name)
        yield rec
        rec.rounds = st.round - r0
        rec.colored = st.commits - c0
        rec.slack = slack_quantiles(st)
        self.records.append(rec)
