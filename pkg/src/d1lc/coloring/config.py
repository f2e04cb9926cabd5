import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from ..acd import EpsilonLedger


@dataclass(frozen=True)
class PipelineConfig:
    ledger: EpsilonLedger = field(default_factory=EpsilonLedger.desk)
    p_gen: float = 0.1
    kappa: Fraction = Fraction(1, 2)
    beta: int = 2                  # SlackColor initial rounds = ceil(beta ln(4 beta))
    d_min: int = 32                # constant degree floor
    log_floor: bool = False        # use ceil(log2(D)^exponent) as the floor
    remainder_rounds: int = 50     # random trials before greedy on the low-degree rest
    variant: str = "discrepant"    # classifier variant
    ell: int = None                # override for the low-slack threshold
    max_rounds: int = None

    def __post_init__(self):
        if not 0 <= self.p_gen < 1:
            raise ValueError("p_gen must lie in [0, 1)")
        object.__setattr__(self, "kappa", Fraction(self.kappa))

    @classmethod
    def desk(cls, **kw):
        return cls(**kw)

    @classmethod
    def faithful(cls, **kw):
        kw.setdefault("ledger", EpsilonLedger.faithful())
        kw.setdefault("log_floor", True)
        kw.setdefault("d_min", 1)
        kw.setdefault("kappa", Fraction(1, 4))
        return cls(**kw)

    def with_(self, **kw):
        return replace(self, **kw)

    def degree_floor(self, delta):
        if self.log_floor:
            if delta < 2:
                return max(self.d_min, 1)
            return max(self.d_min, math.ceil(math.log2(delta) ** float(self.ledger.degree_floor_exponent)))
        return self.d_min

    def ell_for(self, max_degree):
        return self.ell if self.ell is not None else self.ledger.ell(max_degree)

    def s_min_floor(self):
        return max(2, math.floor(1 / self.kappa) + 1)


def degree_classes(n, config):
    """Sequence D0 = n > D1 > ... of class floors; stops when the floor no
    longer decreases."""
    seq = [n]
    while True:
        nxt = config.degree_floor(seq[-1])
        if nxt >= seq[-1]:
            return seq
        seq.append(nxt)
